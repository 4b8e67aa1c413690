//! Square QAM constellations with per-axis Gray labels.
//!
//! Points are stored in row-major order over the in-phase then quadrature
//! amplitude levels, both ascending. Point `i * m + q` sits at
//! `(2i - m + 1) + j(2q - m + 1)` before scaling and carries the label
//! `gray(i) << (b/2) | gray(q)`, so neighbours along either axis differ in
//! exactly one bit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "QAM4")]
    Qam4,
    #[serde(rename = "QAM16")]
    Qam16,
    #[serde(rename = "QAM256")]
    Qam256,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qam4 => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam256 => 8,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qam4 => "QAM4",
            Modulation::Qam16 => "QAM16",
            Modulation::Qam256 => "QAM256",
        })
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "QAM4" | "4QAM" | "QPSK" => Ok(Modulation::Qam4),
            "QAM16" | "16QAM" => Ok(Modulation::Qam16),
            "QAM256" | "256QAM" => Ok(Modulation::Qam256),
            _ => Err(Error::Config(format!("unknown modulation '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    scheme: Modulation,
    points: Vec<C64>,
    bits_per_symbol: usize,
    /// `labels[i]` is the bit label of `points[i]`, MSB first.
    labels: Vec<u32>,
    /// `index_of_label[l]` is the point carrying label `l`.
    index_of_label: Vec<usize>,
    min_distance: f64,
}

fn gray(n: u32) -> u32 {
    n ^ (n >> 1)
}

/// Build a unit-energy square QAM constellation with Gray labels.
pub fn make_constellation(scheme: Modulation) -> Constellation {
    let bits_per_symbol = scheme.bits_per_symbol();
    let side = 1usize << (bits_per_symbol / 2);
    let half_bits = bits_per_symbol / 2;
    let level = |i: usize| (2 * i) as f64 - (side as f64 - 1.0);
    // Mean energy of the odd-integer grid: 2 * (side^2 - 1) / 3.
    let scale = (2.0 * ((side * side) as f64 - 1.0) / 3.0).sqrt().recip();

    let mut points = Vec::with_capacity(side * side);
    let mut labels = Vec::with_capacity(side * side);
    for i in 0..side {
        for q in 0..side {
            points.push(C64::new(level(i) * scale, level(q) * scale));
            labels.push((gray(i as u32) << half_bits) | gray(q as u32));
        }
    }
    let mut index_of_label = vec![0; points.len()];
    for (idx, &label) in labels.iter().enumerate() {
        index_of_label[label as usize] = idx;
    }

    Constellation {
        scheme,
        points,
        bits_per_symbol,
        labels,
        index_of_label,
        min_distance: 2.0 * scale,
    }
}

impl Constellation {
    pub fn scheme(&self) -> Modulation {
        self.scheme
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn min_distance(&self) -> f64 {
        self.min_distance
    }

    pub fn label(&self, index: usize) -> u32 {
        self.labels[index]
    }

    pub fn index_of_label(&self, label: u32) -> usize {
        self.index_of_label[label as usize]
    }

    /// Index of the nearest point; ties go to the lowest index.
    pub fn nearest_index(&self, s: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (s - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn quantize(&self, s: C64) -> C64 {
        self.points[self.nearest_index(s)]
    }

    pub fn quantize_all(&self, v: &[C64]) -> Vec<C64> {
        v.iter().map(|&s| self.quantize(s)).collect()
    }

    /// Exact membership test (bitwise comparison against the stored points).
    pub fn index_of_point(&self, s: C64) -> Option<usize> {
        self.points.iter().position(|p| *p == s)
    }

    pub fn label_bits(&self, index: usize) -> impl Iterator<Item = bool> + '_ {
        let label = self.labels[index];
        (0..self.bits_per_symbol).rev().map(move |b| (label >> b) & 1 == 1)
    }

    /// Map a bit sequence onto symbols, `bits_per_symbol` bits (MSB first) each.
    pub fn modulate(&self, bits: &[bool]) -> Result<Vec<C64>> {
        modulate(bits, self)
    }

    pub fn demodulate_hard(&self, symbols: &[C64]) -> Vec<bool> {
        demodulate_hard(symbols, self)
    }
}

pub fn modulate(bits: &[bool], c: &Constellation) -> Result<Vec<C64>> {
    let bps = c.bits_per_symbol;
    if bits.len() % bps != 0 {
        return Err(Error::BitLength {
            len: bits.len(),
            bits_per_symbol: bps,
        });
    }
    Ok(bits
        .chunks_exact(bps)
        .map(|chunk| {
            let label = chunk.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
            c.points[c.index_of_label(label)]
        })
        .collect())
}

pub fn demodulate_hard(symbols: &[C64], c: &Constellation) -> Vec<bool> {
    let mut bits = Vec::with_capacity(symbols.len() * c.bits_per_symbol);
    for &s in symbols {
        bits.extend(c.label_bits(c.nearest_index(s)));
    }
    bits
}

/// Number of differing bits between the labels of two point indices.
pub fn bit_errors_between(c: &Constellation, sent: usize, detected: usize) -> u32 {
    (c.labels[sent] ^ c.labels[detected]).count_ones()
}
