use std::f64::consts::PI;

use crate::sigcore::RngStream;

/// Above this concentration the wrapped normal `N(mu, 1/kappa)` is used; the
/// two agree to `O(1/kappa)` and Best-Fisher loses precision in `r - 1`.
const NORMAL_LIMIT: f64 = 1e8;

/// Draw an angle from the von Mises distribution VM(mu, kappa) with the
/// Best-Fisher rejection sampler. `kappa = 0` is the uniform circle.
pub fn sample_von_mises(mu: f64, kappa: f64, rng: &mut RngStream) -> f64 {
    if kappa < 1e-12 {
        return PI * (2.0 * rng.uniform() - 1.0);
    }
    if kappa > NORMAL_LIMIT {
        return mu + rng.standard_normal() / kappa.sqrt();
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1 = rng.uniform();
        let u2 = rng.uniform();
        let z = (PI * u1).cos();
        let f = ((1.0 + r * z) / (r + z)).clamp(-1.0, 1.0);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3 = rng.uniform();
            let angle = f.acos();
            return if u3 > 0.5 { mu + angle } else { mu - angle };
        }
    }
}
