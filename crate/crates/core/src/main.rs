fn main() {
    std::process::exit(atomic_mimo::harness::cli_main(std::env::args_os()));
}
