fn main() {
    std::process::exit(rowsolve::harness::cli::cli_main(std::env::args_os()));
}
