fn main() {
    std::process::exit(cvqkd_cli::run_cli(std::env::args_os()));
}
