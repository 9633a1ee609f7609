fn main() {
    std::process::exit(ulrs_cli::run_cli(std::env::args_os()));
}
