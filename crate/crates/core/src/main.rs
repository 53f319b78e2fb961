fn main() {
    std::process::exit(proctens::cli::run_cli(std::env::args_os()));
}
