fn main() {
    std::process::exit(escapeflow_cli::run_cli(std::env::args_os()));
}
