fn main() {
    std::process::exit(qsep_cli::run_cli(std::env::args_os()));
}
