fn main() {
    std::process::exit(gasadapt::cli::run_command(std::env::args_os()));
}
