fn main() {
    std::process::exit(dpm_cli::main_with_args(std::env::args_os()));
}
