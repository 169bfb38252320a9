fn main() {
    std::process::exit(cos2phi_cli::run_command(std::env::args_os()));
}
