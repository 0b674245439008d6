fn main() {
    std::process::exit(phcontrol::cli::run(std::env::args_os()));
}
