fn main() {
    std::process::exit(gror_cli::run(std::env::args_os()));
}
