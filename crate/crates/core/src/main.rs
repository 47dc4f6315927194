fn main() {
    std::process::exit(chaoskey::cli::run(std::env::args_os()));
}
