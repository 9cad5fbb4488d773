fn main() {
    std::process::exit(sepaint::cli::run(std::env::args_os()));
}
