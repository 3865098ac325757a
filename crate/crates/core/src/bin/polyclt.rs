fn main() {
    std::process::exit(polyclt::cli::run(std::env::args_os()));
}
