fn main() {
    std::process::exit(migrasim::cli::run(std::env::args_os()));
}
