fn main() {
    std::process::exit(waveleton::cli::run(std::env::args_os()));
}
