fn main() {
    std::process::exit(forestcast::cli::run(std::env::args_os()));
}
