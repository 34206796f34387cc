fn main() {
    std::process::exit(affinekit::cli::run(std::env::args_os()));
}
