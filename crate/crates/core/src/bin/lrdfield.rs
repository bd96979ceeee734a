fn main() {
    std::process::exit(lrdfield::cli::run(std::env::args_os()));
}
