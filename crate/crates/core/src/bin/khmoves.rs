fn main() {
    std::process::exit(khmoves::cli::run(std::env::args_os()));
}
