fn main() {
    std::process::exit(qhmetric::cli::run(std::env::args_os()));
}
