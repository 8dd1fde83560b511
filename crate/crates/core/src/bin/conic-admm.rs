fn main() {
    std::process::exit(conic_admm::cli::run(std::env::args_os()));
}
