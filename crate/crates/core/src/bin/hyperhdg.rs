fn main() {
    std::process::exit(hyperhdg::cli::run(std::env::args_os()));
}
