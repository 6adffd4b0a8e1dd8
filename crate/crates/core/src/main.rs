fn main() {
    std::process::exit(rrank::cli::run(std::env::args_os()));
}
