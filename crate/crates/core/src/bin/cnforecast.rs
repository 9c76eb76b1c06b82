fn main() {
    std::process::exit(cnforecast::cli::run(std::env::args_os()));
}
