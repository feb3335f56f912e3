fn main() {
    std::process::exit(soqal::cli::run(std::env::args_os()));
}
