fn main() {
    std::process::exit(hh_painleve::cli::run(std::env::args_os()));
}
