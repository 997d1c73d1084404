fn main() {
    std::process::exit(buchi_eval::cli::run(std::env::args_os()));
}
