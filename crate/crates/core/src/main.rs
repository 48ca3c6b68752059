fn main() {
    std::process::exit(mwqubit::cli::run(std::env::args_os()));
}
