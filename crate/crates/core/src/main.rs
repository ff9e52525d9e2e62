fn main() {
    std::process::exit(darkphase::cli::run(std::env::args_os()));
}
