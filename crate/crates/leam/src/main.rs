fn main() {
    std::process::exit(leam::cli::run(std::env::args_os()));
}
