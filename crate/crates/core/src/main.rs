fn main() {
    std::process::exit(armopt::cli::run(std::env::args_os()));
}
