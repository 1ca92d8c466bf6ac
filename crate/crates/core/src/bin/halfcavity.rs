fn main() {
    std::process::exit(halfcavity::cli::run(std::env::args_os()));
}
