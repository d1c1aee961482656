fn main() {
    std::process::exit(mlclust::cli::run(std::env::args_os()));
}
