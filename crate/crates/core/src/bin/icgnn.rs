fn main() {
    std::process::exit(icgnn::cli::run(std::env::args_os()));
}
