fn main() {
    std::process::exit(fmnet::cli::run(std::env::args_os()));
}
