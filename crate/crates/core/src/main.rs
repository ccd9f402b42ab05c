fn main() {
    std::process::exit(cloudcast::cli::main_with_args(std::env::args_os()));
}
