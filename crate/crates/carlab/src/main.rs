fn main() {
    std::process::exit(carlab::cli::main_with_args(std::env::args_os()));
}
