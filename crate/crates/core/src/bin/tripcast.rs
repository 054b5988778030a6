fn main() {
    std::process::exit(tripcast::cli::main_with_args(std::env::args_os()));
}
