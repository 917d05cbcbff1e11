fn main() {
    std::process::exit(strictjump::cli::main_with_args(std::env::args_os()));
}
