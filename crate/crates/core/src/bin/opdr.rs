fn main() {
    std::process::exit(opdr::cli::main_with_args(std::env::args_os()));
}
