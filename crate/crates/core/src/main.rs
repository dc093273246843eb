fn main() {
    std::process::exit(fockflow::cli::main_with_args(std::env::args_os()));
}
