fn main() {
    std::process::exit(invscheme::cli::main_with_args(std::env::args_os()));
}
