fn main() {
    std::process::exit(homdyn::cli::main_with_args(std::env::args_os()));
}
