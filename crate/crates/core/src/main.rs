fn main() {
    std::process::exit(maharam::cli::main_with_args(std::env::args_os()));
}
