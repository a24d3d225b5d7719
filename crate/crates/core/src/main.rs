fn main() {
    std::process::exit(infinitary::cli::main_with_args(std::env::args_os()));
}
