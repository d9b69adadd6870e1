fn main() {
    std::process::exit(hardyweave::cli::main_with_args(std::env::args_os()));
}
