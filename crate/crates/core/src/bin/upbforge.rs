fn main() {
    std::process::exit(upbforge::cli::main_with_args(std::env::args_os()));
}
