fn main() {
    std::process::exit(zics_cli::main_with_args(std::env::args_os()));
}
