fn main() {
    std::process::exit(finquake::cli::main_with_args(std::env::args_os()));
}
