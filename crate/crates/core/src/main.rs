fn main() {
    std::process::exit(measdep::cli::main_with_args(std::env::args_os()));
}
