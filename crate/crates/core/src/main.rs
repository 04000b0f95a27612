fn main() {
    std::process::exit(ssfg::cli::main_with_args(std::env::args_os()));
}
