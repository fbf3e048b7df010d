fn main() {
    std::process::exit(carnot::cli::main_with_args(std::env::args_os()));
}
