fn main() {
    std::process::exit(viscosity::cli::main_with_args(std::env::args_os()));
}
