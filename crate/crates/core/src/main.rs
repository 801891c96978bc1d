fn main() {
    std::process::exit(gal_core::cli::main_with_args(std::env::args_os()));
}
