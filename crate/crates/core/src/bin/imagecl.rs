fn main() {
    std::process::exit(imagecl::cli::main_with_args(std::env::args_os()));
}
