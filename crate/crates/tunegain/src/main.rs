fn main() {
    std::process::exit(tunegain::cli::main_with_args(std::env::args_os()));
}
