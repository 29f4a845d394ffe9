fn main() {
    std::process::exit(aloha_control::cli::main_with_args(std::env::args_os()));
}
