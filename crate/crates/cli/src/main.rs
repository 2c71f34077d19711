fn main() {
    std::process::exit(singlab_cli::run(std::env::args_os()));
}
