fn main() {
    std::process::exit(cdr_cli::run(std::env::args_os()));
}
