fn main() {
    let code = sigband::cli::run(std::env::args_os());
    std::process::exit(code);
}
