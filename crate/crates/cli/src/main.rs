fn main() {
    std::process::exit(alphaforge_cli::run(std::env::args_os()));
}
