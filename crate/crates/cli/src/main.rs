fn main() {
    std::process::exit(sgedne_cli::run(std::env::args_os()));
}
