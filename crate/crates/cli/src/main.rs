fn main() {
    std::process::exit(klap_cli::run(std::env::args_os()));
}
