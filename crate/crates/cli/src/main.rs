fn main() {
    std::process::exit(digimkt_cli::run(std::env::args_os()));
}
