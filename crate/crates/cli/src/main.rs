fn main() {
    std::process::exit(qdesign_cli::run(std::env::args()));
}
