fn main() {
    std::process::exit(jumpstop::cli::run());
}
