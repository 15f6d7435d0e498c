fn main() {
    std::process::exit(forlog::cli::main());
}
