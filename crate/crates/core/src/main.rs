fn main() {
    std::process::exit(navgen::cli::main());
}
