fn main() {
    std::process::exit(breakwatch::cli::main());
}
