fn main() {
    std::process::exit(halfspace_green::cli::run());
}
