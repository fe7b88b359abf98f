fn main() {
    std::process::exit(lean_align::cli::run());
}
