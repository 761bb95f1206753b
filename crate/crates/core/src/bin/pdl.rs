fn main() {
    std::process::exit(pdl::cli::main_with_args());
}
