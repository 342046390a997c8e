fn main() {
    std::process::exit(photocount_cli::run());
}
