fn main() {
    std::process::exit(autotemplate::cli::run());
}
