fn main() {
    std::process::exit(scripttax::cli::run(std::env::args()));
}
