fn main() {
    std::process::exit(monoflow::cli::dispatch(std::env::args()));
}
