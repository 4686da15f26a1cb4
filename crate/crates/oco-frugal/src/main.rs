fn main() {
    std::process::exit(oco_frugal::experiments::cli::cli_main(std::env::args()));
}
