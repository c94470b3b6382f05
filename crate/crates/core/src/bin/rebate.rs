fn main() {
    std::process::exit(rebate_core::cli::cli_main(std::env::args()));
}
