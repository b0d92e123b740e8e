fn main() {
    std::process::exit(strkit::cli::cli_main(std::env::args_os()));
}
