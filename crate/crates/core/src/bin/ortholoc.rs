fn main() {
    std::process::exit(ortholoc::cli::run_from(std::env::args_os()));
}
