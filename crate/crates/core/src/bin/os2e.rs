fn main() {
    std::process::exit(os2e::cli::run(std::env::args_os()));
}
