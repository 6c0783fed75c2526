fn main() {
    std::process::exit(cdec::cli::run(std::env::args_os()));
}
