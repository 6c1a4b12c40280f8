fn main() {
    std::process::exit(pnpcert::cli::run(std::env::args_os()));
}
