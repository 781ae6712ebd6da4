fn main() {
    std::process::exit(dispersal_harvest::cli::run(std::env::args_os()));
}
