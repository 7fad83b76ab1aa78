fn main() {
    std::process::exit(pampa_qspr::cli::run(std::env::args_os()));
}
