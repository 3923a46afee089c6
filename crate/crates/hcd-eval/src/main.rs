fn main() {
    std::process::exit(hcd_eval::cli::run(std::env::args_os()));
}
