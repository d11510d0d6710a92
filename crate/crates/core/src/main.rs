fn main() {
    std::process::exit(aipw_oal::cli::run(std::env::args_os()));
}
