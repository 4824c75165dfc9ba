fn main() {
    std::process::exit(mgmatte::cli::run(std::env::args_os()));
}
