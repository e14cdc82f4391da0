fn main() {
    std::process::exit(record_erasure::cli::run(std::env::args_os()));
}
