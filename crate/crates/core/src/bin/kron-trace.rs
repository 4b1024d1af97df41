fn main() {
    std::process::exit(kron_trace::cli::run(std::env::args_os()));
}
