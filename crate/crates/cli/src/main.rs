fn main() {
    std::process::exit(corrpf_cli::run(std::env::args_os()));
}
