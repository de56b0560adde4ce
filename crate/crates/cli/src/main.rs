fn main() {
    std::process::exit(vf_cli::run(std::env::args_os()));
}
