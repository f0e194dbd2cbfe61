fn main() {
    std::process::exit(modality_bridge::cli::run(std::env::args_os()));
}
