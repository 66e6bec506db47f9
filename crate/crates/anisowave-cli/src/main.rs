fn main() {
    std::process::exit(anisowave_cli::run(std::env::args_os()));
}
