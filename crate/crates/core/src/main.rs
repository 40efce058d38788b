fn main() {
    std::process::exit(teaching_style::cli::run(std::env::args_os()));
}
