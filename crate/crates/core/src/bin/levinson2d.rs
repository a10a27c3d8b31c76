fn main() {
    std::process::exit(levinson2d::cli::run(std::env::args_os()));
}
