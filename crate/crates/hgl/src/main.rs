fn main() {
    std::process::exit(hgl::cli::run(std::env::args_os()));
}
