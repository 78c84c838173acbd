fn main() {
    std::process::exit(libtrim::cli::run(std::env::args_os()));
}
