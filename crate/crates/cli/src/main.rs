fn main() {
    std::process::exit(scalefree_cli::run(std::env::args_os()));
}
