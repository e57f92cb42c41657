fn main() {
    std::process::exit(spheretv::cli::run(std::env::args_os()));
}
