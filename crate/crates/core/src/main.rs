fn main() {
    std::process::exit(flag_pingpong::cli::run(std::env::args_os()));
}
