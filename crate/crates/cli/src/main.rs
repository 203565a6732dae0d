fn main() {
    std::process::exit(latmrf_cli::run(std::env::args_os().skip(1)));
}
