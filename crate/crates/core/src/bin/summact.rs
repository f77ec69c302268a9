fn main() {
    std::process::exit(summact::pipeline::cli::run(std::env::args_os()));
}
