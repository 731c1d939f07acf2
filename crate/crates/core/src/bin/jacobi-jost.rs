fn main() {
    std::process::exit(jacobi_jost::cli::run(std::env::args_os()));
}
