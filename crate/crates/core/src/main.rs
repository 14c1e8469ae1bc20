fn main() {
    std::process::exit(ehcurv::cli::main_with(std::env::args_os()));
}
