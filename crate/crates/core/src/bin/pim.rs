fn main() {
    std::process::exit(pim_core::cli::run(std::env::args_os()));
}
