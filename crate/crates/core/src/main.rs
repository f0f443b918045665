fn main() {
    std::process::exit(epi_lab::cli::main_from(std::env::args_os()));
}
