fn main() {
    std::process::exit(toral::cli::main_entry(std::env::args_os()));
}
