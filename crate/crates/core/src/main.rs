fn main() {
    std::process::exit(gauss_kj::cli::main_entry());
}
