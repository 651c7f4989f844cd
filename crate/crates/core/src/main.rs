fn main() {
    std::process::exit(multipole_trap::cli::run(std::env::args_os()));
}
