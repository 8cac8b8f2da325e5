fn main() {
    std::process::exit(interlock_core::cli::run(std::env::args_os()));
}
