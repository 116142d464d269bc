fn main() {
    std::process::exit(leris::cli::main(std::env::args_os()));
}
