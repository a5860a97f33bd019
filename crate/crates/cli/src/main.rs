fn main() {
    std::process::exit(uasflow_cli::main_with(std::env::args_os()));
}
