fn main() {
    std::process::exit(aloe_ser::cli::main_with_args(std::env::args_os()));
}
