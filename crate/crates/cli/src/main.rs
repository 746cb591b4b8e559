fn main() {
    std::process::exit(glue_polling_cli::cli::main_with_args(std::env::args_os()));
}
