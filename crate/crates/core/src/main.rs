fn main() {
    std::process::exit(mtgame::cli::main_with_args(std::env::args_os()));
}
