fn main() {
    std::process::exit(wcinvest::cli::run_command(std::env::args_os()));
}
