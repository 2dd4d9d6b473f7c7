fn main() {
    std::process::exit(idprice::cli::run(std::env::args_os()));
}
