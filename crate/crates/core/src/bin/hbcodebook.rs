fn main() {
    std::process::exit(hbcodebook::harness::cli_main(std::env::args_os()));
}
