fn main() {
    std::process::exit(poachgrid_cli::run(std::env::args_os()));
}
