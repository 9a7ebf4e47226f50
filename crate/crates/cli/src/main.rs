fn main() {
    std::process::exit(dmsol_cli::run(std::env::args_os()));
}
