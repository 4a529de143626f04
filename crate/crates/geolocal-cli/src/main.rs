fn main() {
    std::process::exit(geolocal_cli::run_cli(std::env::args_os()));
}
