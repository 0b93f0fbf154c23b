fn main() {
    std::process::exit(mmhoi_geom::cli::run(std::env::args_os()));
}
