use clap::Parser;

fn main() {
    let cli = stereo_uq::cli::Cli::parse();
    if let Err(e) = stereo_uq::cli::init_threads().and_then(|()| stereo_uq::cli::run(cli)) {
        eprintln!("stereo-uq: {e}");
        std::process::exit(1);
    }
}
