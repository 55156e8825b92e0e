use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap reports usage errors itself and exits with status 2
    let cli = penn::cli::Cli::parse();
    if let Err(e) = penn::cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
