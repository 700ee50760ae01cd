use clap::Parser;
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"))).with_writer(std::io::stderr).init();
    if let Err(e) = topiary_server::cli::run(topiary_server::cli::Cli::parse()).await {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
