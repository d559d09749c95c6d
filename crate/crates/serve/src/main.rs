use clap::Parser;

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    vizrec_serve::cli::run(vizrec_serve::cli::Cli::parse())
}
