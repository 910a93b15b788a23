use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use thinkaloud_server::provider::{self, RemoteSettings};
use thinkaloud_server::{router, AppState};
use tracing::info;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Provider {
    Rules,
    Remote,
}

#[derive(Debug, Parser)]
#[command(name = "thinkaloud-server", about = "Serve live think-aloud annotation sessions")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, value_enum, default_value_t = Provider::Rules)]
    provider: Provider,
    /// Rule table (TOML) for the rules provider.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Directory for `<session-id>.events.jsonl` files.
    #[arg(long, default_value = "logs")]
    log_dir: PathBuf,
    #[arg(long, env = "THINKALOUD_ORACLE_URL")]
    oracle_url: Option<String>,
    #[arg(long, env = "THINKALOUD_ORACLE_KEY", hide_env_values = true)]
    oracle_key: Option<String>,
    #[arg(long, default_value = "gpt-4o")]
    model: String,
    /// Override the built-in prompt templates.
    #[arg(long)]
    prompts: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    oracle_timeout_ms: u64,
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();

    let oracle = match args.provider {
        Provider::Rules => provider::rule_oracle(args.rules.as_deref())?,
        Provider::Remote => provider::remote_oracle(RemoteSettings {
            endpoint: args.oracle_url,
            api_key: args.oracle_key,
            model: args.model,
            prompts_dir: args.prompts,
            timeout: Duration::from_millis(args.oracle_timeout_ms),
        })?,
    };
    std::fs::create_dir_all(&args.log_dir).with_context(|| format!("creating {}", args.log_dir.display()))?;
    let state = AppState::new(oracle, Some(args.log_dir));

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.listen).await?;
        info!(addr = %args.listen, "listening");
        let shutdown = state.clone();
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        shutdown.shutdown();
        Ok(())
    })
}
