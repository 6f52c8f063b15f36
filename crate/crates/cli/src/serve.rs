use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Args;
use serde::Deserialize;
use thermoloop::gateway::{GatewayServer, Hub, HubConfig, DEFAULT_DROPOUT_TIMEOUT};

#[derive(Args)]
pub struct ServeArgs {
    /// TOML file with any of: port, token, dropout_timeout, snapshot, snapshot_interval.
    #[arg(long, env = "THERMOLOOP_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "THERMOLOOP_PORT")]
    port: Option<u16>,
    /// Shared secret every frame must carry.
    #[arg(long, env = "THERMOLOOP_TOKEN")]
    token: Option<String>,
    /// Seconds of silence before a node is marked dropped.
    #[arg(long, env = "THERMOLOOP_DROPOUT_TIMEOUT")]
    dropout_timeout: Option<f64>,
    /// Snapshot file; restored at startup when present.
    #[arg(long, env = "THERMOLOOP_SNAPSHOT")]
    snapshot: Option<PathBuf>,
    /// Seconds between snapshots.
    #[arg(long, env = "THERMOLOOP_SNAPSHOT_INTERVAL")]
    snapshot_interval: Option<u64>,
    /// Bind address.
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    port: Option<u16>,
    token: Option<String>,
    dropout_timeout: Option<f64>,
    snapshot: Option<PathBuf>,
    snapshot_interval: Option<u64>,
}

pub fn run(args: ServeArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("serve: {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("serve: parsing {}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let port = args.port.or(file.port).unwrap_or(7400);
    let token = args
        .token
        .or(file.token)
        .context("serve: a shared token is required (--token or THERMOLOOP_TOKEN)")?;
    let dropout_timeout = args
        .dropout_timeout
        .or(file.dropout_timeout)
        .unwrap_or(DEFAULT_DROPOUT_TIMEOUT);
    anyhow::ensure!(dropout_timeout > 0.0, "serve: dropout timeout must be positive");
    let snapshot = args.snapshot.or(file.snapshot);
    let interval = args.snapshot_interval.or(file.snapshot_interval).unwrap_or(60);

    let config = HubConfig { token, dropout_timeout };
    let hub = match &snapshot {
        Some(path) if path.exists() => {
            Arc::new(Hub::restore(path, config).with_context(|| format!("serve: restoring {}", path.display()))?)
        }
        _ => Arc::new(Hub::new(config)),
    };

    let server = GatewayServer::bind((args.host.as_str(), port), hub.clone())
        .with_context(|| format!("serve: binding {}:{port}", args.host))?;
    eprintln!("listening on {}", server.local_addr()?);

    let sweeper = hub.clone();
    thread::spawn(move || loop {
        thread::sleep(Duration::from_secs(1));
        for id in sweeper.sweep_dropouts(sweeper.clock()) {
            eprintln!("node {id} dropped");
        }
    });
    if let Some(path) = snapshot {
        let hub = hub.clone();
        thread::spawn(move || loop {
            thread::sleep(Duration::from_secs(interval.max(1)));
            if let Err(e) = hub.snapshot(&path) {
                eprintln!("snapshot failed: {e}");
            }
        });
    }
    server.run().context("serve")?;
    Ok(())
}
