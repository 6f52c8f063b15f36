//! Telemetry hub for wearable and environment sensor nodes.
//!
//! Nodes speak newline-delimited JSON over a stream socket (see [`wire`]).
//! The [`Hub`] keeps the node registry and an append-only per-node sample
//! store behind a single writer lock, flags silent nodes as dropped, and can
//! snapshot itself to a checksummed file.

mod hub;
mod server;
mod snapshot;
pub mod wire;

pub use hub::{Ack, Hub, HubConfig, DEFAULT_DROPOUT_TIMEOUT};
pub use server::{GatewayServer, ShutdownHandle};
pub use wire::{Reply, TelemetryFrame, WireFrame};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comfort::ComfortError;
use crate::node::NodeId;
use crate::predictor::{EnvSample, PhysioSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Wearable,
    Environment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Active,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub node_id: NodeId,
    pub kind: NodeKind,
    pub registered_at: f64,
    pub last_seen: f64,
    pub status: NodeStatus,
}

/// A stored reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sample {
    Physio(PhysioSample<f64>),
    Env(EnvSample<f64>),
}

impl Sample {
    pub fn timestamp(&self) -> f64 {
        match self {
            Sample::Physio(p) => p.timestamp,
            Sample::Env(e) => e.timestamp,
        }
    }

    pub fn as_physio(&self) -> Option<&PhysioSample<f64>> {
        match self {
            Sample::Physio(p) => Some(p),
            Sample::Env(_) => None,
        }
    }

    pub fn as_env(&self) -> Option<&EnvSample<f64>> {
        match self {
            Sample::Env(e) => Some(e),
            Sample::Physio(_) => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("unsupported schema version {0}")]
    UnsupportedVersion(u64),
    #[error("unauthorized")]
    Unauthorized,
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("node {node} already registered as {existing:?}")]
    DuplicateKindMismatch { node: NodeId, existing: NodeKind },
    #[error("stale timestamp from {node}: {got} is not after {last}")]
    StaleTimestamp { node: NodeId, last: f64, got: f64 },
    #[error("reading out of range: {0}")]
    OutOfRange(#[from] ComfortError),
    #[error("query window is inverted ({from} > {to})")]
    InvalidWindow { from: f64, to: f64 },
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GatewayError {
    /// Short code sent back to nodes in `{"status":"err","code":...}`.
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::MalformedFrame(_) => "malformed",
            GatewayError::UnsupportedVersion(_) => "unsupported_version",
            GatewayError::Unauthorized => "unauthorized",
            GatewayError::UnknownNode(_) => "unknown_node",
            GatewayError::DuplicateKindMismatch { .. } => "kind_mismatch",
            GatewayError::StaleTimestamp { .. } => "stale_timestamp",
            GatewayError::OutOfRange(_) => "out_of_range",
            GatewayError::InvalidWindow { .. } => "invalid_window",
            GatewayError::CorruptSnapshot(_) => "corrupt_snapshot",
            GatewayError::Io(_) => "io",
        }
    }
}
