use std::collections::BTreeMap;
use std::path::Path;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::wire::{Payload, Reply, TelemetryFrame, WireFrame};
use super::{snapshot, GatewayError, NodeKind, NodeRecord, NodeStatus, Sample};
use crate::node::NodeId;
use crate::predictor::{EnvSample, PhysioSample};

/// Seconds of silence after which a node is considered dropped.
pub const DEFAULT_DROPOUT_TIMEOUT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubConfig {
    pub token: String,
    pub dropout_timeout: f64,
}

impl HubConfig {
    pub fn new(token: impl Into<String>) -> Self {
        HubConfig {
            token: token.into(),
            dropout_timeout: DEFAULT_DROPOUT_TIMEOUT,
        }
    }
}

/// Acknowledgement for an accepted data frame; `seq` counts the node's accepted frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Ack {
    pub node_id: NodeId,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(super) struct NodeEntry {
    pub record: NodeRecord,
    pub accepted: u64,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub(super) struct HubState {
    pub nodes: BTreeMap<NodeId, NodeEntry>,
    /// Latest timestamp the hub has accepted from any node.
    pub clock: f64,
}

/// Node registry and per-node append-only sample store.
#[derive(Debug)]
pub struct Hub {
    config: HubConfig,
    state: RwLock<HubState>,
}

impl Hub {
    pub fn new(config: HubConfig) -> Self {
        Hub {
            config,
            state: RwLock::new(HubState::default()),
        }
    }

    pub fn config(&self) -> &HubConfig {
        &self.config
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, HubState> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, HubState> {
        self.state.write().unwrap_or_else(|e| e.into_inner())
    }

    fn authorize(&self, token: &str) -> Result<(), GatewayError> {
        if token == self.config.token {
            Ok(())
        } else {
            Err(GatewayError::Unauthorized)
        }
    }

    /// Registers a node, or returns the existing record when id and kind match.
    ///
    /// `now` defaults to the hub clock.
    pub fn register_node(
        &self,
        node_id: NodeId,
        kind: NodeKind,
        token: &str,
        now: Option<f64>,
    ) -> Result<NodeRecord, GatewayError> {
        self.authorize(token)?;
        let mut st = self.write();
        let now = now.unwrap_or(st.clock);
        if let Some(entry) = st.nodes.get(&node_id) {
            if entry.record.kind != kind {
                return Err(GatewayError::DuplicateKindMismatch {
                    node: node_id,
                    existing: entry.record.kind,
                });
            }
            return Ok(entry.record.clone());
        }
        let record = NodeRecord {
            node_id: node_id.clone(),
            kind,
            registered_at: now,
            last_seen: now,
            status: NodeStatus::Active,
        };
        st.nodes.insert(
            node_id,
            NodeEntry {
                record: record.clone(),
                accepted: 0,
                samples: Vec::new(),
            },
        );
        Ok(record)
    }

    /// Parses, validates and stores one data frame.
    pub fn ingest_frame(&self, raw: &[u8]) -> Result<Ack, GatewayError> {
        let wire = WireFrame::parse(raw)?;
        if wire.op != "data" {
            return Err(GatewayError::MalformedFrame(format!("expected op `data`, got `{}`", wire.op)));
        }
        self.ingest_wire(&wire)
    }

    fn ingest_wire(&self, wire: &WireFrame) -> Result<Ack, GatewayError> {
        self.authorize(&wire.token)?;
        let node_id = wire.node_id()?;

        let mut st = self.write();
        let entry = st
            .nodes
            .get_mut(&node_id)
            .ok_or_else(|| GatewayError::UnknownNode(node_id.to_string()))?;
        let frame = TelemetryFrame::from_wire(wire, entry.record.kind)?;

        if let Some(last) = entry.samples.last().map(Sample::timestamp) {
            if frame.timestamp <= last {
                return Err(GatewayError::StaleTimestamp {
                    node: node_id,
                    last,
                    got: frame.timestamp,
                });
            }
        }

        let sample = match frame.payload {
            Payload::Physio { hr, gsr, clo, met } => {
                let s = PhysioSample {
                    occupant_id: node_id.clone(),
                    timestamp: frame.timestamp,
                    heart_rate: hr,
                    gsr,
                    clothing_insulation: clo,
                    metabolic_rate: met,
                };
                s.validate()?;
                Sample::Physio(s)
            }
            Payload::Env { ta, mrt, rh, vel } => {
                let s = EnvSample {
                    timestamp: frame.timestamp,
                    air_temp: ta,
                    mean_radiant_temp: mrt,
                    rel_humidity: rh,
                    air_velocity: vel,
                };
                s.validate()?;
                Sample::Env(s)
            }
        };

        entry.samples.push(sample);
        entry.accepted += 1;
        entry.record.last_seen = entry.record.last_seen.max(frame.timestamp);
        entry.record.status = NodeStatus::Active;
        let seq = entry.accepted;
        st.clock = st.clock.max(frame.timestamp);
        Ok(Ack { node_id, seq })
    }

    /// Handles one protocol line of any op and produces the reply.
    pub fn handle_line(&self, raw: &[u8]) -> Reply {
        let result = WireFrame::parse(raw).and_then(|wire| match wire.op.as_str() {
            "register" => {
                let kind = wire
                    .kind
                    .ok_or_else(|| GatewayError::MalformedFrame("missing `kind`".into()))?;
                let rec = self.register_node(wire.node_id()?, kind, &wire.token, wire.t)?;
                Ok(self.accepted_count(&rec.node_id).unwrap_or(0))
            }
            "data" => self.ingest_wire(&wire).map(|ack| ack.seq),
            other => Err(GatewayError::MalformedFrame(format!("unknown op `{other}`"))),
        });
        match result {
            Ok(seq) => Reply::Ok { seq },
            Err(e) => Reply::Err { code: e.code().into() },
        }
    }

    /// Samples with `from <= timestamp <= to`, oldest first.
    pub fn query_window(&self, node_id: &NodeId, from: f64, to: f64) -> Result<Vec<Sample>, GatewayError> {
        if !(from <= to) {
            return Err(GatewayError::InvalidWindow { from, to });
        }
        let st = self.read();
        let entry = st
            .nodes
            .get(node_id)
            .ok_or_else(|| GatewayError::UnknownNode(node_id.to_string()))?;
        Ok(window(&entry.samples, from, to).to_vec())
    }

    /// Windows for several nodes, read under one consistent view.
    pub fn query_many<'a>(
        &self,
        node_ids: impl IntoIterator<Item = &'a NodeId>,
        from: f64,
        to: f64,
    ) -> Result<BTreeMap<NodeId, Vec<Sample>>, GatewayError> {
        if !(from <= to) {
            return Err(GatewayError::InvalidWindow { from, to });
        }
        let st = self.read();
        node_ids
            .into_iter()
            .map(|id| {
                let entry = st
                    .nodes
                    .get(id)
                    .ok_or_else(|| GatewayError::UnknownNode(id.to_string()))?;
                Ok((id.clone(), window(&entry.samples, from, to).to_vec()))
            })
            .collect()
    }

    /// Marks nodes silent for longer than the dropout timeout; returns the newly dropped.
    pub fn sweep_dropouts(&self, now: f64) -> Vec<NodeId> {
        let timeout = self.config.dropout_timeout;
        let mut st = self.write();
        let mut dropped = Vec::new();
        for (id, entry) in st.nodes.iter_mut() {
            if entry.record.status == NodeStatus::Active && now - entry.record.last_seen > timeout {
                entry.record.status = NodeStatus::Dropped;
                dropped.push(id.clone());
            }
        }
        dropped
    }

    pub fn node(&self, node_id: &NodeId) -> Option<NodeRecord> {
        self.read().nodes.get(node_id).map(|e| e.record.clone())
    }

    pub fn nodes(&self) -> Vec<NodeRecord> {
        self.read().nodes.values().map(|e| e.record.clone()).collect()
    }

    pub fn accepted_count(&self, node_id: &NodeId) -> Option<u64> {
        self.read().nodes.get(node_id).map(|e| e.accepted)
    }

    pub fn stored_count(&self, node_id: &NodeId) -> Option<usize> {
        self.read().nodes.get(node_id).map(|e| e.samples.len())
    }

    pub fn total_samples(&self) -> usize {
        self.read().nodes.values().map(|e| e.samples.len()).sum()
    }

    /// Latest accepted timestamp across all nodes.
    pub fn clock(&self) -> f64 {
        self.read().clock
    }

    /// Writes registry and samples to a single checksummed file.
    pub fn snapshot(&self, path: impl AsRef<Path>) -> Result<(), GatewayError> {
        // the read lock excludes writers for the duration of the encode
        let st = self.read();
        snapshot::write(path.as_ref(), &st)
    }

    pub fn restore(path: impl AsRef<Path>, config: HubConfig) -> Result<Self, GatewayError> {
        let state = snapshot::read(path.as_ref())?;
        Ok(Hub {
            config,
            state: RwLock::new(state),
        })
    }
}

fn window(samples: &[Sample], from: f64, to: f64) -> &[Sample] {
    let lo = samples.partition_point(|s| s.timestamp() < from);
    let hi = samples.partition_point(|s| s.timestamp() <= to);
    &samples[lo..hi.max(lo)]
}
