//! Line protocol.
//!
//! One JSON object per line. Registration:
//! `{"v":1,"op":"register","node":"w-01","kind":"wearable","token":"..."}`.
//! Wearable data: `{"v":1,"op":"data","node":"w-01","t":100,"hr":72.0,"gsr":2.1,"clo":0.5,"met":1.2,"token":"..."}`;
//! environment data carries `ta`, `mrt`, `rh`, `vel` instead.
//! Replies are `{"status":"ok","seq":N}` or `{"status":"err","code":"..."}`.

use serde::{Deserialize, Serialize};

use super::{GatewayError, NodeKind};
use crate::node::NodeId;

pub const SCHEMA_VERSION: u64 = 1;

/// Flat wire representation shared by every message type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireFrame {
    pub v: u64,
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<NodeKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub met: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mrt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rh: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vel: Option<f64>,
    #[serde(default)]
    pub token: String,
}

impl WireFrame {
    pub fn register(node: &str, kind: NodeKind, token: &str) -> Self {
        WireFrame {
            v: SCHEMA_VERSION,
            op: "register".into(),
            node: Some(node.into()),
            kind: Some(kind),
            token: token.into(),
            ..Default::default()
        }
    }

    pub fn wearable(node: &str, t: f64, hr: f64, gsr: f64, clo: f64, met: f64, token: &str) -> Self {
        WireFrame {
            v: SCHEMA_VERSION,
            op: "data".into(),
            node: Some(node.into()),
            t: Some(t),
            hr: Some(hr),
            gsr: Some(gsr),
            clo: Some(clo),
            met: Some(met),
            token: token.into(),
            ..Default::default()
        }
    }

    pub fn environment(node: &str, t: f64, ta: f64, mrt: f64, rh: f64, vel: f64, token: &str) -> Self {
        WireFrame {
            v: SCHEMA_VERSION,
            op: "data".into(),
            node: Some(node.into()),
            t: Some(t),
            ta: Some(ta),
            mrt: Some(mrt),
            rh: Some(rh),
            vel: Some(vel),
            token: token.into(),
            ..Default::default()
        }
    }

    /// Serialized line, including the trailing newline.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("frame serializes");
        s.push('\n');
        s
    }

    pub fn parse(raw: &[u8]) -> Result<Self, GatewayError> {
        let text = std::str::from_utf8(raw).map_err(|e| GatewayError::MalformedFrame(e.to_string()))?;
        let text = text.trim_end_matches(['\n', '\r']);
        if text.contains('\n') {
            return Err(GatewayError::MalformedFrame("more than one line".into()));
        }
        let frame: WireFrame =
            serde_json::from_str(text).map_err(|e| GatewayError::MalformedFrame(e.to_string()))?;
        if frame.v != SCHEMA_VERSION {
            return Err(GatewayError::UnsupportedVersion(frame.v));
        }
        Ok(frame)
    }

    pub fn node_id(&self) -> Result<NodeId, GatewayError> {
        let raw = self
            .node
            .as_deref()
            .ok_or_else(|| GatewayError::MalformedFrame("missing node".into()))?;
        NodeId::new(raw).map_err(|e| GatewayError::MalformedFrame(e.to_string()))
    }
}

/// Reading carried by a data frame, resolved against the node's kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    Physio { hr: f64, gsr: f64, clo: f64, met: f64 },
    Env { ta: f64, mrt: f64, rh: f64, vel: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryFrame {
    pub schema_version: u64,
    pub node_id: NodeId,
    pub timestamp: f64,
    pub payload: Payload,
    pub auth_token: String,
}

fn field(v: Option<f64>, name: &str) -> Result<f64, GatewayError> {
    v.ok_or_else(|| GatewayError::MalformedFrame(format!("missing `{name}`")))
}

impl TelemetryFrame {
    /// Interprets a `data` frame for a node of the given kind.
    pub fn from_wire(frame: &WireFrame, kind: NodeKind) -> Result<Self, GatewayError> {
        if frame.op != "data" {
            return Err(GatewayError::MalformedFrame(format!("unexpected op `{}`", frame.op)));
        }
        let timestamp = field(frame.t, "t")?;
        if !timestamp.is_finite() {
            return Err(GatewayError::MalformedFrame("non-finite timestamp".into()));
        }
        let payload = match kind {
            NodeKind::Wearable => Payload::Physio {
                hr: field(frame.hr, "hr")?,
                gsr: field(frame.gsr, "gsr")?,
                clo: field(frame.clo, "clo")?,
                met: field(frame.met, "met")?,
            },
            NodeKind::Environment => Payload::Env {
                ta: field(frame.ta, "ta")?,
                mrt: field(frame.mrt, "mrt")?,
                rh: field(frame.rh, "rh")?,
                vel: field(frame.vel, "vel")?,
            },
        };
        Ok(TelemetryFrame {
            schema_version: frame.v,
            node_id: frame.node_id()?,
            timestamp,
            payload,
            auth_token: frame.token.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Reply {
    Ok { seq: u64 },
    Err { code: String },
}

impl Reply {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("reply serializes");
        s.push('\n');
        s
    }

    pub fn parse(line: &str) -> Option<Self> {
        serde_json::from_str(line.trim_end()).ok()
    }
}
