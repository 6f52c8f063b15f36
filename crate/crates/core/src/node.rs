//! Node identifiers shared by the gateway and the sample types.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NODE_ID_MAX_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("node id must be 1..={NODE_ID_MAX_LEN} characters, got {0}")]
pub struct InvalidNodeId(pub usize);

/// Opaque node identifier, 1 to 64 characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, InvalidNodeId> {
        let id = id.into();
        let len = id.chars().count();
        if len == 0 || len > NODE_ID_MAX_LEN {
            return Err(InvalidNodeId(len));
        }
        Ok(NodeId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = InvalidNodeId;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        NodeId::new(value)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> Self {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_bounds() {
        assert!(NodeId::new("").is_err());
        assert!(NodeId::new("w-01").is_ok());
        assert!(NodeId::new("x".repeat(64)).is_ok());
        assert_eq!(NodeId::new("x".repeat(65)), Err(InvalidNodeId(65)));
    }

    #[test]
    fn serde_rejects_empty() {
        assert!(serde_json::from_str::<NodeId>("\"\"").is_err());
        let id: NodeId = serde_json::from_str("\"env-1\"").unwrap();
        assert_eq!(id.as_str(), "env-1");
    }
}
