//! Snapshot file: a one-line header `thermoloop-snapshot 1 <sha256> <len>`
//! followed by the JSON-encoded store.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::hub::HubState;
use super::GatewayError;

const MAGIC: &str = "thermoloop-snapshot";
const VERSION: u32 = 1;

fn corrupt(msg: impl Into<String>) -> GatewayError {
    GatewayError::CorruptSnapshot(msg.into())
}

pub(super) fn write(path: &Path, state: &HubState) -> Result<(), GatewayError> {
    let body = serde_json::to_vec(state).map_err(|e| corrupt(e.to_string()))?;
    let digest = hex::encode(Sha256::digest(&body));
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        writeln!(f, "{MAGIC} {VERSION} {digest} {}", body.len())?;
        f.write_all(&body)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub(super) fn read(path: &Path) -> Result<HubState, GatewayError> {
    let bytes = fs::read(path)?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| corrupt("missing header"))?;
    let header = std::str::from_utf8(&bytes[..split]).map_err(|_| corrupt("header is not UTF-8"))?;
    let body = &bytes[split + 1..];

    let parts: Vec<&str> = header.split(' ').collect();
    let [magic, version, digest, len] = parts[..] else {
        return Err(corrupt("bad header"));
    };
    if magic != MAGIC || version != VERSION.to_string() {
        return Err(corrupt("unrecognised header"));
    }
    let len: usize = len.parse().map_err(|_| corrupt("bad length"))?;
    if body.len() != len {
        return Err(corrupt(format!("expected {len} bytes, found {}", body.len())));
    }
    if hex::encode(Sha256::digest(body)) != digest {
        return Err(corrupt("checksum mismatch"));
    }
    let state: HubState = serde_json::from_slice(body).map_err(|e| corrupt(e.to_string()))?;

    for (id, entry) in &state.nodes {
        if &entry.record.node_id != id {
            return Err(corrupt(format!("registry key {id} does not match record")));
        }
        if entry
            .samples
            .windows(2)
            .any(|w| w[1].timestamp() <= w[0].timestamp())
        {
            return Err(corrupt(format!("non-monotone samples for {id}")));
        }
    }
    Ok(state)
}
