//! Binary parameter files.
//!
//! Layout: `b"SGNN"`, version `u32`, parameter count `u64`, parameters as
//! little-endian `f64`; then a buffer count `u64` and the batchnorm running
//! statistics, also little-endian `f64`. The architecture is stored next to
//! the binary as JSON.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::network::TrainedNetwork;
use super::spec::NetworkSpec;
use super::NnError;

pub const MAGIC: &[u8; 4] = b"SGNN";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_parameters<W: Write>(net: &TrainedNetwork, mut w: W) -> Result<(), NnError> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    write_block(&mut w, net.parameters())?;
    write_block(&mut w, net.buffers())?;
    Ok(())
}

fn write_block<W: Write>(w: &mut W, values: &[f64]) -> Result<(), NnError> {
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_parameters<R: Read>(spec: NetworkSpec, mut r: R) -> Result<TrainedNetwork, NnError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Format("bad magic bytes".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    let version = u32::from_le_bytes(v);
    if version != FORMAT_VERSION {
        return Err(NnError::Format(format!("unsupported version {version}")));
    }
    let params = read_block(&mut r)?;
    let buffers = read_block(&mut r)?;
    TrainedNetwork::from_parts(spec, params, buffers)
}

fn read_block<R: Read>(r: &mut R) -> Result<Vec<f64>, NnError> {
    let mut n = [0u8; 8];
    r.read_exact(&mut n)?;
    let n = u64::from_le_bytes(n) as usize;
    let mut out = Vec::with_capacity(n.min(1 << 24));
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

/// Writes `<stem>.sgnn` and `<stem>.spec.json`.
pub fn save(net: &TrainedNetwork, dir: &Path, stem: &str) -> Result<Vec<std::path::PathBuf>, NnError> {
    let bin = dir.join(format!("{stem}.sgnn"));
    let json = dir.join(format!("{stem}.spec.json"));
    let mut buf = Vec::new();
    write_parameters(net, &mut buf)?;
    fs::write(&bin, buf)?;
    let text = serde_json::to_string_pretty(net.spec()).map_err(|e| NnError::Format(e.to_string()))?;
    fs::write(&json, text)?;
    Ok(vec![bin, json])
}

pub fn load(dir: &Path, stem: &str) -> Result<TrainedNetwork, NnError> {
    let text = fs::read_to_string(dir.join(format!("{stem}.spec.json")))?;
    let spec: NetworkSpec = serde_json::from_str(&text).map_err(|e| NnError::Format(e.to_string()))?;
    let bytes = fs::read(dir.join(format!("{stem}.sgnn")))?;
    read_parameters(spec, bytes.as_slice())
}
