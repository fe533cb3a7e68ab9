//! Flat parameter container: one line of JSON header, a newline, then every
//! tensor's values as little-endian `f64` in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::Params;
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Header {
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    meta: serde_json::Value,
}

pub fn encode_params(params: &Params, meta: serde_json::Value) -> Vec<u8> {
    let header = Header {
        names: params.iter().map(|(n, _)| n.to_string()).collect(),
        shapes: params.iter().map(|(_, t)| t.shape().to_vec()).collect(),
        meta,
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for (_, t) in params.iter() {
        for x in t.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode_params(bytes: &[u8], source: &str) -> Result<(Params, serde_json::Value)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::parse(source, 1, "missing header line"))?;
    let header: Header = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| Error::parse(source, 1, format!("bad header: {e}")))?;
    if header.names.len() != header.shapes.len() {
        return Err(Error::parse(source, 1, "names and shapes differ in length"));
    }
    let mut payload = bytes[nl + 1..].chunks_exact(8);
    let mut params = Params::new();
    for (name, shape) in header.names.into_iter().zip(header.shapes) {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            let chunk = payload
                .next()
                .ok_or_else(|| Error::parse(source, 2, "payload too short"))?;
            data.push(f64::from_le_bytes(chunk.try_into().expect("8 bytes")));
        }
        params.add(name, Tensor::try_from_vec(shape, data)?);
    }
    if payload.next().is_some() || !payload.remainder().is_empty() {
        return Err(Error::parse(source, 2, "trailing payload bytes"));
    }
    Ok((params, header.meta))
}

pub fn save_params(path: &Path, params: &Params, meta: serde_json::Value) -> Result<()> {
    fs::write(path, encode_params(params, meta)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: &Path) -> Result<(Params, serde_json::Value)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_params(&bytes, &path.display().to_string())
}
