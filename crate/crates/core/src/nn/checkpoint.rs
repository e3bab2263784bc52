//! Checkpoint files: one JSON header line, then the little-endian f32
//! parameters of every stored tensor in header order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nn::mlp::{Activation, Mlp};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "rltrack-checkpoint-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetEntry {
    name: String,
    sizes: Vec<usize>,
    activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VectorEntry {
    name: String,
    len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    meta: serde_json::Value,
    nets: Vec<NetEntry>,
    vectors: Vec<VectorEntry>,
}

/// Named networks and parameter vectors plus free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: serde_json::Value,
    pub nets: Vec<(String, Mlp<f32>)>,
    pub vectors: Vec<(String, Vec<f32>)>,
}

impl Checkpoint {
    pub fn new(meta: serde_json::Value) -> Self {
        Self { meta, nets: Vec::new(), vectors: Vec::new() }
    }

    pub fn with_net(mut self, name: &str, net: &Mlp<f32>) -> Self {
        self.nets.push((name.to_string(), net.clone()));
        self
    }

    pub fn with_vector(mut self, name: &str, v: &[f32]) -> Self {
        self.vectors.push((name.to_string(), v.to_vec()));
        self
    }

    pub fn net(&self, name: &str) -> Result<&Mlp<f32>> {
        self.nets
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::format("checkpoint", format!("no network named {name}")))
    }

    pub fn vector(&self, name: &str) -> Result<&[f32]> {
        self.vectors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::format("checkpoint", format!("no vector named {name}")))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            format: CHECKPOINT_FORMAT.to_string(),
            meta: self.meta.clone(),
            nets: self
                .nets
                .iter()
                .map(|(n, m)| NetEntry { name: n.clone(), sizes: m.sizes().to_vec(), activation: m.activation() })
                .collect(),
            vectors: self.vectors.iter().map(|(n, v)| VectorEntry { name: n.clone(), len: v.len() }).collect(),
        };
        let line = serde_json::to_string(&header).map_err(|e| Error::format("checkpoint", e.to_string()))?;
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
        let all = self.nets.iter().map(|(_, m)| m.params()).chain(self.vectors.iter().map(|(_, v)| v.as_slice()));
        for block in all {
            for p in block {
                w.write_all(&p.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(mut r: R) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: Header =
            serde_json::from_str(line.trim_end()).map_err(|e| Error::format("checkpoint", e.to_string()))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::format("checkpoint", format!("unknown format tag {}", header.format)));
        }
        let mut read_block = |n: usize| -> Result<Vec<f32>> {
            let mut buf = vec![0u8; 4 * n];
            r.read_exact(&mut buf).map_err(|_| Error::format("checkpoint", "truncated parameter blob"))?;
            Ok(buf.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        };
        let mut nets = Vec::new();
        for e in &header.nets {
            let n = Mlp::<f32>::zeros(&e.sizes, e.activation)?.params().len();
            nets.push((e.name.clone(), Mlp::from_params(&e.sizes, e.activation, read_block(n)?)?));
        }
        let mut vectors = Vec::new();
        for e in &header.vectors {
            vectors.push((e.name.clone(), read_block(e.len)?));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::format("checkpoint", "trailing bytes after parameter blob"));
        }
        Ok(Self { meta: header.meta, nets, vectors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(f))
    }
}
