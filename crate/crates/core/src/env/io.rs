//! Streamline files and termination summaries.
//!
//! The streamline format ("S1") is an 8-byte magic `TRSTRM01`, a u32 LE
//! streamline count, then for each streamline a u32 LE point count followed
//! by that many f32 LE `(x, y, z)` triples in world millimetres.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::env::tracker::TerminationReason;
use crate::{Error, Result, Vec3};

pub const S1_MAGIC: &[u8; 8] = b"TRSTRM01";

pub fn write_s1<W: Write>(mut w: W, streamlines: &[Vec<Vec3>]) -> Result<()> {
    w.write_all(S1_MAGIC)?;
    let count = u32::try_from(streamlines.len()).map_err(|_| Error::format("S1", "too many streamlines"))?;
    w.write_all(&count.to_le_bytes())?;
    for s in streamlines {
        let n = u32::try_from(s.len()).map_err(|_| Error::format("S1", "streamline too long"))?;
        w.write_all(&n.to_le_bytes())?;
        for p in s {
            for c in [p.x, p.y, p.z] {
                w.write_all(&(c as f32).to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::format("S1", format!("truncated while reading {what}")))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_s1<R: Read>(mut r: R) -> Result<Vec<Vec<Vec3>>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| Error::format("S1", "missing magic"))?;
    if &magic != S1_MAGIC {
        return Err(Error::format("S1", "bad magic"));
    }
    let count = read_u32(&mut r, "streamline count")?;
    let mut out = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let n = read_u32(&mut r, "point count")? as usize;
        let mut buf = vec![0u8; n * 12];
        r.read_exact(&mut buf).map_err(|_| Error::format("S1", "truncated point data"))?;
        let pts = buf
            .chunks_exact(12)
            .map(|c| {
                let f = |k: usize| f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap()) as f64;
                Vec3::new(f(0), f(1), f(2))
            })
            .collect();
        out.push(pts);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::format("S1", "trailing bytes after last streamline"));
    }
    Ok(out)
}

pub fn save_s1(path: &Path, streamlines: &[Vec<Vec3>]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_s1(BufWriter::new(f), streamlines)
}

pub fn load_s1(path: &Path) -> Result<Vec<Vec<Vec3>>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_s1(BufReader::new(f))
}

/// `reason,count` rows in a fixed order.
pub fn write_termination_csv<W: Write>(mut w: W, hist: &BTreeMap<TerminationReason, usize>) -> Result<()> {
    writeln!(w, "reason,count")?;
    for r in TerminationReason::ALL {
        writeln!(w, "{},{}", r.as_str(), hist.get(&r).copied().unwrap_or(0))?;
    }
    Ok(())
}
