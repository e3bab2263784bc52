//! "V1" volume files.
//!
//! ```text
//! V1
//! dims=NX NY NZ
//! channels=C
//! affine=a00 a01 ... a33        (16 entries, row-major)
//! dtype=f32le
//! [kind=scalar|vector|peaks]
//! END
//! <NX*NY*NZ*C little-endian f32, channels fastest, then x, y, z>
//! ```

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::{Error, Result};

use super::{AffineTransform, PeaksVolume, ScalarVolume, VectorVolume};

const MAGIC: &str = "V1";
const FMT: &str = "V1";

pub fn write_v1<W: Write>(mut w: W, vol: &VectorVolume, kind: Option<&str>) -> Result<()> {
    let d = vol.dims();
    let mut header = format!(
        "{MAGIC}\ndims={} {} {}\nchannels={}\naffine={}\ndtype=f32le\n",
        d[0],
        d[1],
        d[2],
        vol.channels(),
        vol.affine()
            .to_row_major()
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    if let Some(kind) = kind {
        header.push_str(&format!("kind={kind}\n"));
    }
    header.push_str("END\n");
    w.write_all(header.as_bytes())?;
    let mut buf = Vec::with_capacity(vol.data().len() * 4);
    for v in vol.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Parsed header plus payload.
pub struct V1File {
    pub volume: VectorVolume,
    pub kind: Option<String>,
}

pub fn read_v1<R: BufRead>(mut r: R) -> Result<V1File> {
    let mut line = String::new();
    let mut next_line = |r: &mut R| -> Result<String> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::format(FMT, "unexpected end of header"));
        }
        Ok(line.trim_end_matches('\n').to_string())
    };
    if next_line(&mut r)? != MAGIC {
        return Err(Error::format(FMT, "bad magic"));
    }
    let (mut dims, mut channels, mut affine, mut dtype, mut kind) = (None, None, None, None, None);
    loop {
        let l = next_line(&mut r)?;
        if l == "END" {
            break;
        }
        let (key, value) = l
            .split_once('=')
            .ok_or_else(|| Error::format(FMT, format!("header line without '=': {l}")))?;
        let bad = |what: &str| Error::format(FMT, format!("bad {what}: {value}"));
        match key {
            "dims" => {
                let v: Vec<usize> = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("dims"))?;
                dims = Some(<[usize; 3]>::try_from(v).map_err(|_| bad("dims"))?);
            }
            "channels" => channels = Some(value.trim().parse::<usize>().map_err(|_| bad("channels"))?),
            "affine" => {
                let v: Vec<f64> = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("affine"))?;
                let arr = <[f64; 16]>::try_from(v).map_err(|_| bad("affine"))?;
                affine = Some(AffineTransform::from_row_major(&arr)?);
            }
            "dtype" => dtype = Some(value.to_string()),
            "kind" => kind = Some(value.to_string()),
            other => return Err(Error::format(FMT, format!("unknown header key {other}"))),
        }
    }
    let missing = |k: &str| Error::format(FMT, format!("missing {k}"));
    let dims = dims.ok_or_else(|| missing("dims"))?;
    let channels = channels.ok_or_else(|| missing("channels"))?;
    let affine = affine.ok_or_else(|| missing("affine"))?;
    if dtype.as_deref() != Some("f32le") {
        return Err(Error::format(FMT, format!("unsupported dtype {dtype:?}")));
    }
    let n = dims[0] * dims[1] * dims[2] * channels;
    let mut bytes = Vec::with_capacity(n * 4);
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 4 {
        return Err(Error::format(
            FMT,
            format!("payload has {} bytes, expected {}", bytes.len(), n * 4),
        ));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(V1File {
        volume: VectorVolume::new(dims, channels, data, affine)?,
        kind,
    })
}

fn open(path: &Path) -> Result<std::io::BufReader<fs::File>> {
    fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn save_vector(path: &Path, vol: &VectorVolume) -> Result<()> {
    let mut w = create(path)?;
    write_v1(&mut w, vol, Some("vector"))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_scalar(path: &Path, vol: &ScalarVolume) -> Result<()> {
    let mut w = create(path)?;
    write_v1(&mut w, vol.as_vector(), Some("scalar"))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_peaks(path: &Path, vol: &PeaksVolume) -> Result<()> {
    let mut w = create(path)?;
    write_v1(&mut w, vol.as_vector(), Some("peaks"))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_vector(path: &Path) -> Result<VectorVolume> {
    Ok(read_v1(open(path)?)?.volume)
}

pub fn load_scalar(path: &Path) -> Result<ScalarVolume> {
    ScalarVolume::from_vector(read_v1(open(path)?)?.volume)
}

pub fn load_peaks(path: &Path) -> Result<PeaksVolume> {
    PeaksVolume::from_vector(read_v1(open(path)?)?.volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;

    #[test]
    fn round_trip_is_bit_exact() {
        let aff = AffineTransform::scaled(1.0 / 3.0, Vec3::new(-0.1, 2.0, 1e-7)).unwrap();
        let data: Vec<f32> = (0..2 * 3 * 4 * 5).map(|i| (i as f32).sin() * 1e3).collect();
        let vol = VectorVolume::new([2, 3, 4], 5, data, aff).unwrap();
        let mut buf = Vec::new();
        write_v1(&mut buf, &vol, Some("vector")).unwrap();
        let back = read_v1(&buf[..]).unwrap();
        assert_eq!(back.volume, vol);
        assert_eq!(back.kind.as_deref(), Some("vector"));
    }

    #[test]
    fn header_layout() {
        let vol = VectorVolume::zeros([1, 1, 1], 1, AffineTransform::identity()).unwrap();
        let mut buf = Vec::new();
        write_v1(&mut buf, &vol, None).unwrap();
        let text = String::from_utf8_lossy(&buf[..buf.len() - 4]).to_string();
        assert_eq!(
            text,
            "V1\ndims=1 1 1\nchannels=1\naffine=1.0 0.0 0.0 0.0 0.0 1.0 0.0 0.0 0.0 0.0 1.0 0.0 0.0 0.0 0.0 1.0\ndtype=f32le\nEND\n"
        );
        assert_eq!(&buf[buf.len() - 4..], &0f32.to_le_bytes());
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let vol = VectorVolume::zeros([2, 2, 2], 1, AffineTransform::identity()).unwrap();
        let mut buf = Vec::new();
        write_v1(&mut buf, &vol, None).unwrap();
        buf.pop();
        assert!(read_v1(&buf[..]).is_err());
        assert!(read_v1(&b"V2\n"[..]).is_err());
    }
}
