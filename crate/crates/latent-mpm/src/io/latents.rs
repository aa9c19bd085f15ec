//! The `.lat` latent-trajectory sidecar: frame index → r float64 values.
//! Streaming this small file is all a downstream consumer needs to stay
//! synchronized with a rollout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

use super::dataset::LeReader;

pub const LATENTS_MAGIC: [u8; 4] = *b"NSFL";
pub const LATENTS_VERSION: u32 = 1;

/// Writes a latent trajectory; frame indices are implicit (0, 1, ...).
pub fn write_latents(path: &Path, latents: &[Vec<f64>]) -> Result<()> {
    let r = latents.first().map(|l| l.len()).unwrap_or(0);
    if latents.iter().any(|l| l.len() != r) {
        return Err(Error::Shape("latent records have mixed dimensions".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&LATENTS_MAGIC)?;
    w.write_all(&LATENTS_VERSION.to_le_bytes())?;
    w.write_all(&(r as u32).to_le_bytes())?;
    w.write_all(&(latents.len() as u64).to_le_bytes())?;
    for l in latents {
        for &v in l {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a latent trajectory.
pub fn read_latents(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = LeReader::new(BufReader::new(File::open(path)?), "NSFL");
    let magic = r.bytes4()?;
    if magic != LATENTS_MAGIC {
        return Err(Error::Format {
            format: "NSFL",
            reason: format!("bad magic {magic:?}"),
        });
    }
    let version = r.u32()?;
    if version != LATENTS_VERSION {
        return Err(Error::Format {
            format: "NSFL",
            reason: format!("unsupported version {version}"),
        });
    }
    let dim = r.u32()? as usize;
    let count = r.u64()? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(r.f64s(dim)?);
    }
    Ok(out)
}
