//! The `.nsfd` trajectory dataset format.
//!
//! Binary little-endian layout:
//!
//! ```text
//! magic "NSFD" | u32 version | u64 |P| | u64 frame count
//! f64 dt | f64 dx | u32 μ length | μ length × f64
//! reference positions: 3|P| × f64
//! per frame: positions 3|P| × f64, stresses 6|P| × f64, affine 9|P| × f64
//! ```
//!
//! Write → read → write round-trips byte identically.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Mat3, Result, Vec3};

pub const DATASET_MAGIC: [u8; 4] = *b"NSFD";
pub const DATASET_VERSION: u32 = 1;

/// Symmetric 3×3 tensor as 6 components in Voigt order
/// (xx, yy, zz, xy, yz, xz).
pub fn mat3_to_voigt(m: &Mat3) -> [f64; 6] {
    [
        m[(0, 0)],
        m[(1, 1)],
        m[(2, 2)],
        m[(0, 1)],
        m[(1, 2)],
        m[(0, 2)],
    ]
}

/// Inverse of [`mat3_to_voigt`]; symmetric by construction.
pub fn voigt_to_mat3(v: &[f64]) -> Mat3 {
    Mat3::new(v[0], v[3], v[5], v[3], v[1], v[4], v[5], v[4], v[2])
}

/// Row-major flattening of a 3×3 matrix.
pub fn mat3_to_row_major(m: &Mat3) -> [f64; 9] {
    [
        m[(0, 0)],
        m[(0, 1)],
        m[(0, 2)],
        m[(1, 0)],
        m[(1, 1)],
        m[(1, 2)],
        m[(2, 0)],
        m[(2, 1)],
        m[(2, 2)],
    ]
}

pub fn row_major_to_mat3(v: &[f64]) -> Mat3 {
    Mat3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8])
}

/// One recorded frame: positions, Kirchhoff stresses (Voigt) and affine
/// momenta (row-major) for every particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub positions: Vec<Vec3>,
    pub stresses: Vec<[f64; 6]>,
    pub affines: Vec<[f64; 9]>,
}

impl Frame {
    pub fn particle_count(&self) -> usize {
        self.positions.len()
    }
}

/// An in-memory simulation trajectory for one problem parameter μ.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    pub ref_pos: Vec<Vec3>,
    pub frames: Vec<Frame>,
    pub mu: Vec<f64>,
    pub dt: f64,
    pub dx: f64,
}

impl TrajectoryDataset {
    pub fn particle_count(&self) -> usize {
        self.ref_pos.len()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.particle_count();
        for (i, f) in self.frames.iter().enumerate() {
            if f.positions.len() != n || f.stresses.len() != n || f.affines.len() != n {
                return Err(Error::Shape(format!(
                    "frame {i} has inconsistent particle counts"
                )));
            }
        }
        Ok(())
    }
}

struct LeWriter<W: Write> {
    inner: W,
}

impl<W: Write> LeWriter<W> {
    fn u32(&mut self, v: u32) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        for &v in vs {
            self.f64(v)?;
        }
        Ok(())
    }
}

pub(crate) struct LeReader<R: Read> {
    inner: R,
    format: &'static str,
}

impl<R: Read> LeReader<R> {
    pub(crate) fn new(inner: R, format: &'static str) -> Self {
        LeReader { inner, format }
    }
    pub(crate) fn bytes4(&mut self) -> Result<[u8; 4]> {
        let mut b = [0u8; 4];
        self.inner.read_exact(&mut b).map_err(|e| Error::Format {
            format: self.format,
            reason: format!("truncated: {e}"),
        })?;
        Ok(b)
    }
    pub(crate) fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.inner.read_exact(&mut b).map_err(|e| Error::Format {
            format: self.format,
            reason: format!("truncated: {e}"),
        })?;
        Ok(b[0])
    }
    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes4()?))
    }
    pub(crate) fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b).map_err(|e| Error::Format {
            format: self.format,
            reason: format!("truncated: {e}"),
        })?;
        Ok(u64::from_le_bytes(b))
    }
    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    pub(crate) fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }
}

/// Writes a dataset to `path` in the `.nsfd` format.
pub fn write_dataset(path: &Path, ds: &TrajectoryDataset) -> Result<()> {
    ds.validate()?;
    let mut w = LeWriter {
        inner: BufWriter::new(File::create(path)?),
    };
    w.inner.write_all(&DATASET_MAGIC)?;
    w.u32(DATASET_VERSION)?;
    w.u64(ds.particle_count() as u64)?;
    w.u64(ds.frame_count() as u64)?;
    w.f64(ds.dt)?;
    w.f64(ds.dx)?;
    w.u32(ds.mu.len() as u32)?;
    w.f64s(&ds.mu)?;
    for p in &ds.ref_pos {
        w.f64s(&[p[0], p[1], p[2]])?;
    }
    for frame in &ds.frames {
        for p in &frame.positions {
            w.f64s(&[p[0], p[1], p[2]])?;
        }
        for s in &frame.stresses {
            w.f64s(s)?;
        }
        for c in &frame.affines {
            w.f64s(c)?;
        }
    }
    w.inner.flush()?;
    Ok(())
}

/// Reads a `.nsfd` dataset.
pub fn read_dataset(path: &Path) -> Result<TrajectoryDataset> {
    let mut r = LeReader::new(BufReader::new(File::open(path)?), "NSFD");
    let magic = r.bytes4()?;
    if magic != DATASET_MAGIC {
        return Err(Error::Format {
            format: "NSFD",
            reason: format!("bad magic {magic:?}"),
        });
    }
    let version = r.u32()?;
    if version != DATASET_VERSION {
        return Err(Error::Format {
            format: "NSFD",
            reason: format!("unsupported version {version}"),
        });
    }
    let n = r.u64()? as usize;
    let frames = r.u64()? as usize;
    let dt = r.f64()?;
    let dx = r.f64()?;
    let mu_len = r.u32()? as usize;
    let mu = r.f64s(mu_len)?;
    let mut ref_pos = Vec::with_capacity(n);
    for _ in 0..n {
        let v = r.f64s(3)?;
        ref_pos.push(Vec3::new(v[0], v[1], v[2]));
    }
    let mut out_frames = Vec::with_capacity(frames);
    for _ in 0..frames {
        let mut positions = Vec::with_capacity(n);
        for _ in 0..n {
            let v = r.f64s(3)?;
            positions.push(Vec3::new(v[0], v[1], v[2]));
        }
        let mut stresses = Vec::with_capacity(n);
        for _ in 0..n {
            let v = r.f64s(6)?;
            stresses.push([v[0], v[1], v[2], v[3], v[4], v[5]]);
        }
        let mut affines = Vec::with_capacity(n);
        for _ in 0..n {
            let v = r.f64s(9)?;
            affines.push([v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]]);
        }
        out_frames.push(Frame {
            positions,
            stresses,
            affines,
        });
    }
    Ok(TrajectoryDataset {
        ref_pos,
        frames: out_frames,
        mu,
        dt,
        dx,
    })
}

/// Captures the current particle state as one dataset frame.
pub fn frame_from_particles(ps: &crate::mpm::ParticleSystem) -> Frame {
    Frame {
        positions: ps.pos.clone(),
        stresses: ps.stress.iter().map(mat3_to_voigt).collect(),
        affines: ps.affine.iter().map(mat3_to_row_major).collect(),
    }
}
