//! Per-component normalization to zero mean and unit variance.

use crate::io::dataset::{Frame, TrajectoryDataset};
use crate::{Error, Result};

/// Per-component mean and standard deviation. Components with zero
/// variance keep `std = 1` and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct Stats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub clamped: Vec<bool>,
}

impl Stats {
    /// Identity transform (mean 0, std 1) of the given dimension.
    pub fn identity(dim: usize) -> Self {
        Stats {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
            clamped: vec![false; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    pub fn normalize(&self, component: usize, value: f64) -> f64 {
        (value - self.mean[component]) / self.std[component]
    }

    #[inline]
    pub fn denormalize(&self, component: usize, value: f64) -> f64 {
        value * self.std[component] + self.mean[component]
    }

    /// Two-pass population statistics over samples supplied by a visitor.
    /// The visitor must produce the same sequence on both calls.
    pub fn compute<F>(dim: usize, mut visit: F) -> Result<Self>
    where
        F: FnMut(&mut dyn FnMut(&[f64])),
    {
        let mut n = 0u64;
        let mut sum = vec![0.0; dim];
        visit(&mut |row: &[f64]| {
            debug_assert_eq!(row.len(), dim);
            n += 1;
            for (s, v) in sum.iter_mut().zip(row) {
                *s += v;
            }
        });
        if n == 0 {
            return Err(Error::Shape("statistics over an empty set".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mut ss = vec![0.0; dim];
        visit(&mut |row: &[f64]| {
            for i in 0..dim {
                let d = row[i] - mean[i];
                ss[i] += d * d;
            }
        });
        let mut clamped = vec![false; dim];
        let std: Vec<f64> = ss
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let sd = (s / n as f64).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    clamped[i] = true;
                    1.0
                }
            })
            .collect();
        Ok(Stats { mean, std, clamped })
    }
}

/// Normalization statistics of a training set: reference positions,
/// frame positions, stresses (Voigt) and affine momenta (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub ref_pos: Stats,
    pub position: Stats,
    pub stress: Stats,
    pub affine: Stats,
}

/// Statistics pooled over several trajectory datasets (one per μ).
pub fn dataset_stats(sets: &[&TrajectoryDataset]) -> Result<DatasetStats> {
    if sets.is_empty() {
        return Err(Error::Shape("no datasets supplied".into()));
    }
    let ref_pos = Stats::compute(3, |sink| {
        for ds in sets {
            for p in &ds.ref_pos {
                sink(&[p[0], p[1], p[2]]);
            }
        }
    })?;
    let position = Stats::compute(3, |sink| {
        for ds in sets {
            for f in &ds.frames {
                for p in &f.positions {
                    sink(&[p[0], p[1], p[2]]);
                }
            }
        }
    })?;
    let stress = Stats::compute(6, |sink| {
        for ds in sets {
            for f in &ds.frames {
                for s in &f.stresses {
                    sink(s);
                }
            }
        }
    })?;
    let affine = Stats::compute(9, |sink| {
        for ds in sets {
            for f in &ds.frames {
                for c in &f.affines {
                    sink(c);
                }
            }
        }
    })?;
    Ok(DatasetStats {
        ref_pos,
        position,
        stress,
        affine,
    })
}

/// Returns a normalized copy of the dataset together with its statistics;
/// de-normalization with the returned stats is the exact inverse.
pub fn normalize_dataset(ds: &TrajectoryDataset) -> Result<(TrajectoryDataset, DatasetStats)> {
    let stats = dataset_stats(&[ds])?;
    let norm3 = |p: &crate::Vec3, s: &Stats| {
        crate::Vec3::new(
            s.normalize(0, p[0]),
            s.normalize(1, p[1]),
            s.normalize(2, p[2]),
        )
    };
    let frames = ds
        .frames
        .iter()
        .map(|f| Frame {
            positions: f.positions.iter().map(|p| norm3(p, &stats.position)).collect(),
            stresses: f
                .stresses
                .iter()
                .map(|s| {
                    let mut out = [0.0; 6];
                    for i in 0..6 {
                        out[i] = stats.stress.normalize(i, s[i]);
                    }
                    out
                })
                .collect(),
            affines: f
                .affines
                .iter()
                .map(|c| {
                    let mut out = [0.0; 9];
                    for i in 0..9 {
                        out[i] = stats.affine.normalize(i, c[i]);
                    }
                    out
                })
                .collect(),
        })
        .collect();
    let normalized = TrajectoryDataset {
        ref_pos: ds.ref_pos.iter().map(|p| norm3(p, &stats.ref_pos)).collect(),
        frames,
        mu: ds.mu.clone(),
        dt: ds.dt,
        dx: ds.dx,
    };
    Ok((normalized, stats))
}
