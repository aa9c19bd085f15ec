//! File formats: `.nsfd` trajectory datasets, `NSF1` checkpoints, `.lat`
//! latent sidecars, scene configuration TOML and evaluation reports. All
//! binary formats are little-endian, versioned with magic bytes, and
//! round-trip byte identically.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod latents;
pub mod report;
