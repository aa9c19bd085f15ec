//! The `NSF1` checkpoint format: one file per trained field plus the
//! encoder, all little-endian with a header carrying the architecture and
//! normalization statistics followed by the float64 parameter payload in
//! manifest order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::neural::{EncoderModel, EncoderSpec, FieldKind, FieldModel, MlpSpec, Stats};
use crate::{Error, Result};

use super::dataset::LeReader;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"NSF1";
pub const CHECKPOINT_VERSION: u32 = 1;
const ENCODER_TAG: u8 = 3;

/// Conventional file names inside a checkpoint directory.
pub const DEFORMATION_FILE: &str = "deformation.nsf";
pub const STRESS_FILE: &str = "stress.nsf";
pub const AFFINE_FILE: &str = "affine.nsf";
pub const ENCODER_FILE: &str = "encoder.nsf";
/// Frozen training latents, stored beside the fields for later stages.
pub const TRAIN_LATENTS_FILE: &str = "train_latents.lat";
/// Copy of the scene configuration the datasets were generated from.
pub const SCENE_FILE: &str = "scene.toml";

struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        self.inner.write_all(&[v])?;
        Ok(())
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        for &v in vs {
            self.inner.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
    fn stats(&mut self, s: &Stats) -> Result<()> {
        self.u32(s.dim() as u32)?;
        self.f64s(&s.mean)?;
        self.f64s(&s.std)?;
        for &c in &s.clamped {
            self.u8(c as u8)?;
        }
        Ok(())
    }
}

fn read_stats<R: std::io::Read>(r: &mut LeReader<R>) -> Result<Stats> {
    let dim = r.u32()? as usize;
    let mean = r.f64s(dim)?;
    let std = r.f64s(dim)?;
    let mut clamped = Vec::with_capacity(dim);
    for _ in 0..dim {
        clamped.push(r.u8()? != 0);
    }
    Ok(Stats { mean, std, clamped })
}

/// Writes one decoder field model.
pub fn write_field_model(path: &Path, model: &FieldModel) -> Result<()> {
    let mut w = Writer {
        inner: BufWriter::new(File::create(path)?),
    };
    w.inner.write_all(&CHECKPOINT_MAGIC)?;
    w.u32(CHECKPOINT_VERSION)?;
    w.u8(model.kind.tag())?;
    w.u32(model.spec.input_dim as u32)?;
    w.u32(model.spec.output_dim as u32)?;
    w.u32(model.spec.hidden_layers as u32)?;
    w.u32(model.spec.hidden_width as u32)?;
    w.stats(&model.x_stats)?;
    w.stats(&model.latent_stats)?;
    w.stats(&model.out_stats)?;
    match &model.mu_stats {
        Some(s) => {
            w.u8(1)?;
            w.stats(s)?;
        }
        None => w.u8(0)?,
    }
    w.u64(model.theta.len() as u64)?;
    w.f64s(&model.theta)?;
    w.inner.flush()?;
    Ok(())
}

/// Reads one decoder field model.
pub fn read_field_model(path: &Path) -> Result<FieldModel> {
    let mut r = LeReader::new(BufReader::new(File::open(path)?), "NSF1");
    check_header(&mut r)?;
    let kind = FieldKind::from_tag(r.u8()?)?;
    let spec = MlpSpec {
        input_dim: r.u32()? as usize,
        output_dim: r.u32()? as usize,
        hidden_layers: r.u32()? as usize,
        hidden_width: r.u32()? as usize,
    };
    let x_stats = read_stats(&mut r)?;
    let latent_stats = read_stats(&mut r)?;
    let out_stats = read_stats(&mut r)?;
    let mu_stats = if r.u8()? != 0 {
        Some(read_stats(&mut r)?)
    } else {
        None
    };
    let n = r.u64()? as usize;
    if n != spec.param_count() {
        return Err(Error::Format {
            format: "NSF1",
            reason: format!(
                "parameter payload {} does not match manifest {}",
                n,
                spec.param_count()
            ),
        });
    }
    let theta = r.f64s(n)?;
    Ok(FieldModel {
        kind,
        spec,
        theta,
        x_stats,
        latent_stats,
        out_stats,
        mu_stats,
    })
}

/// Writes the encoder model.
pub fn write_encoder_model(path: &Path, model: &EncoderModel) -> Result<()> {
    let mut w = Writer {
        inner: BufWriter::new(File::create(path)?),
    };
    w.inner.write_all(&CHECKPOINT_MAGIC)?;
    w.u32(CHECKPOINT_VERSION)?;
    w.u8(ENCODER_TAG)?;
    w.u32(model.spec.latent_dim as u32)?;
    w.u64(model.spec.input_len as u64)?;
    w.stats(&model.pos_stats)?;
    w.u64(model.theta.len() as u64)?;
    w.f64s(&model.theta)?;
    w.inner.flush()?;
    Ok(())
}

/// Reads the encoder model.
pub fn read_encoder_model(path: &Path) -> Result<EncoderModel> {
    let mut r = LeReader::new(BufReader::new(File::open(path)?), "NSF1");
    check_header(&mut r)?;
    let tag = r.u8()?;
    if tag != ENCODER_TAG {
        return Err(Error::Format {
            format: "NSF1",
            reason: format!("expected encoder tag {ENCODER_TAG}, got {tag}"),
        });
    }
    let latent_dim = r.u32()? as usize;
    let input_len = r.u64()? as usize;
    let spec = EncoderSpec::new(input_len, latent_dim)?;
    let pos_stats = read_stats(&mut r)?;
    let n = r.u64()? as usize;
    if n != spec.param_count() {
        return Err(Error::Format {
            format: "NSF1",
            reason: format!(
                "encoder payload {} does not match architecture {}",
                n,
                spec.param_count()
            ),
        });
    }
    let theta = r.f64s(n)?;
    Ok(EncoderModel {
        spec,
        theta,
        pos_stats,
    })
}

fn check_header<R: std::io::Read>(r: &mut LeReader<R>) -> Result<()> {
    let magic = r.bytes4()?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Format {
            format: "NSF1",
            reason: format!("bad magic {magic:?}"),
        });
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format {
            format: "NSF1",
            reason: format!("unsupported version {version}"),
        });
    }
    Ok(())
}
