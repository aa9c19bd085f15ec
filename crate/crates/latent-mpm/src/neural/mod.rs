//! From-scratch neural-field machinery: decoder MLPs, the convolutional
//! frame encoder, manual backpropagation, Adam, normalization and the
//! three training loops.
//!
//! A [`FieldModel`] bundles decoder weights with the normalization
//! statistics of its inputs (reference position, latent, optional μ) and
//! outputs, so `decode` always works in raw physical units.

mod adam;
mod encoder;
mod layers;
mod mlp;
mod normalize;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use encoder::{encoder_backward, encoder_forward, EncoderCache, EncoderSpec};
pub use layers::{elu, elu_deriv, xavier_bound};
pub use mlp::{
    mlp_backward, mlp_backward_batch, mlp_forward, mlp_forward_batch, BatchCache, LayerShape,
    MlpSpec,
};
pub use normalize::{dataset_stats, normalize_dataset, DatasetStats, Stats};
pub use train::{
    train_affine, train_deformation, train_stress, DeformationTraining, TrainConfig, TrainFrame,
    TrainSet,
};

use crate::io::dataset::voigt_to_mat3;
use crate::{Error, Mat3, Result, Vec3};

/// Which physical field a decoder represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// g: reference position + latent → current position (3 components).
    Deformation,
    /// h: reference position + latent → Kirchhoff stress (6 components).
    Stress,
    /// l: reference position + latent → affine momentum (9 components).
    Affine,
}

impl FieldKind {
    pub fn output_dim(&self) -> usize {
        match self {
            FieldKind::Deformation => 3,
            FieldKind::Stress => 6,
            FieldKind::Affine => 9,
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            FieldKind::Deformation => 0,
            FieldKind::Stress => 1,
            FieldKind::Affine => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(FieldKind::Deformation),
            1 => Ok(FieldKind::Stress),
            2 => Ok(FieldKind::Affine),
            other => Err(Error::Format {
                format: "NSF1",
                reason: format!("unknown field kind {other}"),
            }),
        }
    }
}

/// A trained neural field: decoder weights plus normalization statistics.
#[derive(Debug, Clone)]
pub struct FieldModel {
    pub kind: FieldKind,
    pub spec: MlpSpec,
    /// Flat parameter vector in manifest order.
    pub theta: Vec<f64>,
    /// Stats of the reference-position input (3 components).
    pub x_stats: Stats,
    /// Stats of the latent input (r components; identity for the
    /// deformation field, which is trained on raw encoder outputs).
    pub latent_stats: Stats,
    /// Stats of the decoder output.
    pub out_stats: Stats,
    /// Stats of the μ record when the decoder is conditioned on μ.
    pub mu_stats: Option<Stats>,
}

impl FieldModel {
    pub fn latent_dim(&self) -> usize {
        self.latent_stats.dim()
    }

    pub fn mu_len(&self) -> usize {
        self.mu_stats.as_ref().map(|s| s.dim()).unwrap_or(0)
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    fn check_dims(&self, latent: &[f64], mu: &[f64]) -> Result<()> {
        if latent.len() != self.latent_dim() {
            return Err(Error::Shape(format!(
                "latent has dimension {}, model expects {}",
                latent.len(),
                self.latent_dim()
            )));
        }
        if mu.len() != self.mu_len() {
            return Err(Error::Shape(format!(
                "mu record has length {}, model expects {}",
                mu.len(),
                self.mu_len()
            )));
        }
        if self.spec.input_dim != 3 + self.latent_dim() + self.mu_len() {
            return Err(Error::Shape(format!(
                "spec input dim {} inconsistent with stats ({} latent + {} mu)",
                self.spec.input_dim,
                self.latent_dim(),
                self.mu_len()
            )));
        }
        Ok(())
    }

    fn normalized_input(&self, x_ref: &Vec3, latent: &[f64], mu: &[f64]) -> Vec<f64> {
        let mut input = Vec::with_capacity(self.spec.input_dim);
        for i in 0..3 {
            input.push(self.x_stats.normalize(i, x_ref[i]));
        }
        for (j, &v) in latent.iter().enumerate() {
            input.push(self.latent_stats.normalize(j, v));
        }
        if let Some(ms) = &self.mu_stats {
            for (j, &v) in mu.iter().enumerate() {
                input.push(ms.normalize(j, v));
            }
        }
        input
    }

    /// Decodes the field at one reference position; output in physical
    /// units.
    pub fn decode(&self, x_ref: &Vec3, latent: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(latent, mu)?;
        let input = self.normalized_input(x_ref, latent, mu);
        let mut out = mlp_forward(&self.spec, &self.theta, &input);
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.out_stats.denormalize(i, *v);
        }
        Ok(out)
    }

    /// Batched decode over many reference positions at one latent; returns
    /// `[output_dim × n]` row-major, de-normalized.
    pub fn decode_batch(&self, refs: &[Vec3], latent: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(latent, mu)?;
        let n = refs.len();
        let d_in = self.spec.input_dim;
        let mut input = vec![0.0; d_in * n];
        for (c, x) in refs.iter().enumerate() {
            for i in 0..3 {
                input[i * n + c] = self.x_stats.normalize(i, x[i]);
            }
        }
        for j in 0..self.latent_dim() {
            let v = self.latent_stats.normalize(j, latent[j]);
            input[(3 + j) * n..(4 + j) * n].fill(v);
        }
        if let Some(ms) = &self.mu_stats {
            for j in 0..mu.len() {
                let v = ms.normalize(j, mu[j]);
                input[(3 + self.latent_dim() + j) * n..(4 + self.latent_dim() + j) * n].fill(v);
            }
        }
        let mut out = mlp_forward_batch(&self.spec, &self.theta, &input, n, None);
        for i in 0..self.spec.output_dim {
            let row = &mut out[i * n..(i + 1) * n];
            let (std, mean) = (self.out_stats.std[i], self.out_stats.mean[i]);
            for v in row {
                *v = *v * std + mean;
            }
        }
        Ok(out)
    }

    /// Deformation decode to a position vector.
    pub fn decode_position(&self, x_ref: &Vec3, latent: &[f64]) -> Result<Vec3> {
        debug_assert_eq!(self.kind, FieldKind::Deformation);
        let out = self.decode(x_ref, latent, &[])?;
        Ok(Vec3::new(out[0], out[1], out[2]))
    }

    /// Stress decode expanded from 6 Voigt components to a symmetric 3×3
    /// tensor; symmetry holds exactly by construction.
    pub fn decode_stress(&self, x_ref: &Vec3, latent: &[f64], mu: &[f64]) -> Result<Mat3> {
        debug_assert_eq!(self.kind, FieldKind::Stress);
        let out = self.decode(x_ref, latent, mu)?;
        Ok(voigt_to_mat3(&out))
    }

    /// Jacobian of the de-normalized output with respect to the raw latent
    /// vector, `output_dim × r`.
    pub fn latent_jacobian(
        &self,
        x_ref: &Vec3,
        latent: &[f64],
        mu: &[f64],
    ) -> Result<nalgebra::DMatrix<f64>> {
        self.check_dims(latent, mu)?;
        let input = self.normalized_input(x_ref, latent, mu);
        let mut cache = BatchCache::default();
        let _ = mlp_forward_batch(&self.spec, &self.theta, &input, 1, Some(&mut cache));
        let r = self.latent_dim();
        let d_out = self.spec.output_dim;
        let mut jac = nalgebra::DMatrix::zeros(d_out, r);
        let mut grad_theta = vec![0.0; self.spec.param_count()];
        let mut upstream = vec![0.0; d_out];
        for i in 0..d_out {
            upstream.fill(0.0);
            upstream[i] = 1.0;
            grad_theta.fill(0.0);
            let gin = mlp_backward_batch(
                &self.spec,
                &self.theta,
                &cache,
                &upstream,
                &mut grad_theta,
                true,
            )
            .expect("input grad requested");
            for j in 0..r {
                jac[(i, j)] = self.out_stats.std[i] * gin[3 + j] / self.latent_stats.std[j];
            }
        }
        Ok(jac)
    }
}

/// A trained frame encoder with its input normalization.
#[derive(Debug, Clone)]
pub struct EncoderModel {
    pub spec: EncoderSpec,
    pub theta: Vec<f64>,
    /// Stats of the frame positions (3 components), matching the training
    /// normalization.
    pub pos_stats: Stats,
}

impl EncoderModel {
    /// Normalizes a frame and builds the channels-first `[3 × |P|]` input.
    pub fn frame_input(&self, positions: &[Vec3]) -> Result<Vec<f64>> {
        if positions.len() != self.spec.input_len {
            return Err(Error::Shape(format!(
                "frame has {} particles, encoder expects {}",
                positions.len(),
                self.spec.input_len
            )));
        }
        let n = positions.len();
        let mut input = vec![0.0; 3 * n];
        for (c, p) in positions.iter().enumerate() {
            for i in 0..3 {
                input[i * n + c] = self.pos_stats.normalize(i, p[i]);
            }
        }
        Ok(input)
    }

    /// Encodes one frame of particle positions into an r-dimensional
    /// latent; deterministic.
    pub fn encode(&self, positions: &[Vec3]) -> Result<Vec<f64>> {
        let input = self.frame_input(positions)?;
        Ok(encoder_forward(&self.spec, &self.theta, &input, None))
    }
}
