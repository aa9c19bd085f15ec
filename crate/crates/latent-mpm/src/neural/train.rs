//! The three training stages: joint deformation decoder + encoder, then
//! stress and affine decoders on frozen latents.
//!
//! Batches are whole frames (all particles of each); frames are shuffled
//! per epoch with a seeded generator, the loss is the mean squared error
//! over every component in the batch, and the learning-rate schedule runs
//! a fixed number of epochs per rate scaled by `epoch_scale`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::io::dataset::TrajectoryDataset;
use crate::{Error, Result, Vec3};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::encoder::{encoder_backward, encoder_forward, EncoderCache, EncoderSpec};
use super::mlp::{mlp_backward_batch, mlp_forward_batch, BatchCache, MlpSpec};
use super::normalize::{dataset_stats, DatasetStats, Stats};
use super::{EncoderModel, FieldKind, FieldModel};

/// One pooled training frame with the problem parameter of its run.
#[derive(Debug, Clone)]
pub struct TrainFrame {
    pub positions: Vec<Vec3>,
    pub stresses: Vec<[f64; 6]>,
    pub affines: Vec<[f64; 9]>,
    pub mu: Vec<f64>,
}

/// Frames pooled over all training runs, with shared reference positions
/// and pooled normalization statistics.
#[derive(Debug, Clone)]
pub struct TrainSet {
    pub ref_pos: Vec<Vec3>,
    pub frames: Vec<TrainFrame>,
    pub stats: DatasetStats,
    pub dt: f64,
    pub dx: f64,
}

impl TrainSet {
    /// Pools several per-μ trajectory datasets. All runs must share the
    /// reference geometry, Δt and Δx.
    pub fn from_datasets(sets: Vec<TrajectoryDataset>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::Shape("no training datasets".into()));
        }
        let refs: Vec<&TrajectoryDataset> = sets.iter().collect();
        let stats = dataset_stats(&refs)?;
        let first = &sets[0];
        for ds in &sets[1..] {
            if ds.ref_pos != first.ref_pos {
                return Err(Error::Shape(
                    "training runs have different reference geometries".into(),
                ));
            }
            if ds.dt != first.dt || ds.dx != first.dx {
                return Err(Error::Shape("training runs have different dt or dx".into()));
            }
        }
        let ref_pos = first.ref_pos.clone();
        let (dt, dx) = (first.dt, first.dx);
        let mut frames = Vec::new();
        for ds in sets {
            let mu = ds.mu.clone();
            for f in ds.frames {
                frames.push(TrainFrame {
                    positions: f.positions,
                    stresses: f.stresses,
                    affines: f.affines,
                    mu: mu.clone(),
                });
            }
        }
        Ok(TrainSet {
            ref_pos,
            frames,
            stats,
            dt,
            dx,
        })
    }

    pub fn particle_count(&self) -> usize {
        self.ref_pos.len()
    }
}

/// Optimization schedule and batching.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Learning-rate schedule; each rate runs for a fixed number of epochs.
    pub learning_rates: Vec<f64>,
    /// Epochs per rate for the deformation stage.
    pub deformation_epochs_per_rate: usize,
    /// Epochs per rate for the stress and affine stages.
    pub stress_epochs_per_rate: usize,
    /// Desk-scale multiplier on both epoch counts (1.0 = full schedule).
    pub epoch_scale: f64,
    /// Frames per batch, at most 32.
    pub batch_frames: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Adds the μ record as extra stress-decoder inputs.
    pub condition_stress_on_mu: bool,
    /// Adds the μ record as extra affine-decoder inputs.
    pub condition_affine_on_mu: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rates: vec![1e-3, 5e-4, 2e-4, 1e-4, 5e-5],
            deformation_epochs_per_rate: 300,
            stress_epochs_per_rate: 600,
            epoch_scale: 1.0,
            batch_frames: 32,
            seed: 0,
            adam: AdamConfig::default(),
            condition_stress_on_mu: false,
            condition_affine_on_mu: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() || self.learning_rates.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.batch_frames == 0 || self.batch_frames > 32 {
            return Err(Error::Config(format!(
                "batch size must lie in 1..=32 frames, got {}",
                self.batch_frames
            )));
        }
        if !(self.epoch_scale > 0.0) {
            return Err(Error::Config("epoch scale must be positive".into()));
        }
        Ok(())
    }

    fn scaled_epochs(&self, per_rate: usize) -> usize {
        ((per_rate as f64 * self.epoch_scale).round() as usize).max(1)
    }
}

/// Result of the joint deformation/encoder stage.
#[derive(Debug, Clone)]
pub struct DeformationTraining {
    pub field: FieldModel,
    pub encoder: EncoderModel,
    /// Frozen per-frame latents `x̂_n = e(xⁿ)`, in training-frame order.
    pub latents: Vec<Vec<f64>>,
    /// Training MSE evaluated at each learning-rate boundary.
    pub stage_losses: Vec<f64>,
    pub final_mse: f64,
}

/// Normalized `[3 × n]` channels-first layout of a frame, which doubles as
/// the encoder input and the deformation target.
fn normalized_frame(positions: &[Vec3], stats: &Stats) -> Vec<f64> {
    let n = positions.len();
    let mut out = vec![0.0; 3 * n];
    for (c, p) in positions.iter().enumerate() {
        for i in 0..3 {
            out[i * n + c] = stats.normalize(i, p[i]);
        }
    }
    out
}

fn normalized_ref_rows(train: &TrainSet) -> Vec<f64> {
    normalized_frame(&train.ref_pos, &train.stats.ref_pos)
}

/// Trains the displacement decoder g and encoder e jointly by minimizing
/// `Σ ‖g(X_p, e(xⁿ)) − xⁿ_p‖²` with Adam over the learning-rate schedule.
pub fn train_deformation(
    train: &TrainSet,
    spec: MlpSpec,
    cfg: &TrainConfig,
) -> Result<DeformationTraining> {
    cfg.validate()?;
    spec.validate()?;
    if spec.output_dim != 3 {
        return Err(Error::Shape(format!(
            "deformation decoder must output 3 components, got {}",
            spec.output_dim
        )));
    }
    if train.frames.is_empty() {
        return Err(Error::Shape("empty training set".into()));
    }
    let n = train.particle_count();
    let r = spec.input_dim - 3;
    let enc_spec = EncoderSpec::new(n, r)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta_g = spec.xavier_init_with(&mut rng);
    let mut theta_e = enc_spec.xavier_init_with(&mut rng);
    let mut adam_g = AdamState::new(theta_g.len());
    let mut adam_e = AdamState::new(theta_e.len());
    let mut grad_g = vec![0.0; theta_g.len()];
    let mut grad_e = vec![0.0; theta_e.len()];

    let frames_norm: Vec<Vec<f64>> = train
        .frames
        .iter()
        .map(|f| normalized_frame(&f.positions, &train.stats.position))
        .collect();
    let x_rows = normalized_ref_rows(train);
    let mut g_input = vec![0.0; spec.input_dim * n];
    g_input[..3 * n].copy_from_slice(&x_rows);

    let mut cache_g = BatchCache::default();
    let mut cache_e = EncoderCache::default();
    let mut order: Vec<usize> = (0..train.frames.len()).collect();
    let epochs = cfg.scaled_epochs(cfg.deformation_epochs_per_rate);
    let mut stage_losses = Vec::with_capacity(cfg.learning_rates.len());

    let eval_mse = |theta_g: &[f64], theta_e: &[f64], g_input: &mut Vec<f64>| -> f64 {
        let mut sq = 0.0;
        for target in &frames_norm {
            let latent = encoder_forward(&enc_spec, theta_e, target, None);
            for (j, &v) in latent.iter().enumerate() {
                g_input[(3 + j) * n..(4 + j) * n].fill(v);
            }
            let out = mlp_forward_batch(&spec, theta_g, g_input, n, None);
            sq += out
                .iter()
                .zip(target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        sq / (3 * n * frames_norm.len()) as f64
    };

    for &lr in &cfg.learning_rates {
        for _epoch in 0..epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_frames) {
                grad_g.fill(0.0);
                grad_e.fill(0.0);
                let denom = (3 * n * chunk.len()) as f64;
                let mut batch_sq = 0.0;
                for &fi in chunk {
                    let target = &frames_norm[fi];
                    let latent =
                        encoder_forward(&enc_spec, &theta_e, target, Some(&mut cache_e));
                    for (j, &v) in latent.iter().enumerate() {
                        g_input[(3 + j) * n..(4 + j) * n].fill(v);
                    }
                    let mut upstream =
                        mlp_forward_batch(&spec, &theta_g, &g_input, n, Some(&mut cache_g));
                    for (u, t) in upstream.iter_mut().zip(target) {
                        let resid = *u - t;
                        batch_sq += resid * resid;
                        *u = 2.0 * resid / denom;
                    }
                    let gin = mlp_backward_batch(
                        &spec, &theta_g, &cache_g, &upstream, &mut grad_g, true,
                    )
                    .expect("input grad requested");
                    let mut dlatent = vec![0.0; r];
                    for (j, d) in dlatent.iter_mut().enumerate() {
                        *d = gin[(3 + j) * n..(4 + j) * n].iter().sum();
                    }
                    encoder_backward(&enc_spec, &theta_e, &cache_e, &dlatent, &mut grad_e);
                }
                if !batch_sq.is_finite() {
                    return Err(Error::Divergence(format!(
                        "deformation loss became non-finite at lr {lr} (adam step {})",
                        adam_g.step_count()
                    )));
                }
                adam_step(&mut theta_g, &grad_g, &mut adam_g, lr, &cfg.adam);
                adam_step(&mut theta_e, &grad_e, &mut adam_e, lr, &cfg.adam);
            }
        }
        stage_losses.push(eval_mse(&theta_g, &theta_e, &mut g_input));
    }

    let final_mse = *stage_losses.last().unwrap();
    let latents: Vec<Vec<f64>> = frames_norm
        .iter()
        .map(|f| encoder_forward(&enc_spec, &theta_e, f, None))
        .collect();

    Ok(DeformationTraining {
        field: FieldModel {
            kind: FieldKind::Deformation,
            spec,
            theta: theta_g,
            x_stats: train.stats.ref_pos.clone(),
            latent_stats: Stats::identity(r),
            out_stats: train.stats.position.clone(),
            mu_stats: None,
        },
        encoder: EncoderModel {
            spec: enc_spec,
            theta: theta_e,
            pos_stats: train.stats.position.clone(),
        },
        latents,
        stage_losses,
        final_mse,
    })
}

/// Supervised regression of one decoder onto per-particle targets at
/// frozen latents.
fn train_supervised(
    train: &TrainSet,
    latents: &[Vec<f64>],
    spec: MlpSpec,
    cfg: &TrainConfig,
    kind: FieldKind,
    condition_mu: bool,
) -> Result<FieldModel> {
    cfg.validate()?;
    spec.validate()?;
    if spec.output_dim != kind.output_dim() {
        return Err(Error::Shape(format!(
            "decoder outputs {} components, field needs {}",
            spec.output_dim,
            kind.output_dim()
        )));
    }
    if latents.len() != train.frames.len() {
        return Err(Error::Shape(format!(
            "{} latents for {} frames",
            latents.len(),
            train.frames.len()
        )));
    }
    if train.frames.is_empty() {
        return Err(Error::Shape("empty training set".into()));
    }
    let n = train.particle_count();
    let r = latents[0].len();
    let mu_len = if condition_mu {
        train.frames[0].mu.len()
    } else {
        0
    };
    if spec.input_dim != 3 + r + mu_len {
        return Err(Error::Shape(format!(
            "decoder input dim {} does not match 3 + {r} latent + {mu_len} mu",
            spec.input_dim
        )));
    }

    let latent_stats = Stats::compute(r, |sink| {
        for l in latents {
            sink(l);
        }
    })?;
    let mu_stats = if condition_mu {
        Some(Stats::compute(mu_len, |sink| {
            for f in &train.frames {
                sink(&f.mu);
            }
        })?)
    } else {
        None
    };

    let out_stats = match kind {
        FieldKind::Stress => train.stats.stress.clone(),
        FieldKind::Affine => train.stats.affine.clone(),
        FieldKind::Deformation => train.stats.position.clone(),
    };
    let d_out = kind.output_dim();

    // normalized targets, [d_out × n] per frame
    let targets: Vec<Vec<f64>> = train
        .frames
        .iter()
        .map(|f| {
            let mut t = vec![0.0; d_out * n];
            match kind {
                FieldKind::Stress => {
                    for (c, s) in f.stresses.iter().enumerate() {
                        for i in 0..6 {
                            t[i * n + c] = out_stats.normalize(i, s[i]);
                        }
                    }
                }
                FieldKind::Affine => {
                    for (c, a) in f.affines.iter().enumerate() {
                        for i in 0..9 {
                            t[i * n + c] = out_stats.normalize(i, a[i]);
                        }
                    }
                }
                FieldKind::Deformation => {
                    for (c, p) in f.positions.iter().enumerate() {
                        for i in 0..3 {
                            t[i * n + c] = out_stats.normalize(i, p[i]);
                        }
                    }
                }
            }
            t
        })
        .collect();

    // normalized per-frame input tail (latent, then optional μ)
    let tails: Vec<Vec<f64>> = train
        .frames
        .iter()
        .zip(latents)
        .map(|(f, l)| {
            let mut tail = Vec::with_capacity(r + mu_len);
            for (j, &v) in l.iter().enumerate() {
                tail.push(latent_stats.normalize(j, v));
            }
            if let Some(ms) = &mu_stats {
                for (j, &v) in f.mu.iter().enumerate() {
                    tail.push(ms.normalize(j, v));
                }
            }
            tail
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = spec.xavier_init_with(&mut rng);
    let mut adam = AdamState::new(theta.len());
    let mut grad = vec![0.0; theta.len()];
    let mut input = vec![0.0; spec.input_dim * n];
    input[..3 * n].copy_from_slice(&normalized_ref_rows(train));

    let mut cache = BatchCache::default();
    let mut order: Vec<usize> = (0..train.frames.len()).collect();
    let epochs = cfg.scaled_epochs(cfg.stress_epochs_per_rate);

    for &lr in &cfg.learning_rates {
        for _epoch in 0..epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_frames) {
                grad.fill(0.0);
                let denom = (d_out * n * chunk.len()) as f64;
                let mut batch_sq = 0.0;
                for &fi in chunk {
                    for (j, &v) in tails[fi].iter().enumerate() {
                        input[(3 + j) * n..(4 + j) * n].fill(v);
                    }
                    let mut upstream =
                        mlp_forward_batch(&spec, &theta, &input, n, Some(&mut cache));
                    for (u, t) in upstream.iter_mut().zip(&targets[fi]) {
                        let resid = *u - t;
                        batch_sq += resid * resid;
                        *u = 2.0 * resid / denom;
                    }
                    mlp_backward_batch(&spec, &theta, &cache, &upstream, &mut grad, false);
                }
                if !batch_sq.is_finite() {
                    return Err(Error::Divergence(format!(
                        "{kind:?} loss became non-finite at lr {lr} (adam step {})",
                        adam.step_count()
                    )));
                }
                adam_step(&mut theta, &grad, &mut adam, lr, &cfg.adam);
            }
        }
    }

    Ok(FieldModel {
        kind,
        spec,
        theta,
        x_stats: train.stats.ref_pos.clone(),
        latent_stats,
        out_stats,
        mu_stats,
    })
}

/// Trains the stress decoder h on frozen latents.
pub fn train_stress(
    train: &TrainSet,
    latents: &[Vec<f64>],
    spec: MlpSpec,
    cfg: &TrainConfig,
) -> Result<FieldModel> {
    train_supervised(
        train,
        latents,
        spec,
        cfg,
        FieldKind::Stress,
        cfg.condition_stress_on_mu,
    )
}

/// Trains the affine momentum decoder l on frozen latents.
pub fn train_affine(
    train: &TrainSet,
    latents: &[Vec<f64>],
    spec: MlpSpec,
    cfg: &TrainConfig,
) -> Result<FieldModel> {
    train_supervised(
        train,
        latents,
        spec,
        cfg,
        FieldKind::Affine,
        cfg.condition_affine_on_mu,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::dataset::{Frame, TrajectoryDataset};
    use rand::{Rng, SeedableRng};

    fn translation_dataset(n: usize, frames: usize, seed: u64) -> TrajectoryDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ref_pos: Vec<Vec3> = (0..n)
            .map(|_| {
                Vec3::new(
                    rng.gen::<f64>(),
                    rng.gen::<f64>(),
                    rng.gen::<f64>(),
                )
            })
            .collect();
        let shift = Vec3::new(0.3, -0.1, 0.2);
        let make = |t: f64| Frame {
            positions: ref_pos.iter().map(|p| p + shift * (0.05 * t)).collect(),
            stresses: vec![[0.0; 6]; n],
            affines: vec![[0.0; 9]; n],
        };
        let frames = (0..frames).map(|t| make(t as f64)).collect();
        TrajectoryDataset {
            ref_pos,
            frames,
            mu: vec![1.0],
            dt: 1e-3,
            dx: 0.1,
        }
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            learning_rates: vec![3e-3, 1e-3, 3e-4, 1e-4],
            deformation_epochs_per_rate: 150,
            stress_epochs_per_rate: 120,
            epoch_scale: 1.0,
            batch_frames: 8,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn memorize_single_static_frame() {
        let mut ds = translation_dataset(24, 1, 3);
        ds.frames.truncate(1);
        let train = TrainSet::from_datasets(vec![ds]).unwrap();
        let spec = MlpSpec {
            input_dim: 3 + 2,
            output_dim: 3,
            hidden_layers: 5,
            hidden_width: 24,
        };
        let mut cfg = quick_cfg();
        cfg.learning_rates = vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
        cfg.deformation_epochs_per_rate = 1200;
        let out = train_deformation(&train, spec, &cfg).unwrap();
        assert!(
            out.final_mse < 1e-6,
            "memorization MSE {} not below 1e-6",
            out.final_mse
        );
    }

    #[test]
    fn rigid_translation_reconstructs_below_one_percent() {
        let ds = translation_dataset(50, 16, 5);
        let train = TrainSet::from_datasets(vec![ds.clone()]).unwrap();
        let spec = MlpSpec {
            input_dim: 3 + 3,
            output_dim: 3,
            hidden_layers: 3,
            hidden_width: 16,
        };
        let mut cfg = quick_cfg();
        cfg.deformation_epochs_per_rate = 300;
        let out = train_deformation(&train, spec, &cfg).unwrap();

        // relative reconstruction error over all frames
        let mut num = 0.0;
        let mut den = 0.0;
        for (f, latent) in ds.frames.iter().zip(&out.latents) {
            for (p, x) in ds.ref_pos.iter().zip(&f.positions) {
                let decoded = out.field.decode_position(p, latent).unwrap();
                num += (decoded - x).norm_squared();
                den += x.norm_squared();
            }
        }
        let delta = (num / den).sqrt();
        assert!(delta < 0.01, "translation reconstruction δ = {delta}");

        // stage-boundary losses are non-increasing
        for w in out.stage_losses.windows(2) {
            assert!(
                w[1] <= w[0] * 1.0 + 1e-12,
                "stage losses increased: {:?}",
                out.stage_losses
            );
        }
    }

    #[test]
    fn zero_target_fields_train_to_zero() {
        let ds = translation_dataset(30, 8, 11);
        let train = TrainSet::from_datasets(vec![ds]).unwrap();
        let g_spec = MlpSpec {
            input_dim: 3 + 2,
            output_dim: 3,
            hidden_layers: 2,
            hidden_width: 8,
        };
        let mut cfg = quick_cfg();
        cfg.learning_rates = vec![3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6];
        cfg.deformation_epochs_per_rate = 60;
        cfg.stress_epochs_per_rate = 800;
        let deform = train_deformation(&train, g_spec, &cfg).unwrap();

        let h_spec = MlpSpec {
            input_dim: 3 + 2,
            output_dim: 6,
            hidden_layers: 4,
            hidden_width: 16,
        };
        let h = train_stress(&train, &deform.latents, h_spec, &cfg).unwrap();
        let l_spec = MlpSpec {
            input_dim: 3 + 2,
            output_dim: 9,
            hidden_layers: 4,
            hidden_width: 16,
        };
        let l = train_affine(&train, &deform.latents, l_spec, &cfg).unwrap();

        // zero-stress targets: all-zero output column means std was clamped
        // to 1, so the decoded stress must approach 0
        for (latent, frame) in deform.latents.iter().zip(&train.frames) {
            let _ = frame;
            for p in train.ref_pos.iter().step_by(7) {
                let tau = h.decode_stress(p, latent, &[]).unwrap();
                assert!(tau.norm() < 1e-3, "stress {}", tau.norm());
                let c = l.decode(p, latent, &[]).unwrap();
                assert!(c.iter().all(|v| v.abs() < 1e-3));
            }
        }
    }

    #[test]
    fn stress_linear_in_position_is_learnable() {
        // one fixed latent (single frame), stress linear in X
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let n = 80;
        let ref_pos: Vec<Vec3> = (0..n)
            .map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen()))
            .collect();
        let stress_of = |p: &Vec3| -> [f64; 6] {
            [
                0.5 * p[0],
                -0.3 * p[1],
                0.2 * p[2],
                0.1 * p[0],
                0.0,
                -0.2 * p[2],
            ]
        };
        let frame = Frame {
            positions: ref_pos.clone(),
            stresses: ref_pos.iter().map(stress_of).collect(),
            affines: vec![[0.0; 9]; n],
        };
        let ds = TrajectoryDataset {
            ref_pos: ref_pos.clone(),
            frames: vec![frame],
            mu: vec![0.0],
            dt: 1e-3,
            dx: 0.1,
        };
        let train = TrainSet::from_datasets(vec![ds]).unwrap();
        let latents = vec![vec![0.4, -0.2]];
        let spec = MlpSpec {
            input_dim: 3 + 2,
            output_dim: 6,
            hidden_layers: 2,
            hidden_width: 12,
        };
        let mut cfg = quick_cfg();
        cfg.stress_epochs_per_rate = 500;
        let h = train_stress(&train, &latents, spec, &cfg).unwrap();

        let mut mse = 0.0;
        for p in &ref_pos {
            let out = h.decode(p, &latents[0], &[]).unwrap();
            let expect = stress_of(p);
            for i in 0..6 {
                let d = out[i] - expect[i];
                mse += d * d;
            }
        }
        mse /= (6 * n) as f64;
        assert!(mse < 1e-4, "linear stress fit MSE {mse}");
    }

    #[test]
    fn fixed_seed_training_is_bitwise_reproducible() {
        let ds = translation_dataset(20, 6, 23);
        let train = TrainSet::from_datasets(vec![ds]).unwrap();
        let spec = MlpSpec {
            input_dim: 3 + 2,
            output_dim: 3,
            hidden_layers: 2,
            hidden_width: 8,
        };
        let mut cfg = quick_cfg();
        cfg.deformation_epochs_per_rate = 10;
        let a = train_deformation(&train, spec, &cfg).unwrap();
        let b = train_deformation(&train, spec, &cfg).unwrap();
        assert_eq!(a.field.theta, b.field.theta);
        assert_eq!(a.encoder.theta, b.encoder.theta);
        assert_eq!(a.latents, b.latents);
    }

    #[test]
    fn mu_conditioning_changes_input_dim() {
        let ds = translation_dataset(16, 4, 29);
        let train = TrainSet::from_datasets(vec![ds]).unwrap();
        let latents = vec![vec![0.0, 0.0]; 4];
        let mut cfg = quick_cfg();
        cfg.deformation_epochs_per_rate = 2;
        cfg.stress_epochs_per_rate = 2;
        cfg.condition_stress_on_mu = true;
        // wrong input dim is rejected
        let bad = MlpSpec {
            input_dim: 3 + 2,
            output_dim: 6,
            hidden_layers: 1,
            hidden_width: 6,
        };
        assert!(train_stress(&train, &latents, bad, &cfg).is_err());
        let good = MlpSpec {
            input_dim: 3 + 2 + 1,
            output_dim: 6,
            hidden_layers: 1,
            hidden_width: 6,
        };
        let h = train_stress(&train, &latents, good, &cfg).unwrap();
        assert_eq!(h.mu_len(), 1);
        assert!(h.decode(&Vec3::zeros(), &[0.0, 0.0], &[1.0]).is_ok());
    }
}
