//! Convolutional frame encoder: the particle positions of one frame,
//! ordered by particle index as a 3-channel sequence, are reduced by
//! kernel-6 stride-4 convolutions until the sequence length is at most 12,
//! then flattened and mapped through two dense layers to the latent code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

use super::layers::{
    conv1d_backward, conv1d_forward, conv_output_len, dense_backward, dense_forward,
    elu_backward_from_post, elu_batch, xavier_fill, CONV_CHANNELS, CONV_KERNEL,
};

const DENSE_HIDDEN: usize = 32;
const CONV_PARAMS: usize = CONV_CHANNELS * CONV_CHANNELS * CONV_KERNEL + CONV_CHANNELS;

/// Encoder architecture, fully determined by the particle count and the
/// latent dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderSpec {
    /// Sequence length |P|.
    pub input_len: usize,
    /// Latent dimension r.
    pub latent_dim: usize,
}

impl EncoderSpec {
    pub fn new(input_len: usize, latent_dim: usize) -> Result<Self> {
        if input_len < CONV_KERNEL {
            return Err(Error::Architecture {
                min: CONV_KERNEL,
                got: input_len,
            });
        }
        if latent_dim == 0 {
            return Err(Error::Shape("latent dimension must be positive".into()));
        }
        Ok(EncoderSpec {
            input_len,
            latent_dim,
        })
    }

    /// Sequence lengths through the conv stack, starting at the input
    /// length and ending at the first value ≤ 12.
    pub fn conv_lengths(&self) -> Vec<usize> {
        let mut lens = vec![self.input_len];
        while *lens.last().unwrap() > 12 {
            lens.push(conv_output_len(*lens.last().unwrap()));
        }
        lens
    }

    pub fn conv_layer_count(&self) -> usize {
        self.conv_lengths().len() - 1
    }

    /// Length of the flattened vector entering the dense head.
    pub fn flattened_len(&self) -> usize {
        CONV_CHANNELS * self.conv_lengths().last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        let flat = self.flattened_len();
        self.conv_layer_count() * CONV_PARAMS
            + (DENSE_HIDDEN * flat + DENSE_HIDDEN)
            + (self.latent_dim * DENSE_HIDDEN + self.latent_dim)
    }

    pub fn xavier_init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.xavier_init_with(&mut rng)
    }

    /// Xavier-uniform weights on the ELU layers (convolutions and the
    /// 32-wide dense layer); the linear output layer and all biases start
    /// at zero.
    pub fn xavier_init_with<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut theta = vec![0.0; self.param_count()];
        let mut off = 0;
        let fan = CONV_CHANNELS * CONV_KERNEL;
        for _ in 0..self.conv_layer_count() {
            xavier_fill(
                &mut theta[off..off + CONV_CHANNELS * CONV_CHANNELS * CONV_KERNEL],
                fan,
                fan,
                rng,
            );
            off += CONV_PARAMS;
        }
        let flat = self.flattened_len();
        xavier_fill(&mut theta[off..off + DENSE_HIDDEN * flat], flat, DENSE_HIDDEN, rng);
        theta
    }
}

/// Post-activation cache of one encoder forward pass.
#[derive(Debug, Default, Clone)]
pub struct EncoderCache {
    /// `acts[0]` is the (normalized) input, `acts[l+1]` the post-ELU output
    /// of conv layer `l`.
    pub conv_acts: Vec<Vec<f64>>,
    /// Post-ELU output of the 32-wide dense layer.
    pub hidden: Vec<f64>,
}

/// Forward pass; `input` is `[3 × input_len]`, channels first, already
/// normalized. Returns the r-dimensional latent.
pub fn encoder_forward(
    spec: &EncoderSpec,
    theta: &[f64],
    input: &[f64],
    mut cache: Option<&mut EncoderCache>,
) -> Vec<f64> {
    debug_assert_eq!(input.len(), CONV_CHANNELS * spec.input_len);
    debug_assert_eq!(theta.len(), spec.param_count());
    let lens = spec.conv_lengths();
    if let Some(c) = cache.as_deref_mut() {
        c.conv_acts.clear();
        c.conv_acts.push(input.to_vec());
    }
    let mut cur = input.to_vec();
    let mut off = 0;
    for l in 0..spec.conv_layer_count() {
        let w = &theta[off..off + CONV_CHANNELS * CONV_CHANNELS * CONV_KERNEL];
        let b = &theta[off + CONV_CHANNELS * CONV_CHANNELS * CONV_KERNEL..off + CONV_PARAMS];
        let mut next = vec![0.0; CONV_CHANNELS * lens[l + 1]];
        conv1d_forward(w, b, &cur, lens[l], &mut next);
        elu_batch(&mut next);
        if let Some(c) = cache.as_deref_mut() {
            c.conv_acts.push(next.clone());
        }
        cur = next;
        off += CONV_PARAMS;
    }
    // the conv output is already a contiguous channel-major vector
    let flat = spec.flattened_len();
    let w1 = &theta[off..off + DENSE_HIDDEN * flat];
    let b1 = &theta[off + DENSE_HIDDEN * flat..off + DENSE_HIDDEN * flat + DENSE_HIDDEN];
    off += DENSE_HIDDEN * flat + DENSE_HIDDEN;
    let mut hidden = vec![0.0; DENSE_HIDDEN];
    dense_forward(w1, b1, &cur, DENSE_HIDDEN, flat, 1, &mut hidden);
    elu_batch(&mut hidden);
    if let Some(c) = cache.as_deref_mut() {
        c.hidden = hidden.clone();
    }
    let w2 = &theta[off..off + spec.latent_dim * DENSE_HIDDEN];
    let b2 = &theta[off + spec.latent_dim * DENSE_HIDDEN..];
    let mut latent = vec![0.0; spec.latent_dim];
    dense_forward(w2, b2, &hidden, spec.latent_dim, DENSE_HIDDEN, 1, &mut latent);
    latent
}

/// Backward pass; accumulates parameter gradients for an upstream gradient
/// on the latent.
pub fn encoder_backward(
    spec: &EncoderSpec,
    theta: &[f64],
    cache: &EncoderCache,
    dlatent: &[f64],
    grad_theta: &mut [f64],
) {
    let lens = spec.conv_lengths();
    let flat = spec.flattened_len();
    let conv_total = spec.conv_layer_count() * CONV_PARAMS;
    let off1 = conv_total;
    let off2 = off1 + DENSE_HIDDEN * flat + DENSE_HIDDEN;

    // dense head
    let w2 = &theta[off2..off2 + spec.latent_dim * DENSE_HIDDEN];
    let mut d_hidden = vec![0.0; DENSE_HIDDEN];
    {
        let (dw2, db2) = grad_theta[off2..off2 + spec.latent_dim * DENSE_HIDDEN + spec.latent_dim]
            .split_at_mut(spec.latent_dim * DENSE_HIDDEN);
        dense_backward(
            w2,
            &cache.hidden,
            dlatent,
            spec.latent_dim,
            DENSE_HIDDEN,
            1,
            dw2,
            db2,
            Some(&mut d_hidden),
        );
    }
    elu_backward_from_post(&cache.hidden, &mut d_hidden);

    let w1 = &theta[off1..off1 + DENSE_HIDDEN * flat];
    let mut d_flat = vec![0.0; flat];
    {
        let (dw1, db1) = grad_theta[off1..off1 + DENSE_HIDDEN * flat + DENSE_HIDDEN]
            .split_at_mut(DENSE_HIDDEN * flat);
        dense_backward(
            w1,
            cache.conv_acts.last().unwrap(),
            &d_hidden,
            DENSE_HIDDEN,
            flat,
            1,
            dw1,
            db1,
            Some(&mut d_flat),
        );
    }

    // conv stack, last to first
    let mut d = d_flat;
    for l in (0..spec.conv_layer_count()).rev() {
        elu_backward_from_post(&cache.conv_acts[l + 1], &mut d);
        let off = l * CONV_PARAMS;
        let w = &theta[off..off + CONV_CHANNELS * CONV_CHANNELS * CONV_KERNEL];
        let x = &cache.conv_acts[l];
        let need_dx = l > 0;
        let mut dx = vec![0.0; CONV_CHANNELS * lens[l]];
        {
            let (dw, db) = grad_theta[off..off + CONV_PARAMS]
                .split_at_mut(CONV_CHANNELS * CONV_CHANNELS * CONV_KERNEL);
            conv1d_backward(w, x, &d, lens[l], dw, db, need_dx.then_some(dx.as_mut_slice()));
        }
        if need_dx {
            d = dx;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn length_math_for_thousand_particles() {
        let spec = EncoderSpec::new(1000, 6).unwrap();
        assert_eq!(spec.conv_lengths(), vec![1000, 249, 61, 14, 3]);
        assert_eq!(spec.conv_layer_count(), 4);
        assert_eq!(spec.flattened_len(), 9);
    }

    #[test]
    fn too_few_particles_is_architecture_error() {
        assert!(matches!(
            EncoderSpec::new(5, 4),
            Err(Error::Architecture { min: 6, got: 5 })
        ));
    }

    #[test]
    fn zero_input_zero_biases_give_zero_latent() {
        let spec = EncoderSpec::new(64, 4).unwrap();
        let mut theta = spec.xavier_init(3);
        // zero all biases (xavier_init already leaves them zero, but make
        // the intent explicit by also zeroing weights' effect on zero input)
        let input = vec![0.0; 3 * 64];
        let latent = encoder_forward(&spec, &theta, &input, None);
        assert!(latent.iter().all(|&v| v == 0.0));
        // and determinism: same frame twice
        for v in theta.iter_mut() {
            *v *= 1.0;
        }
        let input: Vec<f64> = (0..3 * 64).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = encoder_forward(&spec, &theta, &input, None);
        let b = encoder_forward(&spec, &theta, &input, None);
        assert_eq!(a, b);
    }

    #[test]
    fn encoder_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for trial in 0..5 {
            let spec = EncoderSpec::new(30 + trial * 17, 3).unwrap();
            let mut theta = spec.xavier_init(trial as u64);
            let input: Vec<f64> = (0..3 * spec.input_len)
                .map(|_| rng.gen::<f64>() - 0.5)
                .collect();
            let u: Vec<f64> = (0..spec.latent_dim)
                .map(|_| rng.gen::<f64>() - 0.5)
                .collect();
            let loss = |theta: &[f64]| {
                encoder_forward(&spec, theta, &input, None)
                    .iter()
                    .zip(&u)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            let mut cache = EncoderCache::default();
            let _ = encoder_forward(&spec, &theta, &input, Some(&mut cache));
            let mut grad = vec![0.0; spec.param_count()];
            encoder_backward(&spec, &theta, &cache, &u, &mut grad);
            for i in (0..theta.len()).step_by(7) {
                let orig = theta[i];
                theta[i] = orig + h;
                let lp = loss(&theta);
                theta[i] = orig - h;
                let lm = loss(&theta);
                theta[i] = orig;
                let fd = (lp - lm) / (2.0 * h);
                let tol = 1e-6 * fd.abs().max(grad[i].abs()).max(1e-3);
                assert!((fd - grad[i]).abs() <= tol, "param {i}: fd={fd} an={}", grad[i]);
            }
        }
    }
}
