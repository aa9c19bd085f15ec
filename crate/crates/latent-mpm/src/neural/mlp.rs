//! The decoder MLP: ELU hidden layers, linear output, flat parameter
//! vector with an explicit layer manifest, batched forward and manual
//! reverse-mode backward.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

use super::layers::{dense_backward, dense_forward, elu_backward_from_post, elu_batch, xavier_fill};

/// Architecture of one decoder MLP.
///
/// `input_dim = 3 + r` (plus the μ record length when the stress decoder
/// is conditioned on μ); the hidden width is `β · d_base` with
/// `d_base = output_dim` (3 for the deformation field, 6 for stress,
/// 9 for affine). `hidden_layers = 0` degenerates to a single linear
/// layer, used by tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
}

/// Shape of one dense layer, `y = W x + b` with `W: rows × cols`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub rows: usize,
    pub cols: usize,
}

impl LayerShape {
    pub fn param_count(&self) -> usize {
        self.rows * self.cols + self.rows
    }
}

impl MlpSpec {
    /// Standard decoder: five ELU hidden layers of width `beta * output_dim`.
    pub fn decoder(latent_dim: usize, output_dim: usize, beta: usize) -> Self {
        MlpSpec {
            input_dim: 3 + latent_dim,
            output_dim,
            hidden_layers: 5,
            hidden_width: beta * output_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Shape(format!("degenerate MLP dims: {self:?}")));
        }
        if self.hidden_layers > 0 && self.hidden_width == 0 {
            return Err(Error::Shape("hidden width must be positive".into()));
        }
        Ok(())
    }

    /// Dense layers in order; the parameter vector stores, per layer,
    /// the row-major weight matrix followed by the bias.
    pub fn manifest(&self) -> Vec<LayerShape> {
        if self.hidden_layers == 0 {
            return vec![LayerShape {
                rows: self.output_dim,
                cols: self.input_dim,
            }];
        }
        let mut layers = Vec::with_capacity(self.hidden_layers + 1);
        layers.push(LayerShape {
            rows: self.hidden_width,
            cols: self.input_dim,
        });
        for _ in 1..self.hidden_layers {
            layers.push(LayerShape {
                rows: self.hidden_width,
                cols: self.hidden_width,
            });
        }
        layers.push(LayerShape {
            rows: self.output_dim,
            cols: self.hidden_width,
        });
        layers
    }

    pub fn param_count(&self) -> usize {
        self.manifest().iter().map(|l| l.param_count()).sum()
    }

    /// Initial parameter vector, deterministic per seed: Xavier-uniform
    /// weights on the ELU (hidden) layers, zeros on the linear output
    /// layer and all biases. A zero output layer makes the network start
    /// at the output mean, which in particular fits constant targets
    /// exactly from the first step.
    pub fn xavier_init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.xavier_init_with(&mut rng)
    }

    pub fn xavier_init_with<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let manifest = self.manifest();
        let mut theta = vec![0.0; self.param_count()];
        let mut off = 0;
        for (l, layer) in manifest.iter().enumerate() {
            let n_w = layer.rows * layer.cols;
            if l + 1 < manifest.len() {
                xavier_fill(&mut theta[off..off + n_w], layer.cols, layer.rows, rng);
            }
            off += layer.param_count(); // output layer and biases stay zero
        }
        theta
    }
}

/// Cached post-activations of a batched forward pass; `acts[0]` is the
/// input, `acts[l+1]` the post-ELU output of hidden layer `l`, and the
/// final entry the linear network output.
#[derive(Debug, Default, Clone)]
pub struct BatchCache {
    pub batch: usize,
    pub acts: Vec<Vec<f64>>,
}

/// Batched forward pass. `input` is `[input_dim × batch]`; returns
/// `[output_dim × batch]` and fills `cache` when provided.
pub fn mlp_forward_batch(
    spec: &MlpSpec,
    theta: &[f64],
    input: &[f64],
    batch: usize,
    cache: Option<&mut BatchCache>,
) -> Vec<f64> {
    debug_assert_eq!(input.len(), spec.input_dim * batch);
    debug_assert_eq!(theta.len(), spec.param_count());
    let manifest = spec.manifest();
    let last = manifest.len() - 1;
    if let Some(c) = cache {
        c.batch = batch;
        c.acts.clear();
        c.acts.push(input.to_vec());
        let mut off = 0;
        for (l, shape) in manifest.iter().enumerate() {
            let w = &theta[off..off + shape.rows * shape.cols];
            let b = &theta[off + shape.rows * shape.cols..off + shape.param_count()];
            let mut next = vec![0.0; shape.rows * batch];
            dense_forward(w, b, &c.acts[l], shape.rows, shape.cols, batch, &mut next);
            if l != last {
                elu_batch(&mut next);
            }
            c.acts.push(next);
            off += shape.param_count();
        }
        return c.acts.last().unwrap().clone();
    }
    let mut cur = input.to_vec();
    let mut off = 0;
    for (l, shape) in manifest.iter().enumerate() {
        let w = &theta[off..off + shape.rows * shape.cols];
        let b = &theta[off + shape.rows * shape.cols..off + shape.param_count()];
        let mut next = vec![0.0; shape.rows * batch];
        dense_forward(w, b, &cur, shape.rows, shape.cols, batch, &mut next);
        if l != last {
            elu_batch(&mut next);
        }
        cur = next;
        off += shape.param_count();
    }
    cur
}

/// Reverse-mode backward pass of [`mlp_forward_batch`].
///
/// `upstream` is `∂L/∂output`, `[output_dim × batch]`. Parameter gradients
/// are accumulated into `grad_theta`; the return value is `∂L/∂input`
/// (`[input_dim × batch]`) when `want_input_grad` is set.
pub fn mlp_backward_batch(
    spec: &MlpSpec,
    theta: &[f64],
    cache: &BatchCache,
    upstream: &[f64],
    grad_theta: &mut [f64],
    want_input_grad: bool,
) -> Option<Vec<f64>> {
    let batch = cache.batch;
    debug_assert_eq!(upstream.len(), spec.output_dim * batch);
    debug_assert_eq!(grad_theta.len(), spec.param_count());
    let manifest = spec.manifest();
    let offsets: Vec<usize> = manifest
        .iter()
        .scan(0usize, |acc, l| {
            let o = *acc;
            *acc += l.param_count();
            Some(o)
        })
        .collect();

    let mut d = upstream.to_vec();
    for l in (0..manifest.len()).rev() {
        let shape = manifest[l];
        let off = offsets[l];
        let w = &theta[off..off + shape.rows * shape.cols];
        let x = &cache.acts[l];
        let need_dx = l > 0 || want_input_grad;
        let mut dx = if need_dx {
            vec![0.0; shape.cols * batch]
        } else {
            Vec::new()
        };
        {
            let (dw, db) = grad_theta[off..off + shape.param_count()]
                .split_at_mut(shape.rows * shape.cols);
            dense_backward(
                w,
                x,
                &d,
                shape.rows,
                shape.cols,
                batch,
                dw,
                db,
                need_dx.then_some(dx.as_mut_slice()),
            );
        }
        if l > 0 {
            // chain through the ELU that produced acts[l]
            elu_backward_from_post(&cache.acts[l], &mut dx);
            d = dx;
        } else if want_input_grad {
            return Some(dx);
        }
    }
    None
}

/// Single-sample forward pass.
pub fn mlp_forward(spec: &MlpSpec, theta: &[f64], input: &[f64]) -> Vec<f64> {
    mlp_forward_batch(spec, theta, input, 1, None)
}

/// Single-sample gradients: given an upstream gradient on the output,
/// returns `(∂L/∂θ, ∂L/∂input)`.
pub fn mlp_backward(
    spec: &MlpSpec,
    theta: &[f64],
    input: &[f64],
    upstream: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut cache = BatchCache::default();
    let _ = mlp_forward_batch(spec, theta, input, 1, Some(&mut cache));
    let mut grad_theta = vec![0.0; spec.param_count()];
    let grad_input = mlp_backward_batch(spec, theta, &cache, upstream, &mut grad_theta, true)
        .expect("input grad requested");
    (grad_theta, grad_input)
}
