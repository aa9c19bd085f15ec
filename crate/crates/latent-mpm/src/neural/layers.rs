//! Batched layer primitives: dense, ELU and strided 1-D convolution, each
//! with a hand-written reverse-mode backward pass.
//!
//! Batches are stored row-major as `[dim × batch]`: element `(d, c)` lives
//! at `d * batch + c`, so the inner loops run over contiguous memory.

use rand::Rng;

/// Exponential linear unit: `x` for `x > 0`, `eˣ − 1` otherwise.
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

/// Derivative of [`elu`]; continuous with value 1 at `x = 0`.
pub fn elu_deriv(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// In-place ELU over a batch buffer.
pub fn elu_batch(buf: &mut [f64]) {
    for x in buf {
        if *x <= 0.0 {
            *x = x.exp() - 1.0;
        }
    }
}

/// ELU backward from the stored post-activation: for `y = elu(x)`,
/// `elu'(x) = 1` when `y > 0` and `y + 1` otherwise.
pub fn elu_backward_from_post(post: &[f64], d: &mut [f64]) {
    for (y, g) in post.iter().zip(d.iter_mut()) {
        if *y <= 0.0 {
            *g *= *y + 1.0;
        }
    }
}

/// `y = W x + b` over a batch: `w` is `[rows × cols]` row-major, `x` is
/// `[cols × batch]`, `y` is `[rows × batch]`.
pub fn dense_forward(
    w: &[f64],
    b: &[f64],
    x: &[f64],
    rows: usize,
    cols: usize,
    batch: usize,
    y: &mut [f64],
) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols * batch);
    debug_assert_eq!(y.len(), rows * batch);
    for r in 0..rows {
        let y_row = &mut y[r * batch..(r + 1) * batch];
        y_row.fill(b[r]);
        let w_row = &w[r * cols..(r + 1) * cols];
        for (k, &wv) in w_row.iter().enumerate() {
            let x_row = &x[k * batch..(k + 1) * batch];
            for (yv, xv) in y_row.iter_mut().zip(x_row) {
                *yv += wv * xv;
            }
        }
    }
}

/// Backward pass of [`dense_forward`]. Accumulates `dW = dY Xᵀ` and
/// `db = rowsum(dY)` into the gradient slices and, when `dx` is given,
/// writes `dX = Wᵀ dY`.
#[allow(clippy::too_many_arguments)]
pub fn dense_backward(
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    rows: usize,
    cols: usize,
    batch: usize,
    dw: &mut [f64],
    db: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    debug_assert_eq!(dw.len(), rows * cols);
    debug_assert_eq!(db.len(), rows);
    for r in 0..rows {
        let dy_row = &dy[r * batch..(r + 1) * batch];
        let dw_row = &mut dw[r * cols..(r + 1) * cols];
        for k in 0..cols {
            let x_row = &x[k * batch..(k + 1) * batch];
            let mut acc = 0.0;
            for (g, xv) in dy_row.iter().zip(x_row) {
                acc += g * xv;
            }
            dw_row[k] += acc;
        }
        db[r] += dy_row.iter().sum::<f64>();
    }
    if let Some(dx) = dx {
        debug_assert_eq!(dx.len(), cols * batch);
        dx.fill(0.0);
        for r in 0..rows {
            let dy_row = &dy[r * batch..(r + 1) * batch];
            let w_row = &w[r * cols..(r + 1) * cols];
            for (k, &wv) in w_row.iter().enumerate() {
                let dx_row = &mut dx[k * batch..(k + 1) * batch];
                for (g, d) in dy_row.iter().zip(dx_row.iter_mut()) {
                    *d += wv * g;
                }
            }
        }
    }
}

/// Output length of a kernel-6, stride-4 1-D convolution.
pub fn conv_output_len(input_len: usize) -> usize {
    (input_len - CONV_KERNEL) / CONV_STRIDE + 1
}

pub const CONV_KERNEL: usize = 6;
pub const CONV_STRIDE: usize = 4;
pub const CONV_CHANNELS: usize = 3;

/// Strided 1-D convolution, 3 input and 3 output channels, kernel 6,
/// stride 4. `w` is `[out_ch × in_ch × kernel]`, `x` is `[3 × len]`,
/// `y` is `[3 × out_len]`.
pub fn conv1d_forward(w: &[f64], b: &[f64], x: &[f64], len: usize, y: &mut [f64]) {
    let out_len = conv_output_len(len);
    debug_assert_eq!(y.len(), CONV_CHANNELS * out_len);
    for oc in 0..CONV_CHANNELS {
        let y_row = &mut y[oc * out_len..(oc + 1) * out_len];
        y_row.fill(b[oc]);
        for ic in 0..CONV_CHANNELS {
            let x_row = &x[ic * len..(ic + 1) * len];
            let w_tap = &w[(oc * CONV_CHANNELS + ic) * CONV_KERNEL..][..CONV_KERNEL];
            for (t, yv) in y_row.iter_mut().enumerate() {
                let base = t * CONV_STRIDE;
                let mut acc = 0.0;
                for (k, &wv) in w_tap.iter().enumerate() {
                    acc += wv * x_row[base + k];
                }
                *yv += acc;
            }
        }
    }
}

/// Backward pass of [`conv1d_forward`]; accumulates weight/bias gradients
/// and optionally writes the input gradient.
pub fn conv1d_backward(
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    len: usize,
    dw: &mut [f64],
    db: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let out_len = conv_output_len(len);
    for oc in 0..CONV_CHANNELS {
        let dy_row = &dy[oc * out_len..(oc + 1) * out_len];
        db[oc] += dy_row.iter().sum::<f64>();
        for ic in 0..CONV_CHANNELS {
            let x_row = &x[ic * len..(ic + 1) * len];
            let dw_tap = &mut dw[(oc * CONV_CHANNELS + ic) * CONV_KERNEL..][..CONV_KERNEL];
            for (t, &g) in dy_row.iter().enumerate() {
                let base = t * CONV_STRIDE;
                for (k, dwv) in dw_tap.iter_mut().enumerate() {
                    *dwv += g * x_row[base + k];
                }
            }
        }
    }
    if let Some(dx) = dx {
        dx.fill(0.0);
        for oc in 0..CONV_CHANNELS {
            let dy_row = &dy[oc * out_len..(oc + 1) * out_len];
            for ic in 0..CONV_CHANNELS {
                let dx_row = &mut dx[ic * len..(ic + 1) * len];
                let w_tap = &w[(oc * CONV_CHANNELS + ic) * CONV_KERNEL..][..CONV_KERNEL];
                for (t, &g) in dy_row.iter().enumerate() {
                    let base = t * CONV_STRIDE;
                    for (k, &wv) in w_tap.iter().enumerate() {
                        dx_row[base + k] += wv * g;
                    }
                }
            }
        }
    }
}

/// Fills a weight slice with Xavier-uniform values,
/// `w ~ U(−√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out)))`.
pub fn xavier_fill<R: Rng>(w: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut R) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in w {
        *v = (rng.gen::<f64>() * 2.0 - 1.0) * bound;
    }
}

/// Xavier bound for given fan-in/fan-out; exposed for tests.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn elu_values_and_derivative_continuity() {
        assert_eq!(elu(0.0), 0.0);
        assert_eq!(elu(1.0), 1.0);
        assert_relative_eq!(elu(-1.0), (-1.0f64).exp() - 1.0, epsilon = 1e-15);
        assert_relative_eq!(elu(-1.0), -0.6321205588285577, epsilon = 1e-12);
        // derivative approaches 1 from both sides of 0
        assert_relative_eq!(elu_deriv(1e-12), 1.0, epsilon = 1e-9);
        assert_relative_eq!(elu_deriv(-1e-12), 1.0, epsilon = 1e-9);
        assert_eq!(elu_deriv(0.0), (0.0f64).exp());
    }

    #[test]
    fn xavier_bound_matches_formula() {
        assert_relative_eq!(xavier_bound(3, 3), 1.0);
        assert_relative_eq!(xavier_bound(12, 12), 0.5);
    }

    #[test]
    fn xavier_variance_near_uniform_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (fan_in, fan_out) = (100, 100);
        let mut w = vec![0.0; 10_000];
        xavier_fill(&mut w, fan_in, fan_out, &mut rng);
        let bound = xavier_bound(fan_in, fan_out);
        assert!(w.iter().all(|v| v.abs() <= bound));
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        let expect = 2.0 / (fan_in + fan_out) as f64; // bound²/3
        assert!((var - expect).abs() < 0.2 * expect);
    }

    #[test]
    fn dense_forward_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (rows, cols, batch) = (4, 3, 5);
        let w: Vec<f64> = (0..rows * cols).map(|_| rng.gen::<f64>() - 0.5).collect();
        let b: Vec<f64> = (0..rows).map(|_| rng.gen::<f64>() - 0.5).collect();
        let x: Vec<f64> = (0..cols * batch).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mut y = vec![0.0; rows * batch];
        dense_forward(&w, &b, &x, rows, cols, batch, &mut y);
        for r in 0..rows {
            for c in 0..batch {
                let mut expect = b[r];
                for k in 0..cols {
                    expect += w[r * cols + k] * x[k * batch + c];
                }
                assert_relative_eq!(y[r * batch + c], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn conv_length_recurrence() {
        assert_eq!(conv_output_len(1000), 249);
        assert_eq!(conv_output_len(249), 61);
        assert_eq!(conv_output_len(61), 14);
        assert_eq!(conv_output_len(14), 3);
        for l in 6..200usize {
            assert_eq!(conv_output_len(l), (l - 6) / 4 + 1);
        }
    }

    /// Central finite differences against the analytic backward passes for
    /// both layer types (loss = u·y for a random projection u).
    #[test]
    fn layer_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;

        for _ in 0..20 {
            let (rows, cols, batch) = (3, 4, 2);
            let mut w: Vec<f64> = (0..rows * cols).map(|_| rng.gen::<f64>() - 0.5).collect();
            let b: Vec<f64> = (0..rows).map(|_| rng.gen::<f64>() - 0.5).collect();
            let mut x: Vec<f64> = (0..cols * batch).map(|_| rng.gen::<f64>() - 0.5).collect();
            let u: Vec<f64> = (0..rows * batch).map(|_| rng.gen::<f64>() - 0.5).collect();
            let loss = |w: &[f64], x: &[f64]| {
                let mut y = vec![0.0; rows * batch];
                dense_forward(w, &b, x, rows, cols, batch, &mut y);
                y.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>()
            };
            let mut dw = vec![0.0; rows * cols];
            let mut db = vec![0.0; rows];
            let mut dx = vec![0.0; cols * batch];
            dense_backward(&w, &x, &u, rows, cols, batch, &mut dw, &mut db, Some(&mut dx));
            for i in 0..w.len() {
                let orig = w[i];
                w[i] = orig + h;
                let lp = loss(&w, &x);
                w[i] = orig - h;
                let lm = loss(&w, &x);
                w[i] = orig;
                let fd = (lp - lm) / (2.0 * h);
                assert!((fd - dw[i]).abs() <= 1e-6 * fd.abs().max(dw[i].abs()).max(1e-3));
            }
            for i in 0..x.len() {
                let orig = x[i];
                x[i] = orig + h;
                let lp = loss(&w, &x);
                x[i] = orig - h;
                let lm = loss(&w, &x);
                x[i] = orig;
                let fd = (lp - lm) / (2.0 * h);
                assert!((fd - dx[i]).abs() <= 1e-6 * fd.abs().max(dx[i].abs()).max(1e-3));
            }
        }

        for _ in 0..20 {
            let len = 14;
            let out_len = conv_output_len(len);
            let mut w: Vec<f64> = (0..CONV_CHANNELS * CONV_CHANNELS * CONV_KERNEL)
                .map(|_| rng.gen::<f64>() - 0.5)
                .collect();
            let b: Vec<f64> = (0..CONV_CHANNELS).map(|_| rng.gen::<f64>() - 0.5).collect();
            let mut x: Vec<f64> = (0..CONV_CHANNELS * len)
                .map(|_| rng.gen::<f64>() - 0.5)
                .collect();
            let u: Vec<f64> = (0..CONV_CHANNELS * out_len)
                .map(|_| rng.gen::<f64>() - 0.5)
                .collect();
            let loss = |w: &[f64], x: &[f64]| {
                let mut y = vec![0.0; CONV_CHANNELS * out_len];
                conv1d_forward(w, &b, x, len, &mut y);
                y.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>()
            };
            let mut dw = vec![0.0; w.len()];
            let mut db = vec![0.0; b.len()];
            let mut dx = vec![0.0; x.len()];
            conv1d_backward(&w, &x, &u, len, &mut dw, &mut db, Some(&mut dx));
            for i in 0..w.len() {
                let orig = w[i];
                w[i] = orig + h;
                let lp = loss(&w, &x);
                w[i] = orig - h;
                let lm = loss(&w, &x);
                w[i] = orig;
                let fd = (lp - lm) / (2.0 * h);
                assert!((fd - dw[i]).abs() <= 1e-6 * fd.abs().max(dw[i].abs()).max(1e-3));
            }
            for i in 0..x.len() {
                let orig = x[i];
                x[i] = orig + h;
                let lp = loss(&w, &x);
                x[i] = orig - h;
                let lm = loss(&w, &x);
                x[i] = orig;
                let fd = (lp - lm) / (2.0 * h);
                assert!((fd - dx[i]).abs() <= 1e-6 * fd.abs().max(dx[i].abs()).max(1e-3));
            }
        }
    }
}
