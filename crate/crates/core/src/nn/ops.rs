//! Row-major kernels. Matrices are `&[f64]` with an explicit column count;
//! weights are `in x out`.

use super::Tensor;

pub const LN_EPS: f64 = 1e-5;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `x W + b` for `x` of shape `rows x w.rows()`.
pub fn linear(x: &[f64], w: &Tensor, b: Option<&Tensor>) -> Vec<f64> {
    let (din, dout) = (w.rows(), w.cols());
    let rows = x.len() / din;
    let mut y = vec![0.0; rows * dout];
    for r in 0..rows {
        let yr = &mut y[r * dout..(r + 1) * dout];
        if let Some(b) = b {
            yr.copy_from_slice(&b.data);
        }
        for (k, &xv) in x[r * din..(r + 1) * din].iter().enumerate() {
            if xv != 0.0 {
                axpy(xv, w.row(k), yr);
            }
        }
    }
    y
}

/// Accumulates `dW += x^T dy`, `db += colsum(dy)` and returns `dy W^T`.
pub fn linear_backward(x: &[f64], w: &Tensor, dy: &[f64], dw: &mut Tensor, db: Option<&mut Tensor>) -> Vec<f64> {
    let (din, dout) = (w.rows(), w.cols());
    let rows = x.len() / din;
    let mut dx = vec![0.0; rows * din];
    for r in 0..rows {
        let dyr = &dy[r * dout..(r + 1) * dout];
        let xr = &x[r * din..(r + 1) * din];
        let dxr = &mut dx[r * din..(r + 1) * din];
        for k in 0..din {
            dxr[k] = dot(dyr, w.row(k));
            if xr[k] != 0.0 {
                axpy(xr[k], dyr, dw.row_mut(k));
            }
        }
    }
    if let Some(db) = db {
        for r in 0..rows {
            axpy(1.0, &dy[r * dout..(r + 1) * dout], &mut db.data);
        }
    }
    dx
}

pub struct LayerNormCache {
    pub normalized: Vec<f64>,
    pub inv_std: Vec<f64>,
}

pub fn layer_norm(x: &[f64], cols: usize, gamma: &Tensor, beta: &Tensor) -> (Vec<f64>, LayerNormCache) {
    let rows = x.len() / cols;
    let mut y = vec![0.0; x.len()];
    let mut normalized = vec![0.0; x.len()];
    let mut inv_std = Vec::with_capacity(rows);
    for r in 0..rows {
        let xr = &x[r * cols..(r + 1) * cols];
        let mean = xr.iter().sum::<f64>() / cols as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
        let is = 1.0 / (var + LN_EPS).sqrt();
        inv_std.push(is);
        for c in 0..cols {
            let n = (xr[c] - mean) * is;
            normalized[r * cols + c] = n;
            y[r * cols + c] = n * gamma.data[c] + beta.data[c];
        }
    }
    (y, LayerNormCache { normalized, inv_std })
}

pub fn layer_norm_backward(
    dy: &[f64],
    cols: usize,
    cache: &LayerNormCache,
    gamma: &Tensor,
    dgamma: &mut Tensor,
    dbeta: &mut Tensor,
) -> Vec<f64> {
    let rows = dy.len() / cols;
    let mut dx = vec![0.0; dy.len()];
    let mut dn = vec![0.0; cols];
    for r in 0..rows {
        let n = &cache.normalized[r * cols..(r + 1) * cols];
        let dyr = &dy[r * cols..(r + 1) * cols];
        for c in 0..cols {
            dgamma.data[c] += dyr[c] * n[c];
            dbeta.data[c] += dyr[c];
            dn[c] = dyr[c] * gamma.data[c];
        }
        let mean_dn = dn.iter().sum::<f64>() / cols as f64;
        let mean_dn_n = dot(&dn, n) / cols as f64;
        let is = cache.inv_std[r];
        for c in 0..cols {
            dx[r * cols + c] = is * (dn[c] - mean_dn - n[c] * mean_dn_n);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// In-place numerically stable softmax.
pub fn softmax(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// `-ln softmax(logits)[target]`, computed stably.
pub fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    lse - logits[target]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..11).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn linear_small() {
        let w = Tensor {
            shape: vec![2, 3],
            data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        let b = Tensor {
            shape: vec![3],
            data: vec![0.5, 0.0, -0.5],
        };
        assert_eq!(linear(&[1.0, -1.0], &w, Some(&b)), vec![-2.5, -3.0, -3.5]);
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let g = Tensor::filled(&[4], 1.0);
        let b = Tensor::zeros(&[4]);
        let (y, _) = layer_norm(&[1.0, 2.0, 3.0, 4.0], 4, &g, &b);
        let mean: f64 = y.iter().sum::<f64>() / 4.0;
        let var: f64 = y.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-4);
    }

    #[test]
    fn gelu_derivative_matches_difference() {
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let numeric = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((numeric - gelu_grad(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn cross_entropy_of_uniform() {
        assert!((cross_entropy(&[0.3; 4], 2) - 4f64.ln()).abs() < 1e-12);
        let mut p = vec![1000.0, 0.0];
        softmax(&mut p);
        assert_eq!(p, vec![1.0, 0.0]);
    }
}
