use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ops::{self, LayerNormCache};
use super::{prefixed, Parameters, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ff_dim: usize,
}

/// Pre-norm block: `x + Attn(LN(x))`, then `x + FFN(LN(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderLayer {
    ln1_gamma: Tensor,
    ln1_beta: Tensor,
    wq: Tensor,
    bq: Tensor,
    wk: Tensor,
    bk: Tensor,
    wv: Tensor,
    bv: Tensor,
    wo: Tensor,
    bo: Tensor,
    ln2_gamma: Tensor,
    ln2_beta: Tensor,
    w1: Tensor,
    b1: Tensor,
    w2: Tensor,
    b2: Tensor,
}

impl EncoderLayer {
    fn new(dim: usize, ff: usize, bound: f64, rng: &mut impl Rng) -> Self {
        EncoderLayer {
            ln1_gamma: Tensor::filled(&[dim], 1.0),
            ln1_beta: Tensor::zeros(&[dim]),
            wq: Tensor::uniform(&[dim, dim], bound, rng),
            bq: Tensor::zeros(&[dim]),
            wk: Tensor::uniform(&[dim, dim], bound, rng),
            bk: Tensor::zeros(&[dim]),
            wv: Tensor::uniform(&[dim, dim], bound, rng),
            bv: Tensor::zeros(&[dim]),
            wo: Tensor::uniform(&[dim, dim], bound, rng),
            bo: Tensor::zeros(&[dim]),
            ln2_gamma: Tensor::filled(&[dim], 1.0),
            ln2_beta: Tensor::zeros(&[dim]),
            w1: Tensor::uniform(&[dim, ff], bound, rng),
            b1: Tensor::zeros(&[ff]),
            w2: Tensor::uniform(&[ff, dim], bound, rng),
            b2: Tensor::zeros(&[dim]),
        }
    }
}

impl Parameters for EncoderLayer {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        [
            ("ln1_gamma", &self.ln1_gamma),
            ("ln1_beta", &self.ln1_beta),
            ("wq", &self.wq),
            ("bq", &self.bq),
            ("wk", &self.wk),
            ("bk", &self.bk),
            ("wv", &self.wv),
            ("bv", &self.bv),
            ("wo", &self.wo),
            ("bo", &self.bo),
            ("ln2_gamma", &self.ln2_gamma),
            ("ln2_beta", &self.ln2_beta),
            ("w1", &self.w1),
            ("b1", &self.b1),
            ("w2", &self.w2),
            ("b2", &self.b2),
        ]
        .into_iter()
        .map(|(n, t)| (n.to_string(), t))
        .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.ln1_gamma,
            &mut self.ln1_beta,
            &mut self.wq,
            &mut self.bq,
            &mut self.wk,
            &mut self.bk,
            &mut self.wv,
            &mut self.bv,
            &mut self.wo,
            &mut self.bo,
            &mut self.ln2_gamma,
            &mut self.ln2_beta,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FinalNorm {
    gamma: Tensor,
    beta: Tensor,
}

/// Stack of encoder layers followed by a final layer norm; with zero layers
/// it is the identity map and has no parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub config: EncoderConfig,
    layers: Vec<EncoderLayer>,
    final_norm: Option<FinalNorm>,
}

struct LayerCache {
    ln1: LayerNormCache,
    h1: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// `heads x rows x rows` attention weights.
    probs: Vec<f64>,
    attended: Vec<f64>,
    ln2: LayerNormCache,
    h2: Vec<f64>,
    pre_activation: Vec<f64>,
    activated: Vec<f64>,
}

pub struct EncoderCache {
    rows: usize,
    layers: Vec<LayerCache>,
    final_norm: Option<LayerNormCache>,
}

impl Encoder {
    pub fn new(config: EncoderConfig, bound: f64, rng: &mut impl Rng) -> Self {
        assert!(config.heads > 0 && config.dim.is_multiple_of(config.heads), "dim must be divisible by heads");
        let layers = (0..config.layers)
            .map(|_| EncoderLayer::new(config.dim, config.ff_dim, bound, rng))
            .collect();
        let final_norm = (config.layers > 0).then(|| FinalNorm {
            gamma: Tensor::filled(&[config.dim], 1.0),
            beta: Tensor::zeros(&[config.dim]),
        });
        Encoder {
            config,
            layers,
            final_norm,
        }
    }

    /// Encodes a `rows x dim` sequence.
    pub fn forward(&self, input: Vec<f64>) -> (Vec<f64>, EncoderCache) {
        let d = self.config.dim;
        let rows = input.len() / d;
        let mut x = input;
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (out, cache) = self.layer_forward(layer, x, rows);
            x = out;
            caches.push(cache);
        }
        let final_cache = match &self.final_norm {
            Some(n) => {
                let (y, c) = ops::layer_norm(&x, d, &n.gamma, &n.beta);
                x = y;
                Some(c)
            }
            None => None,
        };
        (
            x,
            EncoderCache {
                rows,
                layers: caches,
                final_norm: final_cache,
            },
        )
    }

    fn layer_forward(&self, p: &EncoderLayer, x: Vec<f64>, rows: usize) -> (Vec<f64>, LayerCache) {
        let d = self.config.dim;
        let heads = self.config.heads;
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let (h1, ln1) = ops::layer_norm(&x, d, &p.ln1_gamma, &p.ln1_beta);
        let q = ops::linear(&h1, &p.wq, Some(&p.bq));
        let k = ops::linear(&h1, &p.wk, Some(&p.bk));
        let v = ops::linear(&h1, &p.wv, Some(&p.bv));
        let mut probs = vec![0.0; heads * rows * rows];
        let mut attended = vec![0.0; rows * d];
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            for i in 0..rows {
                let pi = &mut probs[(h * rows + i) * rows..(h * rows + i + 1) * rows];
                let qi = &q[i * d + cols.start..i * d + cols.end];
                for (j, pij) in pi.iter_mut().enumerate() {
                    *pij = scale * ops::dot(qi, &k[j * d + cols.start..j * d + cols.end]);
                }
                ops::softmax(pi);
                let out = &mut attended[i * d + cols.start..i * d + cols.end];
                for (j, &pij) in pi.iter().enumerate() {
                    ops::axpy(pij, &v[j * d + cols.start..j * d + cols.end], out);
                }
            }
        }
        let mut x1 = ops::linear(&attended, &p.wo, Some(&p.bo));
        ops::axpy(1.0, &x, &mut x1);

        let (h2, ln2) = ops::layer_norm(&x1, d, &p.ln2_gamma, &p.ln2_beta);
        let pre_activation = ops::linear(&h2, &p.w1, Some(&p.b1));
        let activated: Vec<f64> = pre_activation.iter().map(|&z| ops::gelu(z)).collect();
        let mut x2 = ops::linear(&activated, &p.w2, Some(&p.b2));
        ops::axpy(1.0, &x1, &mut x2);
        (
            x2,
            LayerCache {
                ln1,
                h1,
                q,
                k,
                v,
                probs,
                attended,
                ln2,
                h2,
                pre_activation,
                activated,
            },
        )
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient
    /// with respect to the input sequence.
    pub fn backward(&self, cache: &EncoderCache, d_output: Vec<f64>, grads: &mut Encoder) -> Vec<f64> {
        let d = self.config.dim;
        let mut dx = d_output;
        if let (Some(n), Some(c), Some(gn)) = (&self.final_norm, &cache.final_norm, grads.final_norm.as_mut()) {
            dx = ops::layer_norm_backward(&dx, d, c, &n.gamma, &mut gn.gamma, &mut gn.beta);
        }
        for ((layer, c), g) in self.layers.iter().zip(&cache.layers).zip(grads.layers.iter_mut()).rev() {
            dx = self.layer_backward(layer, c, cache.rows, dx, g);
        }
        dx
    }

    fn layer_backward(&self, p: &EncoderLayer, c: &LayerCache, rows: usize, dx2: Vec<f64>, g: &mut EncoderLayer) -> Vec<f64> {
        let d = self.config.dim;
        let heads = self.config.heads;
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();

        // Feed-forward branch.
        let mut d_act = ops::linear_backward(&c.activated, &p.w2, &dx2, &mut g.w2, Some(&mut g.b2));
        for (da, &z) in d_act.iter_mut().zip(&c.pre_activation) {
            *da *= ops::gelu_grad(z);
        }
        let dh2 = ops::linear_backward(&c.h2, &p.w1, &d_act, &mut g.w1, Some(&mut g.b1));
        let mut dx1 = ops::layer_norm_backward(&dh2, d, &c.ln2, &p.ln2_gamma, &mut g.ln2_gamma, &mut g.ln2_beta);
        ops::axpy(1.0, &dx2, &mut dx1);

        // Attention branch.
        let d_att = ops::linear_backward(&c.attended, &p.wo, &dx1, &mut g.wo, Some(&mut g.bo));
        let mut dq = vec![0.0; rows * d];
        let mut dk = vec![0.0; rows * d];
        let mut dv = vec![0.0; rows * d];
        let mut dp = vec![0.0; rows];
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            for i in 0..rows {
                let pi = &c.probs[(h * rows + i) * rows..(h * rows + i + 1) * rows];
                let dai = &d_att[i * d + cols.start..i * d + cols.end];
                for j in 0..rows {
                    dp[j] = ops::dot(dai, &c.v[j * d + cols.start..j * d + cols.end]);
                    ops::axpy(pi[j], dai, &mut dv[j * d + cols.start..j * d + cols.end]);
                }
                let weighted = ops::dot(&dp, pi);
                for j in 0..rows {
                    let ds = pi[j] * (dp[j] - weighted) * scale;
                    if ds != 0.0 {
                        ops::axpy(ds, &c.k[j * d + cols.start..j * d + cols.end], &mut dq[i * d + cols.start..i * d + cols.end]);
                        ops::axpy(ds, &c.q[i * d + cols.start..i * d + cols.end], &mut dk[j * d + cols.start..j * d + cols.end]);
                    }
                }
            }
        }
        let mut dh1 = ops::linear_backward(&c.h1, &p.wq, &dq, &mut g.wq, Some(&mut g.bq));
        ops::axpy(1.0, &ops::linear_backward(&c.h1, &p.wk, &dk, &mut g.wk, Some(&mut g.bk)), &mut dh1);
        ops::axpy(1.0, &ops::linear_backward(&c.h1, &p.wv, &dv, &mut g.wv, Some(&mut g.bv)), &mut dh1);
        let mut dx0 = ops::layer_norm_backward(&dh1, d, &c.ln1, &p.ln1_gamma, &mut g.ln1_gamma, &mut g.ln1_beta);
        ops::axpy(1.0, &dx1, &mut dx0);
        dx0
    }
}

impl Parameters for Encoder {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.extend(prefixed(&format!("layer{i}"), l.tensors()));
        }
        if let Some(n) = &self.final_norm {
            out.push(("final.gamma".into(), &n.gamma));
            out.push(("final.beta".into(), &n.beta));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.extend(l.tensors_mut());
        }
        if let Some(n) = &mut self.final_norm {
            out.push(&mut n.gamma);
            out.push(&mut n.beta);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy(layers: usize) -> Encoder {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        Encoder::new(
            EncoderConfig {
                dim: 4,
                layers,
                heads: 2,
                ff_dim: 6,
            },
            0.5,
            &mut rng,
        )
    }

    #[test]
    fn zero_layers_is_identity() {
        let enc = toy(0);
        let x = vec![0.3, -1.0, 2.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(enc.forward(x.clone()).0, x);
        assert_eq!(enc.parameter_count(), 0);
    }

    /// Loss = sum(out * weights); compares every gradient entry with central
    /// differences.
    #[test]
    fn backward_matches_finite_differences() {
        let enc = toy(2);
        let x: Vec<f64> = (0..12).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.4).collect();
        let weights: Vec<f64> = (0..12).map(|i| ((i * 3 % 7) as f64 - 3.0) * 0.25).collect();
        let loss = |e: &Encoder, x: &[f64]| -> f64 { ops::dot(&e.forward(x.to_vec()).0, &weights) };

        let (_, cache) = enc.forward(x.clone());
        let mut grads = enc.zeros_like();
        let dx = enc.backward(&cache, weights.clone(), &mut grads);

        let h = 1e-5;
        for i in 0..x.len() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let numeric = (loss(&enc, &xp) - loss(&enc, &xm)) / (2.0 * h);
            assert!((numeric - dx[i]).abs() < 1e-6, "input {i}: {numeric} vs {}", dx[i]);
        }
        let analytic: Vec<f64> = grads.tensors().iter().flat_map(|(_, t)| t.data.clone()).collect();
        let mut flat = 0;
        for t in 0..enc.tensors().len() {
            for j in 0..enc.tensors()[t].1.len() {
                let mut plus = enc.clone();
                plus.tensors_mut()[t].data[j] += h;
                let mut minus = enc.clone();
                minus.tensors_mut()[t].data[j] -= h;
                let numeric = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
                let a = analytic[flat];
                assert!((numeric - a).abs() < 1e-6, "{} [{j}]: {numeric} vs {a}", enc.tensors()[t].0);
                flat += 1;
            }
        }
    }
}
