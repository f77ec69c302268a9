//! Single-block causal transformer with a hand-written backward pass.
//!
//! ```text
//! x_t = E[id_t] + P[t]
//! c_t = sum_{u<=t} softmax_u(q_t . k_u / sqrt(d)) v_u     (q, k, v = Wq x, Wk x, Wv x)
//! h_t = x_t + Wo c_t
//! f_t = h_t + W2 tanh(W1 h_t + b1) + b2
//! logits_t = Wout f_t + b_out                              (Wout = E when tied)
//! ```
//!
//! All parameters live in one flat `Vec<f64>`; [`Layout`] records the
//! offsets. Matrices are row-major with `y = W x` meaning `y_i = sum_j W_ij x_j`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::ToyLmError;
use crate::attention::{weighted_next_token_loss, TokenWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub dim: usize,
    pub window: usize,
    pub ffn_dim: usize,
    pub tied_output: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ToyLmError> {
        if self.vocab_size < 5 || self.dim == 0 || self.window < 2 || self.ffn_dim == 0 {
            return Err(ToyLmError::Config(format!("invalid model shape {self:?}")));
        }
        Ok(())
    }
}

/// Offsets of each parameter block in the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub tok: usize,
    pub pos: usize,
    pub wq: usize,
    pub wk: usize,
    pub wv: usize,
    pub wo: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub out: usize,
    pub out_bias: usize,
    pub len: usize,
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let (v, d, w, h) = (cfg.vocab_size, cfg.dim, cfg.window, cfg.ffn_dim);
        let tok = 0;
        let pos = tok + v * d;
        let wq = pos + w * d;
        let wk = wq + d * d;
        let wv = wk + d * d;
        let wo = wv + d * d;
        let w1 = wo + d * d;
        let b1 = w1 + h * d;
        let w2 = b1 + h;
        let b2 = w2 + d * h;
        let (out, out_bias) = if cfg.tied_output {
            (tok, b2 + d)
        } else {
            (b2 + d, b2 + d + v * d)
        };
        Layout {
            tok,
            pos,
            wq,
            wk,
            wv,
            wo,
            w1,
            b1,
            w2,
            b2,
            out,
            out_bias,
            len: out_bias + v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyLmModel {
    pub config: ModelConfig,
    pub params: Vec<f64>,
}

/// Intermediate activations kept for the backward pass.
struct Cache {
    ids: Vec<u32>,
    x: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    att: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
    g: Vec<f64>,
    f: Vec<f64>,
    logp: Vec<f64>,
}

#[inline]
fn matvec(w: &[f64], x: &[f64], rows: usize, cols: usize, y: &mut [f64]) {
    for i in 0..rows {
        let row = &w[i * cols..(i + 1) * cols];
        y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// y += W^T dy
#[inline]
fn matvec_t_acc(w: &[f64], dy: &[f64], rows: usize, cols: usize, y: &mut [f64]) {
    for i in 0..rows {
        let g = dy[i];
        if g == 0.0 {
            continue;
        }
        let row = &w[i * cols..(i + 1) * cols];
        for (yj, wj) in y.iter_mut().zip(row) {
            *yj += g * wj;
        }
    }
}

/// dW += dy x^T
#[inline]
fn outer_acc(dw: &mut [f64], dy: &[f64], x: &[f64], cols: usize) {
    for (i, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let row = &mut dw[i * cols..(i + 1) * cols];
        for (r, xj) in row.iter_mut().zip(x) {
            *r += g * xj;
        }
    }
}

impl ToyLmModel {
    /// Random initialisation: embeddings N(0, 0.1^2), matrices N(0, 1/fan_in),
    /// biases zero.
    pub fn init<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self, ToyLmError> {
        config.validate()?;
        let l = Layout::new(&config);
        let mut params = vec![0.0; l.len];
        let (d, h) = (config.dim, config.ffn_dim);
        let mut fill = |start: usize, len: usize, std: f64| {
            let normal = Normal::new(0.0, std).expect("valid std");
            for p in &mut params[start..start + len] {
                *p = normal.sample(rng);
            }
        };
        let v = config.vocab_size;
        fill(l.tok, v * d, 0.1);
        fill(l.pos, config.window * d, 0.1);
        let sd = 1.0 / (d as f64).sqrt();
        for off in [l.wq, l.wk, l.wv, l.wo] {
            fill(off, d * d, sd);
        }
        fill(l.w1, h * d, sd);
        fill(l.w2, d * h, 1.0 / (h as f64).sqrt());
        if !config.tied_output {
            fill(l.out, v * d, sd);
        }
        Ok(ToyLmModel { config, params })
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.config)
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn check_context(&self, ids: &[u32]) -> Result<(), ToyLmError> {
        if ids.len() > self.config.window {
            return Err(ToyLmError::ContextOverflow {
                len: ids.len(),
                window: self.config.window,
            });
        }
        if let Some(&bad) = ids.iter().find(|&&i| i as usize >= self.config.vocab_size) {
            return Err(ToyLmError::Config(format!("token id {bad} outside vocabulary")));
        }
        Ok(())
    }

    fn run(&self, ids: &[u32]) -> Cache {
        let ModelConfig {
            vocab_size: nv,
            dim: d,
            ffn_dim: nh,
            ..
        } = self.config;
        let l = self.layout();
        let p = &self.params;
        let t_len = ids.len();
        let mut c = Cache {
            ids: ids.to_vec(),
            x: vec![0.0; t_len * d],
            q: vec![0.0; t_len * d],
            k: vec![0.0; t_len * d],
            v: vec![0.0; t_len * d],
            att: vec![0.0; t_len * t_len],
            c: vec![0.0; t_len * d],
            h: vec![0.0; t_len * d],
            g: vec![0.0; t_len * nh],
            f: vec![0.0; t_len * d],
            logp: vec![0.0; t_len * nv],
        };
        let scale = 1.0 / (d as f64).sqrt();
        for (t, &id) in ids.iter().enumerate() {
            let e = &p[l.tok + id as usize * d..][..d];
            let pe = &p[l.pos + t * d..][..d];
            let x = &mut c.x[t * d..(t + 1) * d];
            for j in 0..d {
                x[j] = e[j] + pe[j];
            }
            let x = &c.x[t * d..(t + 1) * d];
            matvec(&p[l.wq..], x, d, d, &mut c.q[t * d..(t + 1) * d]);
            matvec(&p[l.wk..], x, d, d, &mut c.k[t * d..(t + 1) * d]);
            matvec(&p[l.wv..], x, d, d, &mut c.v[t * d..(t + 1) * d]);
        }
        let mut tmp = vec![0.0; d.max(nh)];
        for t in 0..t_len {
            let q = &c.q[t * d..(t + 1) * d];
            let row = &mut c.att[t * t_len..t * t_len + t + 1];
            for (u, s) in row.iter_mut().enumerate() {
                let k = &c.k[u * d..(u + 1) * d];
                *s = q.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() * scale;
            }
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for s in row.iter_mut() {
                *s = (*s - m).exp();
                z += *s;
            }
            row.iter_mut().for_each(|s| *s /= z);
            let ct = &mut c.c[t * d..(t + 1) * d];
            for u in 0..=t {
                let a = c.att[t * t_len + u];
                for (cj, vj) in ct.iter_mut().zip(&c.v[u * d..(u + 1) * d]) {
                    *cj += a * vj;
                }
            }
            // h = x + Wo c
            matvec(&p[l.wo..], &c.c[t * d..(t + 1) * d], d, d, &mut tmp[..d]);
            for j in 0..d {
                c.h[t * d + j] = c.x[t * d + j] + tmp[j];
            }
            // g = tanh(W1 h + b1)
            matvec(&p[l.w1..], &c.h[t * d..(t + 1) * d], nh, d, &mut tmp[..nh]);
            for i in 0..nh {
                c.g[t * nh + i] = (tmp[i] + p[l.b1 + i]).tanh();
            }
            // f = h + W2 g + b2
            matvec(&p[l.w2..], &c.g[t * nh..(t + 1) * nh], d, nh, &mut tmp[..d]);
            for j in 0..d {
                c.f[t * d + j] = c.h[t * d + j] + tmp[j] + p[l.b2 + j];
            }
            let logits = &mut c.logp[t * nv..(t + 1) * nv];
            matvec(&p[l.out..], &c.f[t * d..(t + 1) * d], nv, d, logits);
            for (lg, b) in logits.iter_mut().zip(&p[l.out_bias..l.out_bias + nv]) {
                *lg += b;
            }
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
            logits.iter_mut().for_each(|z| *z -= lse);
        }
        c
    }

    /// Next-token log-probabilities, one row of `vocab_size` per position.
    /// Row `j` depends only on `context[..=j]`.
    pub fn forward(&self, context: &[u32]) -> Result<Vec<Vec<f64>>, ToyLmError> {
        self.check_context(context)?;
        let nv = self.config.vocab_size;
        let cache = self.run(context);
        Ok(cache.logp.chunks(nv).map(<[f64]>::to_vec).collect())
    }

    /// Teacher-forced loss over `targets` (position, next-token id) reduced
    /// with the weighted mean, and its gradient accumulated into `grad` when
    /// given. Also returns the per-target negative log-likelihoods.
    pub(crate) fn weighted_nll(
        &self,
        ids: &[u32],
        targets: &[(usize, u32)],
        weights: &TokenWeights,
        grad: Option<&mut [f64]>,
    ) -> Result<(f64, Vec<f64>), ToyLmError> {
        self.check_context(ids)?;
        let nv = self.config.vocab_size;
        let cache = self.run(ids);
        let nll: Vec<f64> = targets.iter().map(|&(t, y)| -cache.logp[t * nv + y as usize]).collect();
        let loss = weighted_next_token_loss(&nll, weights)?;
        if let Some(grad) = grad {
            let total: f64 = weights.weights.iter().sum();
            let mut dlogits = vec![0.0; ids.len() * nv];
            for (&(t, y), w) in targets.iter().zip(&weights.weights) {
                let s = w / total;
                let row = &mut dlogits[t * nv..(t + 1) * nv];
                for (r, lp) in row.iter_mut().zip(&cache.logp[t * nv..(t + 1) * nv]) {
                    *r += s * lp.exp();
                }
                row[y as usize] -= s;
            }
            self.backward(&cache, &dlogits, grad);
        }
        Ok((loss, nll))
    }

    fn backward(&self, c: &Cache, dlogits: &[f64], grad: &mut [f64]) {
        let ModelConfig {
            vocab_size: nv,
            dim: d,
            ffn_dim: nh,
            ..
        } = self.config;
        let l = self.layout();
        let p = &self.params;
        let t_len = c.ids.len();
        let scale = 1.0 / (d as f64).sqrt();

        let mut dx = vec![0.0; t_len * d];
        let mut dq = vec![0.0; t_len * d];
        let mut dk = vec![0.0; t_len * d];
        let mut dv = vec![0.0; t_len * d];
        let mut df = vec![0.0; d];
        let mut dg = vec![0.0; nh];
        let mut dh = vec![0.0; d];
        let mut dc = vec![0.0; d];
        let mut da = vec![0.0; t_len];

        for t in 0..t_len {
            let dl = &dlogits[t * nv..(t + 1) * nv];
            if dl.iter().all(|&z| z == 0.0) {
                continue;
            }
            let f = &c.f[t * d..(t + 1) * d];
            outer_acc(&mut grad[l.out..l.out + nv * d], dl, f, d);
            for (gb, g) in grad[l.out_bias..l.out_bias + nv].iter_mut().zip(dl) {
                *gb += g;
            }
            df.iter_mut().for_each(|z| *z = 0.0);
            matvec_t_acc(&p[l.out..], dl, nv, d, &mut df);

            // f = h + W2 g + b2
            let g_t = &c.g[t * nh..(t + 1) * nh];
            outer_acc(&mut grad[l.w2..l.w2 + d * nh], &df, g_t, nh);
            for (gb, z) in grad[l.b2..l.b2 + d].iter_mut().zip(&df) {
                *gb += z;
            }
            dg.iter_mut().for_each(|z| *z = 0.0);
            matvec_t_acc(&p[l.w2..], &df, d, nh, &mut dg);
            for i in 0..nh {
                dg[i] *= 1.0 - g_t[i] * g_t[i];
            }
            let h_t = &c.h[t * d..(t + 1) * d];
            outer_acc(&mut grad[l.w1..l.w1 + nh * d], &dg, h_t, d);
            for (gb, z) in grad[l.b1..l.b1 + nh].iter_mut().zip(&dg) {
                *gb += z;
            }
            dh.copy_from_slice(&df);
            matvec_t_acc(&p[l.w1..], &dg, nh, d, &mut dh);

            // h = x + Wo c
            for j in 0..d {
                dx[t * d + j] += dh[j];
            }
            outer_acc(&mut grad[l.wo..l.wo + d * d], &dh, &c.c[t * d..(t + 1) * d], d);
            dc.iter_mut().for_each(|z| *z = 0.0);
            matvec_t_acc(&p[l.wo..], &dh, d, d, &mut dc);

            // c_t = sum_u a_tu v_u
            let att = &c.att[t * t_len..t * t_len + t + 1];
            let mut dot = 0.0;
            for u in 0..=t {
                let vu = &c.v[u * d..(u + 1) * d];
                da[u] = dc.iter().zip(vu).map(|(a, b)| a * b).sum();
                dot += att[u] * da[u];
                for j in 0..d {
                    dv[u * d + j] += att[u] * dc[j];
                }
            }
            // softmax, then s_tu = q_t . k_u * scale
            for u in 0..=t {
                let ds = att[u] * (da[u] - dot) * scale;
                if ds == 0.0 {
                    continue;
                }
                for j in 0..d {
                    dq[t * d + j] += ds * c.k[u * d + j];
                    dk[u * d + j] += ds * c.q[t * d + j];
                }
            }
        }

        for t in 0..t_len {
            let x = &c.x[t * d..(t + 1) * d];
            let dxt = &mut dx[t * d..(t + 1) * d];
            for (off, dy) in [(l.wq, &dq), (l.wk, &dk), (l.wv, &dv)] {
                let dyt = &dy[t * d..(t + 1) * d];
                outer_acc(&mut grad[off..off + d * d], dyt, x, d);
                matvec_t_acc(&p[off..], dyt, d, d, dxt);
            }
            let id = c.ids[t] as usize;
            for j in 0..d {
                grad[l.tok + id * d + j] += dxt[j];
                grad[l.pos + t * d + j] += dxt[j];
            }
        }
    }
}
