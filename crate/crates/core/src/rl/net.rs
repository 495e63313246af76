//! Multi-head Q-network: 1-D convolution over per-cell feature blocks, two
//! ReLU dense layers and a linear head producing `heads × actions` values.
//!
//! All parameters live in one flat vector. Dense and conv weights are stored
//! input-major (`w[in * n_out + out]`).

use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub n_cells: usize,
    /// Features per cell; also the conv kernel size and stride.
    pub feats_per_cell: usize,
    pub filters: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub heads: usize,
    pub actions: usize,
}

impl Default for Arch {
    fn default() -> Self {
        Self { n_cells: 7, feats_per_cell: 8, filters: 32, hidden1: 128, hidden2: 32, heads: 200, actions: 7 }
    }
}

impl Arch {
    pub fn input_dim(&self) -> usize {
        self.n_cells * self.feats_per_cell + 1
    }

    pub fn conv_out(&self) -> usize {
        self.n_cells * self.filters
    }

    /// Width after concatenating the extra input to the conv outputs.
    pub fn flat_dim(&self) -> usize {
        self.conv_out() + 1
    }

    pub fn out_dim(&self) -> usize {
        self.heads * self.actions
    }

    pub fn layout(&self) -> Layout {
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let (k, f, d, h1, h2, o) =
            (self.feats_per_cell, self.filters, self.flat_dim(), self.hidden1, self.hidden2, self.out_dim());
        Layout {
            conv_w: take(k * f),
            conv_b: take(f),
            w1: take(d * h1),
            b1: take(h1),
            w2: take(h1 * h2),
            b2: take(h2),
            w3: take(h2 * o),
            b3: take(o),
            total: at,
        }
    }

    pub fn n_params(&self) -> usize {
        self.layout().total
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub conv_w: Range<usize>,
    pub conv_b: Range<usize>,
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
    pub w3: Range<usize>,
    pub b3: Range<usize>,
    pub total: usize,
}

/// Activations of one forward pass through the shared trunk.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub x: Vec<f64>,
    /// Conv outputs (post-ReLU, position-major) followed by the extra input.
    pub flat: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
}

/// Dense layer `out = b + Wᵀ x` with input-major `w`.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n = out.len();
    out.copy_from_slice(b);
    for (k, &xk) in x.iter().enumerate() {
        if xk == 0.0 {
            continue;
        }
        let row = &w[k * n..(k + 1) * n];
        for (o, &wk) in out.iter_mut().zip(row) {
            *o += wk * xk;
        }
    }
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// `g_in[k] = Σ_j w[k*n + j] g[j]`.
fn affine_input_grad(w: &[f64], g: &[f64], g_in: &mut [f64]) {
    let n = g.len();
    for (k, gi) in g_in.iter_mut().enumerate() {
        let row = &w[k * n..(k + 1) * n];
        let mut acc = [0.0; 4];
        let mut chunks = row.chunks_exact(4).zip(g.chunks_exact(4));
        for (r, q) in &mut chunks {
            for i in 0..4 {
                acc[i] += r[i] * q[i];
            }
        }
        let tail = n - n % 4;
        let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for j in tail..n {
            s += row[j] * g[j];
        }
        *gi = s;
    }
}

/// `gw[k*n + j] += x[k] g[j]`, `gb += g`.
fn affine_param_grad(x: &[f64], g: &[f64], gw: &mut [f64], gb: &mut [f64]) {
    let n = g.len();
    for (b, &gj) in gb.iter_mut().zip(g) {
        *b += gj;
    }
    for (k, &xk) in x.iter().enumerate() {
        if xk == 0.0 {
            continue;
        }
        for (w, &gj) in gw[k * n..(k + 1) * n].iter_mut().zip(g) {
            *w += xk * gj;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNet {
    pub arch: Arch,
    pub params: Vec<f64>,
}

/// Head weights collapsed over a fixed mixture of heads: `actions` outputs.
#[derive(Debug, Clone)]
pub struct MixedHead {
    pub actions: usize,
    /// Input-major, `hidden2 × actions`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl MixedHead {
    pub fn q(&self, h2: &[f64], out: &mut [f64]) {
        affine(&self.w, &self.b, h2, out);
    }
}

impl QNet {
    pub fn zeros(arch: Arch) -> Self {
        Self { arch, params: vec![0.0; arch.n_params()] }
    }

    /// Glorot-uniform weights and zero biases.
    pub fn init(arch: Arch, rng: &mut ChaCha8Rng) -> Self {
        let mut net = Self::zeros(arch);
        let l = arch.layout();
        let fill = |p: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in p {
                *w = rng.gen_range(-a..a);
            }
        };
        fill(&mut net.params[l.conv_w.clone()], arch.feats_per_cell, arch.filters, rng);
        fill(&mut net.params[l.w1.clone()], arch.flat_dim(), arch.hidden1, rng);
        fill(&mut net.params[l.w2.clone()], arch.hidden1, arch.hidden2, rng);
        fill(&mut net.params[l.w3.clone()], arch.hidden2, arch.out_dim(), rng);
        net
    }

    pub fn from_params(arch: Arch, params: Vec<f64>) -> Result<Self, RlError> {
        if params.len() != arch.n_params() {
            return Err(RlError::Shape { what: "parameter vector", expected: arch.n_params(), got: params.len() });
        }
        Ok(Self { arch, params })
    }

    fn check_input(&self, x: &[f64]) -> Result<(), RlError> {
        if x.len() != self.arch.input_dim() {
            return Err(RlError::Shape { what: "input", expected: self.arch.input_dim(), got: x.len() });
        }
        Ok(())
    }

    /// Shared layers up to the second hidden layer.
    pub fn trunk(&self, x: &[f64], tr: &mut Trace) {
        let a = &self.arch;
        let l = a.layout();
        let p = &self.params;
        let (k, f) = (a.feats_per_cell, a.filters);
        tr.x.clear();
        tr.x.extend_from_slice(x);
        tr.flat.resize(a.flat_dim(), 0.0);
        let cw = &p[l.conv_w];
        let cb = &p[l.conv_b];
        for pos in 0..a.n_cells {
            let out = &mut tr.flat[pos * f..(pos + 1) * f];
            affine(cw, cb, &x[pos * k..(pos + 1) * k], out);
            relu(out);
        }
        tr.flat[a.conv_out()] = x[a.input_dim() - 1];
        tr.h1.resize(a.hidden1, 0.0);
        affine(&p[l.w1], &p[l.b1], &tr.flat, &mut tr.h1);
        relu(&mut tr.h1);
        tr.h2.resize(a.hidden2, 0.0);
        affine(&p[l.w2], &p[l.b2], &tr.h1, &mut tr.h2);
        relu(&mut tr.h2);
    }

    /// Full head output, head-major: index `j * actions + a`.
    pub fn head(&self, h2: &[f64], out: &mut [f64]) {
        let l = self.arch.layout();
        affine(&self.params[l.w3], &self.params[l.b3], h2, out);
    }

    /// Q-matrix (`heads × actions`, head-major) for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, RlError> {
        self.check_input(x)?;
        let mut tr = Trace::default();
        self.trunk(x, &mut tr);
        let mut q = vec![0.0; self.arch.out_dim()];
        self.head(&tr.h2, &mut q);
        Ok(q)
    }

    /// Collapses the head over `alpha`; `mixed.q(h2)` then equals
    /// `rem_combine(forward(x), alpha)`.
    pub fn mixed_head(&self, alpha: &[f64]) -> MixedHead {
        let a = &self.arch;
        let l = a.layout();
        let (na, o) = (a.actions, a.out_dim());
        let w3 = &self.params[l.w3];
        let b3 = &self.params[l.b3];
        let mut w = vec![0.0; a.hidden2 * na];
        let mut b = vec![0.0; na];
        for (j, &aj) in alpha.iter().enumerate() {
            for (bb, &x) in b.iter_mut().zip(&b3[j * na..(j + 1) * na]) {
                *bb += aj * x;
            }
        }
        for k in 0..a.hidden2 {
            let dst = &mut w[k * na..(k + 1) * na];
            let row = &w3[k * o..(k + 1) * o];
            for (j, &aj) in alpha.iter().enumerate() {
                for (d, &x) in dst.iter_mut().zip(&row[j * na..(j + 1) * na]) {
                    *d += aj * x;
                }
            }
        }
        MixedHead { actions: na, w, b }
    }

    /// Backpropagates `g_h2` (gradient w.r.t. the second hidden layer output)
    /// through the trunk, accumulating into `grad`.
    pub fn backward_trunk(&self, tr: &Trace, g_h2: &[f64], grad: &mut [f64]) {
        let a = &self.arch;
        let l = a.layout();
        let p = &self.params;

        let g2: Vec<f64> = g_h2.iter().zip(&tr.h2).map(|(&g, &h)| if h > 0.0 { g } else { 0.0 }).collect();
        {
            let (gw, gb) = split2(grad, &l.w2, &l.b2);
            affine_param_grad(&tr.h1, &g2, gw, gb);
        }
        let mut g1 = vec![0.0; a.hidden1];
        affine_input_grad(&p[l.w2.clone()], &g2, &mut g1);
        for (g, &h) in g1.iter_mut().zip(&tr.h1) {
            if h <= 0.0 {
                *g = 0.0;
            }
        }
        {
            let (gw, gb) = split2(grad, &l.w1, &l.b1);
            affine_param_grad(&tr.flat, &g1, gw, gb);
        }
        // The extra input has no upstream parameters.
        let conv_out = a.conv_out();
        let w1 = &p[l.w1.clone()];
        let mut gc = vec![0.0; conv_out];
        affine_input_grad(&w1[..conv_out * a.hidden1], &g1, &mut gc);
        for (g, &h) in gc.iter_mut().zip(&tr.flat[..conv_out]) {
            if h <= 0.0 {
                *g = 0.0;
            }
        }
        let (k, f) = (a.feats_per_cell, a.filters);
        let (gw, gb) = split2(grad, &l.conv_w, &l.conv_b);
        for pos in 0..a.n_cells {
            affine_param_grad(&tr.x[pos * k..(pos + 1) * k], &gc[pos * f..(pos + 1) * f], gw, gb);
        }
    }

    /// Backpropagates a full head-output gradient into `grad`, returning the
    /// gradient w.r.t. `h2`.
    pub fn backward_head(&self, h2: &[f64], g_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let l = self.arch.layout();
        {
            let (gw, gb) = split2(grad, &l.w3, &l.b3);
            affine_param_grad(h2, g_out, gw, gb);
        }
        let mut g_h2 = vec![0.0; self.arch.hidden2];
        affine_input_grad(&self.params[l.w3], g_out, &mut g_h2);
        g_h2
    }

    /// Spreads the gradient of a mixed head back onto the per-head weights.
    pub fn backward_mixed(&self, alpha: &[f64], g_w: &[f64], g_b: &[f64], grad: &mut [f64]) {
        let a = &self.arch;
        let l = a.layout();
        let (na, o) = (a.actions, a.out_dim());
        let (gw3, gb3) = split2(grad, &l.w3, &l.b3);
        for (j, &aj) in alpha.iter().enumerate() {
            for (d, &g) in gb3[j * na..(j + 1) * na].iter_mut().zip(g_b) {
                *d += aj * g;
            }
        }
        for k in 0..a.hidden2 {
            let src = &g_w[k * na..(k + 1) * na];
            let row = &mut gw3[k * o..(k + 1) * o];
            for (j, &aj) in alpha.iter().enumerate() {
                for (d, &g) in row[j * na..(j + 1) * na].iter_mut().zip(src) {
                    *d += aj * g;
                }
            }
        }
    }
}

/// Two disjoint mutable sub-slices of `v`; `a` must precede `b`.
fn split2<'a>(v: &'a mut [f64], a: &Range<usize>, b: &Range<usize>) -> (&'a mut [f64], &'a mut [f64]) {
    let (lo, hi) = v.split_at_mut(b.start);
    (&mut lo[a.clone()], &mut hi[..b.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn default_shapes() {
        let a = Arch::default();
        assert_eq!(a.input_dim(), 57);
        assert_eq!(a.conv_out(), 224);
        assert_eq!(a.flat_dim(), 225);
        assert_eq!(a.out_dim(), 1400);
        let l = a.layout();
        assert_eq!(l.conv_w.len(), 256);
        assert_eq!(l.w1.len(), 225 * 128);
        assert_eq!(l.w2.len(), 128 * 32);
        assert_eq!(l.w3.len(), 32 * 1400);
        assert_eq!(l.total, 256 + 32 + 225 * 128 + 128 + 128 * 32 + 32 + 32 * 1400 + 1400);
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = QNet::zeros(Arch::default());
        let q = net.forward(&[0.7; 57]).unwrap();
        assert_eq!(q.len(), 1400);
        assert!(q.iter().all(|&v| v == 0.0));
        assert!(matches!(net.forward(&[0.0; 56]), Err(RlError::Shape { .. })));
    }

    #[test]
    fn hand_computed_toy() {
        // 3 cells × 2 features, one filter that sums its block.
        let arch = Arch { n_cells: 3, feats_per_cell: 2, filters: 1, hidden1: 1, hidden2: 1, heads: 1, actions: 2 };
        let l = arch.layout();
        let mut net = QNet::zeros(arch);
        let p = &mut net.params;
        p[l.conv_w.clone()].copy_from_slice(&[1.0, 1.0]);
        p[l.conv_b.start] = -1.0;
        // h1 = relu(c0 + 2 c1 + 3 c2 + 10 extra + 0.5)
        p[l.w1.clone()].copy_from_slice(&[1.0, 2.0, 3.0, 10.0]);
        p[l.b1.start] = 0.5;
        p[l.w2.start] = 2.0;
        p[l.w3.clone()].copy_from_slice(&[1.0, -1.0]);
        p[l.b3.clone()].copy_from_slice(&[0.0, 4.0]);
        let x = [1.0, 2.0, 0.0, 0.5, 3.0, -1.0, 0.1];
        // conv: relu(3-1)=2, relu(0.5-1)=0, relu(2-1)=1
        // h1 = 2 + 0 + 3 + 1 + 0.5 = 6.5; h2 = 13
        let q = net.forward(&x).unwrap();
        assert_eq!(q, vec![13.0, -9.0]);
    }

    #[test]
    fn mixed_head_matches_combination() {
        let arch = Arch { n_cells: 2, feats_per_cell: 3, filters: 4, hidden1: 5, hidden2: 6, heads: 3, actions: 4 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = QNet::init(arch, &mut rng);
        for b in &mut net.params[arch.layout().b3] {
            *b = rng.gen_range(-1.0..1.0);
        }
        let x: Vec<f64> = (0..arch.input_dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let alpha = [0.2, 0.5, 0.3];
        let full = net.forward(&x).unwrap();
        let mut tr = Trace::default();
        net.trunk(&x, &mut tr);
        let mut q = vec![0.0; 4];
        net.mixed_head(&alpha).q(&tr.h2, &mut q);
        for a in 0..4 {
            let want: f64 = (0..3).map(|j| alpha[j] * full[j * 4 + a]).sum();
            assert!((q[a] - want).abs() < 1e-12);
        }
    }
}
