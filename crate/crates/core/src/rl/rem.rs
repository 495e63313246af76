use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::RlError;

/// Mixture weights over Q-heads; a point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct RemWeights {
    pub alpha: Vec<f64>,
}

impl RemWeights {
    pub fn uniform(heads: usize) -> Self {
        Self { alpha: vec![1.0 / heads as f64; heads] }
    }

    /// Normalized independent uniform draws.
    pub fn sample(heads: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut alpha: Vec<f64> = (0..heads).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = alpha.iter().sum();
        if s > 0.0 {
            alpha.iter_mut().for_each(|a| *a /= s);
        } else {
            alpha.iter_mut().for_each(|a| *a = 1.0 / heads as f64);
        }
        Self { alpha }
    }

    pub fn one_hot(heads: usize, k: usize) -> Self {
        let mut alpha = vec![0.0; heads];
        alpha[k] = 1.0;
        Self { alpha }
    }

    pub fn validate(&self) -> Result<(), RlError> {
        let s: f64 = self.alpha.iter().sum();
        if self.alpha.iter().any(|&a| !(a >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return Err(RlError::OffSimplex(s));
        }
        Ok(())
    }
}

/// `Σ_j α_j Q_j(·)` over a head-major Q-matrix.
pub fn rem_combine(q: &[f64], actions: usize, w: &RemWeights) -> Result<Vec<f64>, RlError> {
    w.validate()?;
    if q.len() != w.alpha.len() * actions {
        return Err(RlError::Shape { what: "Q-matrix", expected: w.alpha.len() * actions, got: q.len() });
    }
    let mut out = vec![0.0; actions];
    for (j, &aj) in w.alpha.iter().enumerate() {
        for (o, &x) in out.iter_mut().zip(&q[j * actions..(j + 1) * actions]) {
            *o += aj * x;
        }
    }
    Ok(out)
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
