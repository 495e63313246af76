use serde::{Deserialize, Serialize};

use super::net::{QNet, Trace};
use super::rem::{argmax, RemWeights};
use super::replay::Transition;
use super::RlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CqlKind {
    /// `max_a Q(s,a) − Q(s,a_data)`.
    Greedy,
    /// `log Σ_a exp Q(s,a) − Q(s,a_data)`.
    LogSumExp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub td: f64,
    pub cql: f64,
    pub cql_kind: CqlKind,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { td: 1.0, cql: 1.0, cql_kind: CqlKind::Greedy }
    }
}

impl LossWeights {
    pub fn td_only() -> Self {
        Self { td: 1.0, cql: 0.0, cql_kind: CqlKind::Greedy }
    }

    pub fn cql_only() -> Self {
        Self { td: 0.0, cql: 1.0, cql_kind: CqlKind::Greedy }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    /// Mean squared TD error.
    pub td: f64,
    /// Unscaled conservative term.
    pub cql: f64,
    /// `weights.cql * cql + weights.td * td`.
    pub total: f64,
    /// Gradient of `total` w.r.t. the online parameters.
    pub grad: Vec<f64>,
}

fn check_batch(net: &QNet, batch: &[&Transition]) -> Result<(), RlError> {
    if batch.is_empty() {
        return Err(RlError::Dataset("empty batch".into()));
    }
    let d = net.arch.input_dim();
    for t in batch {
        if t.s.len() != d || t.s_next.len() != d {
            return Err(RlError::Shape { what: "state", expected: d, got: t.s.len().min(t.s_next.len()) });
        }
        if t.action as usize >= net.arch.actions {
            return Err(RlError::Shape { what: "action", expected: net.arch.actions, got: t.action as usize });
        }
    }
    Ok(())
}

/// Bootstrapped target `r + γ (1 − done) max_a Q̂_target(s', a)`.
pub fn td_target(reward: f64, done: bool, gamma: f64, q_next: &[f64]) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * q_next[argmax(q_next)]
    }
}

/// Weighted TD + conservative loss of a batch under one mixture `alpha`,
/// with gradients w.r.t. `net` only. `target` supplies the bootstrap values.
pub fn objective(
    net: &QNet,
    target: &QNet,
    batch: &[&Transition],
    alpha: &RemWeights,
    gamma: f64,
    weights: LossWeights,
) -> Result<LossOutput, RlError> {
    check_batch(net, batch)?;
    if alpha.alpha.len() != net.arch.heads {
        return Err(RlError::Shape { what: "mixture", expected: net.arch.heads, got: alpha.alpha.len() });
    }
    let arch = net.arch;
    let na = arch.actions;
    let n = batch.len() as f64;
    let online = net.mixed_head(&alpha.alpha);
    let frozen = target.mixed_head(&alpha.alpha);

    let mut grad = vec![0.0; arch.n_params()];
    let mut g_w = vec![0.0; online.w.len()];
    let mut g_b = vec![0.0; na];
    let mut tr = Trace::default();
    let mut q = vec![0.0; na];
    let mut dq = vec![0.0; na];
    let mut g_h2 = vec![0.0; arch.hidden2];
    let (mut td, mut cql) = (0.0, 0.0);

    for t in batch {
        target.trunk(&t.s_next, &mut tr);
        frozen.q(&tr.h2, &mut q);
        let y = td_target(t.reward, t.done, gamma, &q);

        net.trunk(&t.s, &mut tr);
        online.q(&tr.h2, &mut q);
        let a = t.action as usize;
        dq.iter_mut().for_each(|d| *d = 0.0);

        let err = q[a] - y;
        td += err * err;
        dq[a] += weights.td * 2.0 * err / n;

        match weights.cql_kind {
            CqlKind::Greedy => {
                let m = argmax(&q);
                cql += q[m] - q[a];
                dq[m] += weights.cql / n;
                dq[a] -= weights.cql / n;
            }
            CqlKind::LogSumExp => {
                let m = q[argmax(&q)];
                let z: f64 = q.iter().map(|v| (v - m).exp()).sum();
                cql += m + z.ln() - q[a];
                for (d, v) in dq.iter_mut().zip(&q) {
                    *d += weights.cql / n * (v - m).exp() / z;
                }
                dq[a] -= weights.cql / n;
            }
        }

        // Through the mixed head.
        for (b, &d) in g_b.iter_mut().zip(&dq) {
            *b += d;
        }
        for (k, &h) in tr.h2.iter().enumerate() {
            let row = &online.w[k * na..(k + 1) * na];
            g_h2[k] = row.iter().zip(&dq).map(|(w, d)| w * d).sum();
            if h != 0.0 {
                for (g, &d) in g_w[k * na..(k + 1) * na].iter_mut().zip(&dq) {
                    *g += h * d;
                }
            }
        }
        net.backward_trunk(&tr, &g_h2, &mut grad);
    }
    net.backward_mixed(&alpha.alpha, &g_w, &g_b, &mut grad);

    let (td, cql) = (td / n, cql / n);
    Ok(LossOutput { td, cql, total: weights.cql * cql + weights.td * td, grad })
}

/// Mean squared TD error under `alpha`.
pub fn td_loss_rem(
    net: &QNet,
    target: &QNet,
    batch: &[&Transition],
    alpha: &RemWeights,
    gamma: f64,
) -> Result<(f64, Vec<f64>), RlError> {
    let out = objective(net, target, batch, alpha, gamma, LossWeights::td_only())?;
    Ok((out.total, out.grad))
}

/// Conservative term scaled by `cql_alpha`.
pub fn cql_regularizer(
    net: &QNet,
    batch: &[&Transition],
    alpha: &RemWeights,
    cql_alpha: f64,
    kind: CqlKind,
) -> Result<(f64, Vec<f64>), RlError> {
    let w = LossWeights { td: 0.0, cql: cql_alpha, cql_kind: kind };
    let out = objective(net, net, batch, alpha, 0.0, w)?;
    Ok((out.total, out.grad))
}

/// Single-head DQN loss `mean (Q(s,a) − r − γ max Q_target(s'))²` computed
/// through the unmixed head.
pub fn dqn_loss(net: &QNet, target: &QNet, batch: &[&Transition], gamma: f64) -> Result<(f64, Vec<f64>), RlError> {
    check_batch(net, batch)?;
    if net.arch.heads != 1 {
        return Err(RlError::Shape { what: "DQN heads", expected: 1, got: net.arch.heads });
    }
    let na = net.arch.actions;
    let n = batch.len() as f64;
    let mut grad = vec![0.0; net.arch.n_params()];
    let mut tr = Trace::default();
    let mut q = vec![0.0; na];
    let mut loss = 0.0;
    for t in batch {
        target.trunk(&t.s_next, &mut tr);
        target.head(&tr.h2, &mut q);
        let y = td_target(t.reward, t.done, gamma, &q);
        net.trunk(&t.s, &mut tr);
        net.head(&tr.h2, &mut q);
        let a = t.action as usize;
        let err = q[a] - y;
        loss += err * err;
        let mut dq = vec![0.0; na];
        dq[a] = 2.0 * err / n;
        let g_h2 = net.backward_head(&tr.h2, &dq, &mut grad);
        net.backward_trunk(&tr, &g_h2, &mut grad);
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::net::Arch;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> Arch {
        Arch { n_cells: 2, feats_per_cell: 2, filters: 2, hidden1: 3, hidden2: 3, heads: 2, actions: 2 }
    }

    fn tr(s: Vec<f64>, a: u8, r: f64, s2: Vec<f64>, done: bool) -> Transition {
        Transition { ue_id: 0, s, action: a, reward: r, s_next: s2, done }
    }

    #[test]
    fn terminal_target_is_reward() {
        assert_eq!(td_target(1.5, true, 0.99, &[100.0, 3.0]), 1.5);
        assert!((td_target(1.0, false, 0.99, &[2.0, -1.0]) - 2.98).abs() < 1e-12);
    }

    #[test]
    fn greedy_data_gives_zero_cql() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = QNet::init(toy(), &mut rng);
        let alpha = RemWeights::sample(2, &mut rng);
        let mixed = net.mixed_head(&alpha.alpha);
        let mut batch = Vec::new();
        for _ in 0..8 {
            let s: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut t = Trace::default();
            net.trunk(&s, &mut t);
            let mut q = vec![0.0; 2];
            mixed.q(&t.h2, &mut q);
            batch.push(tr(s.clone(), argmax(&q) as u8, 0.0, s, false));
        }
        let refs: Vec<&Transition> = batch.iter().collect();
        let (v, _) = cql_regularizer(&net, &refs, &alpha, 1.0, CqlKind::Greedy).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn single_action_cql_is_zero() {
        let arch = Arch { actions: 1, ..toy() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = QNet::init(arch, &mut rng);
        let batch = [tr(vec![0.3; 5], 0, 1.0, vec![0.1; 5], false)];
        let refs: Vec<&Transition> = batch.iter().collect();
        let (v, g) = cql_regularizer(&net, &refs, &RemWeights::uniform(2), 1.0, CqlKind::Greedy).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rem_with_one_head_equals_dqn() {
        let arch = Arch { heads: 1, ..toy() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = QNet::init(arch, &mut rng);
        let target = QNet::init(arch, &mut rng);
        let batch: Vec<Transition> = (0..6)
            .map(|i| {
                let s: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
                let s2: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
                tr(s, (i % 2) as u8, rng.gen_range(-1.0..1.0), s2, i == 5)
            })
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let (a, ga) = td_loss_rem(&net, &target, &refs, &RemWeights::uniform(1), 0.9).unwrap();
        let (b, gb) = dqn_loss(&net, &target, &refs, 0.9).unwrap();
        assert!((a - b).abs() < 1e-12);
        for (x, y) in ga.iter().zip(&gb) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_shapes_rejected() {
        let net = QNet::zeros(toy());
        let batch = [tr(vec![0.0; 4], 0, 0.0, vec![0.0; 5], false)];
        let refs: Vec<&Transition> = batch.iter().collect();
        assert!(objective(&net, &net, &refs, &RemWeights::uniform(2), 0.9, LossWeights::default()).is_err());
        let batch = [tr(vec![0.0; 5], 2, 0.0, vec![0.0; 5], false)];
        let refs: Vec<&Transition> = batch.iter().collect();
        assert!(objective(&net, &net, &refs, &RemWeights::uniform(2), 0.9, LossWeights::default()).is_err());
        assert!(objective(&net, &net, &[], &RemWeights::uniform(2), 0.9, LossWeights::default()).is_err());
    }
}
