use serde::{Deserialize, Serialize};

/// Lagrange multiplier of the handover-cost constraint. The reward's cost
/// scale is `K′ = λ K0`, so with λ = 1 it is `k0` itself.
pub const LAMBDA: f64 = 1.0;
/// Ceiling W on a single handover cost. The cost never exceeds `k0`, so any
/// W ≥ k0 leaves the constraint inactive at the defaults.
pub const COST_CEILING_W: f64 = 1.0;
/// `W′ = λ W`. It only shifts every return by a constant, so the reward
/// leaves it out.
pub const W_PRIME: f64 = LAMBDA * COST_CEILING_W;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub beta: f64,
    pub k0: f64,
    pub delta: f64,
    /// Throughputs are clamped to this floor before taking logs.
    pub floor_bps: f64,
    pub report_period_ms: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self { beta: 1.0, k0: 1.0, delta: 0.1, floor_bps: 1e3, report_period_ms: 100.0 }
    }
}

/// Log-throughput gain minus the handover cost `K0 e^{−δ Δt}` (Δt in report
/// windows since the previous handover), charged only when a handover happened.
pub fn compute_reward(
    r_prev_bps: f64,
    r_next_bps: f64,
    ho_executed: bool,
    t_minus_tprime_ms: f64,
    p: &RewardParams,
) -> f64 {
    let gain = p.beta * (r_next_bps.max(p.floor_bps).ln() - r_prev_bps.max(p.floor_bps).ln());
    if !ho_executed {
        return gain;
    }
    let windows = t_minus_tprime_ms / p.report_period_ms;
    gain - p.k0 * (-p.delta * windows).exp()
}
