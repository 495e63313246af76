use serde::{Deserialize, Serialize};

use super::RlError;
use crate::ric::UeStateRecord;

pub const FEATURES_PER_CELL: usize = 8;
pub const STATE_DIM: usize = 7 * FEATURES_PER_CELL + 1;

/// Fixed feature scaling. Bumping any constant requires a new `version`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormManifest {
    pub version: u32,
    /// SINR is clamped to `[sinr_min_db, sinr_max_db]` then mapped to `[0, 1]`.
    pub sinr_min_db: f64,
    pub sinr_max_db: f64,
    pub prb_util_scale: f64,
    pub active_ues_scale: f64,
    pub tb_count_scale: f64,
    /// Time since the last handover saturates at this value.
    pub t_since_ho_cap_ms: f64,
}

impl Default for NormManifest {
    fn default() -> Self {
        Self {
            version: 1,
            sinr_min_db: -20.0,
            sinr_max_db: 40.0,
            prb_util_scale: 100.0,
            active_ues_scale: 32.0,
            tb_count_scale: 1000.0,
            t_since_ho_cap_ms: 10_000.0,
        }
    }
}

/// Per-cell blocks `[sinr, prb, active_ues, tb_count, qpsk, 16qam, 64qam,
/// ho_cost]` in record order, then the normalized time since the last handover.
pub fn encode_state(record: &UeStateRecord, n: &NormManifest) -> Result<Vec<f64>, RlError> {
    let mut out = Vec::with_capacity(record.per_cell.len() * FEATURES_PER_CELL + 1);
    for c in &record.per_cell {
        let raw = [c.sinr_db, c.prb_util_pct, c.share_qpsk, c.share_16qam, c.share_64qam, c.ho_cost];
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(RlError::NonFiniteInput(format!("ue {} cell {}", record.ue_id, c.cell_id)));
        }
        let sinr = c.sinr_db.clamp(n.sinr_min_db, n.sinr_max_db);
        out.extend_from_slice(&[
            (sinr - n.sinr_min_db) / (n.sinr_max_db - n.sinr_min_db),
            c.prb_util_pct / n.prb_util_scale,
            c.active_ues as f64 / n.active_ues_scale,
            c.tb_count as f64 / n.tb_count_scale,
            c.share_qpsk,
            c.share_16qam,
            c.share_64qam,
            c.ho_cost,
        ]);
    }
    out.push((record.t_since_last_ho_ms as f64).min(n.t_since_ho_cap_ms) / n.t_since_ho_cap_ms);
    Ok(out)
}
