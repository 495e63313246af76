use serde::{Deserialize, Serialize};

use crate::sim::{CellId, UeId};

pub const N_NR_CELLS: usize = 7;

/// Measurements of one NR cell as seen by one UE in one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    pub cell_id: CellId,
    pub sinr_db: f64,
    pub prb_util_pct: f64,
    pub active_ues: u32,
    pub tb_count: u32,
    pub share_qpsk: f64,
    pub share_16qam: f64,
    pub share_64qam: f64,
    /// Cost of handing over to this cell now; zero for the serving cell.
    pub ho_cost: f64,
}

/// Consolidated per-UE view of one report window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeStateRecord {
    pub ue_id: UeId,
    pub window_end_ms: u64,
    pub t_since_last_ho_ms: u64,
    pub serving_cell_id: CellId,
    /// All NR cells, ascending cell id.
    pub per_cell: Vec<CellState>,
    /// PDCP throughput over both legs.
    pub reward_throughput_bps: f64,
}

impl UeStateRecord {
    pub fn cell(&self, cell_id: CellId) -> Option<&CellState> {
        self.per_cell.iter().find(|c| c.cell_id == cell_id)
    }

    pub fn serving(&self) -> Option<&CellState> {
        self.cell(self.serving_cell_id)
    }

    /// Position of `cell_id` in `per_cell`, which is also the action index.
    pub fn action_index(&self, cell_id: CellId) -> Option<usize> {
        self.per_cell.iter().position(|c| c.cell_id == cell_id)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.per_cell.len() != N_NR_CELLS {
            return Err(format!("expected {N_NR_CELLS} cells, got {}", self.per_cell.len()));
        }
        if !self.per_cell.windows(2).all(|w| w[0].cell_id < w[1].cell_id) {
            return Err("cells not in ascending id order".into());
        }
        if self.serving().is_none() {
            return Err(format!("serving cell {} not among the cells", self.serving_cell_id));
        }
        let finite = self.per_cell.iter().all(|c| {
            [c.sinr_db, c.prb_util_pct, c.share_qpsk, c.share_16qam, c.share_64qam, c.ho_cost]
                .iter()
                .all(|x| x.is_finite())
        });
        if !finite || !self.reward_throughput_bps.is_finite() {
            return Err("non-finite field".into());
        }
        Ok(())
    }
}

/// Handover cost of moving to a non-serving cell, decaying with the windows
/// elapsed since the previous handover.
pub fn ho_cost(k0: f64, delta: f64, windows_since_ho: f64, is_serving: bool) -> f64 {
    if is_serving {
        0.0
    } else {
        k0 * (-delta * windows_since_ho).exp()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// A valid record with the given per-cell SINRs (cell ids 1..=7).
    pub fn record(ue_id: UeId, window_end_ms: u64, serving: CellId, sinr: [f64; 7]) -> UeStateRecord {
        UeStateRecord {
            ue_id,
            window_end_ms,
            t_since_last_ho_ms: window_end_ms,
            serving_cell_id: serving,
            per_cell: (0..7)
                .map(|i| CellState {
                    cell_id: i as CellId + 1,
                    sinr_db: sinr[i],
                    prb_util_pct: 0.0,
                    active_ues: 0,
                    tb_count: 0,
                    share_qpsk: 0.0,
                    share_16qam: 0.0,
                    share_64qam: 0.0,
                    ho_cost: if i as CellId + 1 == serving { 0.0 } else { 1.0 },
                })
                .collect(),
            reward_throughput_bps: 1e6,
        }
    }
}
