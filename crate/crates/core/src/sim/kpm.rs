//! Per-window measurement payloads emitted by each E2 node.

use serde::{Deserialize, Serialize};

use super::topology::CellId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKpm {
    pub cell_id: CellId,
    pub prb_util_pct: f64,
    pub active_ues: u32,
    pub tb_count: u32,
    pub share_qpsk: f64,
    pub share_16qam: f64,
    pub share_64qam: f64,
}

impl CellKpm {
    pub fn idle(cell_id: CellId) -> Self {
        Self {
            cell_id,
            prb_util_pct: 0.0,
            active_ues: 0,
            tb_count: 0,
            share_qpsk: 0.0,
            share_16qam: 0.0,
            share_64qam: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeKpm {
    pub ue_id: u32,
    /// PDCP throughput over the window. NR nodes report both split-bearer
    /// legs; the eNB reports its own leg only.
    pub pdcp_throughput_bps: f64,
    /// SINR per measured cell, ascending cell id.
    pub sinr_db_by_cell: Vec<(CellId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpmReport {
    pub node_id: u32,
    pub window_end_ms: u64,
    pub cell: CellKpm,
    pub ues: Vec<UeKpm>,
}

/// Transport-block tally for one cell over one window.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TbTally {
    pub qpsk: u64,
    pub qam16: u64,
    pub qam64: u64,
}

impl TbTally {
    pub fn total(&self) -> u64 {
        self.qpsk + self.qam16 + self.qam64
    }

    /// Shares normalized by the total; all zero for an idle cell.
    pub fn shares(&self) -> (f64, f64, f64) {
        let p = self.total();
        if p == 0 {
            return (0.0, 0.0, 0.0);
        }
        let p = p as f64;
        (self.qpsk as f64 / p, self.qam16 as f64 / p, self.qam64 as f64 / p)
    }
}
