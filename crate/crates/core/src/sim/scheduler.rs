//! Equal-share round-robin PRB scheduler.
//!
//! Within a slot the PRBs of a cell are handed out one at a time, cycling over
//! the backlogged UEs in rotation order and skipping UEs whose backlog is
//! already covered. The rotation start advances by one UE every slot so the
//! remainder PRBs are shared fairly over time. The implementation below grants
//! whole rounds at once, which yields exactly the same allocation.

use super::mcs::{Mcs, Modulation};
use super::topology::{Cell, CellId};
use super::SimError;

pub type UeId = u32;

/// Residual backlog below this many bits is treated as empty.
const EMPTY_BITS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedRequest {
    pub ue_id: UeId,
    pub serving_cell: CellId,
    pub demand_bits: f64,
    pub mcs: Mcs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grant {
    pub ue_id: UeId,
    pub prbs_granted: u64,
    pub bits_served: f64,
    /// One transport block per slot with a nonzero grant.
    pub tb_count: u64,
    pub modulation: Modulation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSchedule {
    pub cell_id: CellId,
    pub slots: u32,
    pub n_prb: u32,
    pub grants: Vec<Grant>,
}

impl CellSchedule {
    pub fn total_prbs(&self) -> u64 {
        self.grants.iter().map(|g| g.prbs_granted).sum()
    }

    pub fn total_bits(&self) -> f64 {
        self.grants.iter().map(|g| g.bits_served).sum()
    }

    pub fn capacity_prbs(&self) -> u64 {
        self.n_prb as u64 * self.slots as u64
    }
}

/// Parameters of the slot grid.
#[derive(Debug, Clone, Copy)]
pub struct SlotGrid {
    pub slots: u32,
    pub slot_s: f64,
    pub prb_bandwidth_hz: f64,
}

/// Schedules `requests` on `cell` for `grid.slots` slots. `rotation` carries
/// the round-robin pointer across calls.
pub fn schedule_cell(
    cell: &Cell,
    requests: &[SchedRequest],
    grid: SlotGrid,
    rotation: &mut u64,
) -> Result<CellSchedule, SimError> {
    if let Some(r) = requests.iter().find(|r| r.serving_cell != cell.cell_id) {
        return Err(SimError::WrongCell { ue_id: r.ue_id, expected: cell.cell_id, got: r.serving_cell });
    }
    if let Some(r) = requests.iter().find(|r| !(r.demand_bits >= 0.0)) {
        return Err(SimError::NegativeDemand(r.ue_id));
    }
    let n = requests.len();
    let mut remaining: Vec<f64> = requests.iter().map(|r| r.demand_bits).collect();
    let mut grants: Vec<Grant> = requests
        .iter()
        .map(|r| Grant {
            ue_id: r.ue_id,
            prbs_granted: 0,
            bits_served: 0.0,
            tb_count: 0,
            modulation: r.mcs.modulation,
        })
        .collect();
    let bits_per_prb: Vec<f64> = requests
        .iter()
        .map(|r| grid.prb_bandwidth_hz * r.mcs.spectral_eff_bps_per_hz * grid.slot_s)
        .collect();

    let mut slot_grant = vec![0u64; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for _ in 0..grid.slots {
        if n == 0 {
            break;
        }
        let start = (*rotation % n as u64) as usize;
        *rotation = rotation.wrapping_add(1);
        order.clear();
        order.extend((0..n).map(|k| (start + k) % n).filter(|&i| {
            remaining[i] > EMPTY_BITS && bits_per_prb[i] > 0.0
        }));
        if order.is_empty() {
            continue;
        }
        let need: Vec<u64> = order
            .iter()
            .map(|&i| (remaining[i] / bits_per_prb[i]).ceil().max(1.0) as u64)
            .collect();
        slot_grant.iter_mut().for_each(|g| *g = 0);
        let mut free = cell.n_prb as u64;
        let mut active: Vec<usize> = (0..order.len()).collect();
        while free > 0 && !active.is_empty() {
            let k = active.len() as u64;
            let min_gap = active.iter().map(|&a| need[a] - slot_grant[order[a]]).min().unwrap();
            let rounds = min_gap.min(free / k);
            if rounds == 0 {
                // Partial round: one PRB each to the first `free` UEs in order.
                for &a in active.iter().take(free as usize) {
                    slot_grant[order[a]] += 1;
                }
                break;
            }
            for &a in &active {
                slot_grant[order[a]] += rounds;
            }
            free -= rounds * k;
            active.retain(|&a| slot_grant[order[a]] < need[a]);
        }
        for &i in &order {
            let prbs = slot_grant[i];
            if prbs == 0 {
                continue;
            }
            let served = (prbs as f64 * bits_per_prb[i]).min(remaining[i]);
            remaining[i] -= served;
            let g = &mut grants[i];
            g.prbs_granted += prbs;
            g.bits_served += served;
            g.tb_count += 1;
        }
    }
    Ok(CellSchedule { cell_id: cell.cell_id, slots: grid.slots, n_prb: cell.n_prb, grants })
}
