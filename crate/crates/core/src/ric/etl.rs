use std::collections::{BTreeMap, BTreeSet};

use super::record::{ho_cost, CellState, UeStateRecord};
use crate::sim::{CellId, KpmReport, UeId};

/// Last handover time per UE, updated when the RAN acknowledges a control.
#[derive(Debug, Clone, Default)]
pub struct HoLedger {
    last_ho_ms: BTreeMap<UeId, u64>,
    pending: BTreeMap<UeId, (u64, CellId)>,
}

impl HoLedger {
    pub fn last_ho_ms(&self, ue: UeId) -> u64 {
        self.last_ho_ms.get(&ue).copied().unwrap_or(0)
    }

    /// Remembers a control sent for the window ending at `window_end_ms`.
    pub fn control_sent(&mut self, ue: UeId, target: CellId, window_end_ms: u64) {
        self.pending.insert(ue, (window_end_ms, target));
    }

    /// Returns true if the ack matched a pending control.
    pub fn control_acked(&mut self, ue: UeId, target: CellId) -> bool {
        match self.pending.get(&ue) {
            Some(&(t, c)) if c == target => {
                self.pending.remove(&ue);
                self.last_ho_ms.insert(ue, t);
                true
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtlParams {
    pub epsilon_ms: u64,
    pub report_period_ms: u64,
    pub k0: f64,
    pub delta: f64,
}

impl Default for EtlParams {
    fn default() -> Self {
        Self { epsilon_ms: 300, report_period_ms: 100, k0: 1.0, delta: 0.1 }
    }
}

const N_CELL_FIELDS: usize = 7;

/// A value and the window it was observed in.
type Seen = Option<(u64, f64)>;

#[derive(Debug, Clone, Default)]
struct UeHistory {
    serving: Option<(u64, CellId)>,
    throughput: Seen,
    sinr: BTreeMap<CellId, (u64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedRecord {
    pub ue_id: UeId,
    pub window_end_ms: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowOutput {
    pub records: Vec<UeStateRecord>,
    pub dropped: Vec<DroppedRecord>,
    /// Number of fields taken from history rather than this window.
    pub filled: u64,
}

/// Joins per-node KPM reports of one window into per-UE state records,
/// carrying missing values forward for at most `epsilon_ms`.
#[derive(Debug, Clone)]
pub struct Etl {
    pub params: EtlParams,
    nr_cells: Vec<CellId>,
    cell_hist: BTreeMap<CellId, [Seen; N_CELL_FIELDS]>,
    ue_hist: BTreeMap<UeId, UeHistory>,
    pub dropped_total: u64,
}

fn cell_fields(r: &KpmReport) -> [f64; N_CELL_FIELDS] {
    let c = &r.cell;
    [
        c.prb_util_pct,
        c.active_ues as f64,
        c.tb_count as f64,
        c.share_qpsk,
        c.share_16qam,
        c.share_64qam,
        0.0,
    ]
}

impl Etl {
    pub fn new(params: EtlParams, mut nr_cells: Vec<CellId>) -> Self {
        nr_cells.sort_unstable();
        Self { params, nr_cells, cell_hist: BTreeMap::new(), ue_hist: BTreeMap::new(), dropped_total: 0 }
    }

    fn fresh(&self, seen: Seen, t: u64) -> Option<f64> {
        seen.filter(|&(at, _)| at <= t && t - at <= self.params.epsilon_ms).map(|(_, v)| v)
    }

    fn observe(&mut self, t: u64, reports: &BTreeMap<u32, KpmReport>) {
        let nr: BTreeSet<CellId> = self.nr_cells.iter().copied().collect();
        for r in reports.values() {
            if !nr.contains(&r.cell.cell_id) {
                continue;
            }
            let hist = self.cell_hist.entry(r.cell.cell_id).or_default();
            for (slot, v) in hist.iter_mut().zip(cell_fields(r)) {
                // Non-finite values mark a missing measurement.
                if v.is_finite() {
                    *slot = Some((t, v));
                }
            }
            for ue in &r.ues {
                let h = self.ue_hist.entry(ue.ue_id).or_default();
                h.serving = Some((t, r.cell.cell_id));
                if ue.pdcp_throughput_bps.is_finite() {
                    h.throughput = Some((t, ue.pdcp_throughput_bps));
                }
                for &(cell, sinr) in &ue.sinr_db_by_cell {
                    if sinr.is_finite() {
                        h.sinr.insert(cell, (t, sinr));
                    }
                }
            }
        }
    }

    /// Builds records for the window ending at `t` from whichever node
    /// reports arrived for it.
    pub fn aggregate(&mut self, t: u64, reports: &BTreeMap<u32, KpmReport>, ledger: &HoLedger) -> WindowOutput {
        self.observe(t, reports);
        let mut out = WindowOutput::default();

        let mut ues: BTreeSet<UeId> = BTreeSet::new();
        for (&ue, h) in &self.ue_hist {
            if h.serving.is_some_and(|(at, _)| at <= t && t - at <= self.params.epsilon_ms) {
                ues.insert(ue);
            }
        }
        // Fill counts fields whose value did not come from this window.
        let stale = |seen: Seen| seen.is_some_and(|(at, _)| at != t);

        for ue in ues {
            let h = &self.ue_hist[&ue];
            let serving = h.serving.expect("selected above").1;
            let mut missing = Vec::new();
            let thpt = self.fresh(h.throughput, t);
            if thpt.is_none() {
                missing.push("throughput".to_string());
            }
            out.filled += (h.serving.is_some_and(|(at, _)| at != t)) as u64 + stale(h.throughput) as u64;

            let last_ho = ledger.last_ho_ms(ue);
            let since = t.saturating_sub(last_ho);
            let windows = since as f64 / self.params.report_period_ms as f64;
            let mut per_cell = Vec::with_capacity(self.nr_cells.len());
            for &cell in &self.nr_cells {
                let sinr_seen = h.sinr.get(&cell).copied();
                let sinr = self.fresh(sinr_seen, t);
                out.filled += stale(sinr_seen) as u64;
                let hist = self.cell_hist.get(&cell).copied().unwrap_or_default();
                let mut f = [0.0; N_CELL_FIELDS];
                for (i, seen) in hist.iter().enumerate().take(6) {
                    match self.fresh(*seen, t) {
                        Some(v) => f[i] = v,
                        None => missing.push(format!("cell {cell} field {i}")),
                    }
                    out.filled += stale(*seen) as u64;
                }
                if sinr.is_none() {
                    missing.push(format!("cell {cell} sinr"));
                }
                per_cell.push(CellState {
                    cell_id: cell,
                    sinr_db: sinr.unwrap_or(f64::NAN),
                    prb_util_pct: f[0],
                    active_ues: f[1] as u32,
                    tb_count: f[2] as u32,
                    share_qpsk: f[3],
                    share_16qam: f[4],
                    share_64qam: f[5],
                    ho_cost: ho_cost(self.params.k0, self.params.delta, windows, cell == serving),
                });
            }
            if !missing.is_empty() {
                self.dropped_total += 1;
                out.dropped.push(DroppedRecord { ue_id: ue, window_end_ms: t, reason: missing.join(", ") });
                continue;
            }
            out.records.push(UeStateRecord {
                ue_id: ue,
                window_end_ms: t,
                t_since_last_ho_ms: since,
                serving_cell_id: serving,
                per_cell,
                reward_throughput_bps: thpt.expect("checked"),
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{CellKpm, UeKpm};

    fn report(cell: CellId, t: u64, prb: f64, ues: &[UeId]) -> KpmReport {
        KpmReport {
            node_id: cell,
            window_end_ms: t,
            cell: CellKpm { prb_util_pct: prb, active_ues: ues.len() as u32, ..CellKpm::idle(cell) },
            ues: ues
                .iter()
                .map(|&u| UeKpm {
                    ue_id: u,
                    pdcp_throughput_bps: 1e6 + u as f64,
                    sinr_db_by_cell: (1..=7).map(|c| (c, c as f64 + u as f64)).collect(),
                })
                .collect(),
        }
    }

    fn all(t: u64, skip: &[CellId]) -> BTreeMap<u32, KpmReport> {
        (1..=7)
            .filter(|c| !skip.contains(c))
            .map(|c| (c, report(c, t, 10.0 * c as f64 + t as f64 / 100.0, if c == 2 { &[5, 6] } else { &[] })))
            .collect()
    }

    fn etl() -> Etl {
        Etl::new(EtlParams::default(), (1..=7).collect())
    }

    #[test]
    fn complete_window_is_a_direct_join() {
        let mut e = etl();
        let out = e.aggregate(100, &all(100, &[]), &HoLedger::default());
        assert_eq!(out.filled, 0);
        assert!(out.dropped.is_empty());
        assert_eq!(out.records.len(), 2);
        let r = &out.records[0];
        assert_eq!((r.ue_id, r.serving_cell_id, r.window_end_ms, r.t_since_last_ho_ms), (5, 2, 100, 100));
        assert_eq!(r.reward_throughput_bps, 1e6 + 5.0);
        for (i, c) in r.per_cell.iter().enumerate() {
            let id = i as f64 + 1.0;
            assert_eq!(c.cell_id, i as u32 + 1);
            assert_eq!(c.sinr_db, id + 5.0);
            assert_eq!(c.prb_util_pct, 10.0 * id + 1.0);
            let want = if c.cell_id == 2 { 0.0 } else { (-0.1f64).exp() };
            assert!((c.ho_cost - want).abs() < 1e-15);
        }
        assert!(r.validate().is_ok());
    }

    #[test]
    fn missing_cell_filled_within_epsilon() {
        let mut e = etl();
        let l = HoLedger::default();
        e.aggregate(100, &all(100, &[]), &l);
        let out = e.aggregate(200, &all(200, &[4]), &l);
        assert_eq!(out.records.len(), 2);
        assert!(out.filled > 0);
        // Cell 4's PRB value is carried from t=100.
        assert_eq!(out.records[0].per_cell[3].prb_util_pct, 41.0);
        assert_eq!(out.records[0].per_cell[4].prb_util_pct, 52.0);
    }

    #[test]
    fn missing_beyond_epsilon_drops() {
        let mut e = etl();
        let l = HoLedger::default();
        e.aggregate(100, &all(100, &[]), &l);
        for t in [200, 300, 400] {
            assert_eq!(e.aggregate(t, &all(t, &[4]), &l).records.len(), 2);
        }
        let out = e.aggregate(500, &all(500, &[4]), &l);
        assert!(out.records.is_empty());
        assert_eq!(out.dropped.len(), 2);
        assert_eq!(e.dropped_total, 2);
        assert!(out.dropped[0].reason.contains("cell 4"));
    }

    #[test]
    fn fill_never_fabricates() {
        let mut e = etl();
        let l = HoLedger::default();
        let mut seen = BTreeSet::new();
        for t in (100..=2000).step_by(100) {
            let skip: Vec<CellId> = if t % 300 == 0 { vec![3, 4] } else { vec![] };
            let reps = all(t, &skip);
            for r in reps.values() {
                seen.insert((r.cell.cell_id, r.cell.prb_util_pct.to_bits()));
            }
            for rec in e.aggregate(t, &reps, &l).records {
                for c in rec.per_cell {
                    assert!(seen.contains(&(c.cell_id, c.prb_util_pct.to_bits())));
                }
            }
        }
    }

    #[test]
    fn nan_field_filled_individually() {
        let mut e = etl();
        let l = HoLedger::default();
        e.aggregate(100, &all(100, &[]), &l);
        let mut reps = all(200, &[]);
        reps.get_mut(&6).unwrap().cell.share_qpsk = f64::NAN;
        reps.get_mut(&6).unwrap().cell.prb_util_pct = 99.0;
        reps.get_mut(&2).unwrap().ues[0].sinr_db_by_cell[0].1 = f64::NAN;
        let out = e.aggregate(200, &reps, &l);
        let r = &out.records[0];
        assert_eq!(r.per_cell[5].prb_util_pct, 99.0);
        assert_eq!(r.per_cell[5].share_qpsk, 0.0);
        assert_eq!(r.per_cell[0].sinr_db, 6.0);
        // Cell 6 share for both UEs plus one UE-level SINR.
        assert_eq!(out.filled, 3);
    }

    #[test]
    fn ledger_drives_cost() {
        let mut e = etl();
        let mut l = HoLedger::default();
        l.control_sent(5, 3, 100);
        assert!(!l.control_acked(5, 4));
        assert!(l.control_acked(5, 3));
        assert_eq!(l.last_ho_ms(5), 100);
        let out = e.aggregate(1100, &all(1100, &[]), &l);
        let r = &out.records[0];
        assert_eq!(r.t_since_last_ho_ms, 1000);
        assert!((r.per_cell[0].ho_cost - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(out.records[1].t_since_last_ho_ms, 1100);
    }
}
