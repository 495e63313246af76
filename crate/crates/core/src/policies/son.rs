use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check, DecisionReason, Policy, PolicyDecision, PolicyError};
use crate::ric::UeStateRecord;
use crate::sim::{CellId, UeId};

/// Time-to-trigger parameters. A fixed TTT has `slope_ms_per_db = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SonParams {
    pub threshold_db: f64,
    pub ttt_base_ms: f64,
    pub slope_ms_per_db: f64,
    pub ttt_min_ms: f64,
}

impl SonParams {
    pub fn son1() -> Self {
        Self { threshold_db: 3.0, ttt_base_ms: 110.0, slope_ms_per_db: 0.0, ttt_min_ms: 110.0 }
    }

    pub fn son2() -> Self {
        Self { threshold_db: 3.0, ttt_base_ms: 110.0, slope_ms_per_db: 10.0, ttt_min_ms: 20.0 }
    }

    /// TTT for a candidate `margin_db` above the serving cell.
    pub fn ttt_ms(&self, margin_db: f64) -> f64 {
        (self.ttt_base_ms - self.slope_ms_per_db * (margin_db - self.threshold_db)).max(self.ttt_min_ms)
    }
}

/// When each (UE, candidate) pair first crossed the threshold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TttTracker {
    since: BTreeMap<(UeId, CellId), u64>,
    serving: BTreeMap<UeId, CellId>,
}

impl TttTracker {
    pub fn since(&self, ue: UeId, cell: CellId) -> Option<u64> {
        self.since.get(&(ue, cell)).copied()
    }

    pub fn clear_ue(&mut self, ue: UeId) {
        self.since.retain(|&(u, _), _| u != ue);
    }

    pub fn is_empty(&self) -> bool {
        self.since.is_empty()
    }
}

/// SON handover with a (possibly margin-dependent) time-to-trigger.
#[derive(Debug, Clone)]
pub struct Son {
    name: String,
    pub params: SonParams,
    pub tracker: TttTracker,
}

impl Son {
    pub fn son1() -> Self {
        Self::new("son1", SonParams::son1())
    }

    pub fn son2() -> Self {
        Self::new("son2", SonParams::son2())
    }

    pub fn new(name: &str, params: SonParams) -> Self {
        Self { name: name.to_string(), params, tracker: TttTracker::default() }
    }
}

impl Policy for Son {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&mut self, record: &UeStateRecord) -> Result<PolicyDecision, PolicyError> {
        check(record)?;
        let ue = record.ue_id;
        let now = record.window_end_ms;
        let t = &mut self.tracker;
        if t.serving.insert(ue, record.serving_cell_id) != Some(record.serving_cell_id) {
            t.clear_ue(ue);
        }
        let serving = record.serving().expect("validated").sinr_db;

        let mut fire: Option<(CellId, f64)> = None;
        for c in &record.per_cell {
            if c.cell_id == record.serving_cell_id {
                continue;
            }
            let margin = c.sinr_db - serving;
            if margin < self.params.threshold_db {
                t.since.remove(&(ue, c.cell_id));
                continue;
            }
            let since = *t.since.entry((ue, c.cell_id)).or_insert(now);
            let elapsed = (now - since) as f64;
            if elapsed >= self.params.ttt_ms(margin) && fire.map_or(true, |(_, s)| c.sinr_db > s) {
                fire = Some((c.cell_id, c.sinr_db));
            }
        }

        match fire {
            Some((cell, _)) => {
                t.clear_ue(ue);
                t.serving.insert(ue, cell);
                Ok(PolicyDecision { ue_id: ue, target_cell_id: cell, reason: DecisionReason::TttExpired })
            }
            None => Ok(PolicyDecision::noop(record)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ric::fixtures::record;

    fn sinr(neighbor_margin: f64) -> [f64; 7] {
        let mut s = [0.0; 7];
        s[1] = neighbor_margin;
        s
    }

    #[test]
    fn son1_fires_at_200ms() {
        let mut p = Son::son1();
        let out: Vec<_> =
            [0, 100, 200].iter().map(|&t| p.decide(&record(1, t, 1, sinr(3.5))).unwrap().target_cell_id).collect();
        assert_eq!(out, [1, 1, 2]);
        assert!(p.tracker.is_empty());
    }

    #[test]
    fn son1_dip_restarts_timer() {
        let mut p = Son::son1();
        let margins = [4.0, 2.0, 4.0, 4.0, 4.0];
        let out: Vec<_> = margins
            .iter()
            .enumerate()
            .map(|(i, &m)| p.decide(&record(1, i as u64 * 100, 1, sinr(m))).unwrap().target_cell_id)
            .collect();
        assert_eq!(out, [1, 1, 1, 1, 2]);
    }

    #[test]
    fn below_threshold_never_tracks() {
        let mut p = Son::son1();
        for t in 0..50 {
            assert_eq!(p.decide(&record(1, t * 100, 1, sinr(2.99))).unwrap().reason, DecisionReason::NoOp);
        }
        assert!(p.tracker.is_empty());
    }

    #[test]
    fn son2_ttt_formula() {
        let p = SonParams::son2();
        assert_eq!(p.ttt_ms(3.0), 110.0);
        assert_eq!(p.ttt_ms(12.0), 20.0);
        assert_eq!(p.ttt_ms(30.0), 20.0);
        assert_eq!(p.ttt_ms(5.0), 90.0);
    }

    #[test]
    fn son2_large_margin_fires_next_window() {
        let mut p = Son::son2();
        assert_eq!(p.decide(&record(1, 0, 1, sinr(12.0))).unwrap().target_cell_id, 1);
        assert_eq!(p.decide(&record(1, 100, 1, sinr(12.0))).unwrap().target_cell_id, 2);
    }

    #[test]
    fn serving_change_clears_tracker() {
        let mut p = Son::son1();
        p.decide(&record(1, 0, 1, sinr(5.0))).unwrap();
        assert_eq!(p.tracker.since(1, 2), Some(0));
        // Serving changed to 3 outside this policy's control.
        let mut s = [0.0; 7];
        s[1] = 5.0;
        p.decide(&record(1, 100, 3, s)).unwrap();
        assert_eq!(p.tracker.since(1, 2), Some(100));
    }

    #[test]
    fn ues_tracked_independently() {
        let mut p = Son::son1();
        p.decide(&record(1, 0, 1, sinr(5.0))).unwrap();
        p.decide(&record(2, 100, 1, sinr(5.0))).unwrap();
        assert_eq!(p.decide(&record(1, 200, 1, sinr(5.0))).unwrap().target_cell_id, 2);
        assert_eq!(p.decide(&record(2, 200, 1, sinr(5.0))).unwrap().target_cell_id, 1);
    }
}
