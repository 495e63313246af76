//! Run-level KPIs: throughput percentiles, spectral efficiency, PRB
//! utilization, SINR distribution and mobility overhead.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::sim::{CellId, CellWindowRow, Event, EventKind, UeId, UeWindowRow, World};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("percentile of an empty sample")]
    Empty,
    #[error("percentile {0} outside [0, 100]")]
    BadPercentile(f64),
    #[error("run log: {0}")]
    BadLog(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Nearest-rank percentile: the `ceil(p/100 · n)`-th smallest sample.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::Empty);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(EvalError::BadPercentile(p));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * s.len() as f64).ceil().max(1.0) as usize;
    Ok(s[rank.min(s.len()) - 1])
}

pub fn spectral_efficiency(bits_served: f64, bandwidth_hz: f64, duration_s: f64) -> f64 {
    bits_served / (bandwidth_hz * duration_s)
}

/// Handovers per second weighted by the UE's share of total throughput.
pub fn mobility_overhead(ho_count: u32, duration_s: f64, mean_thpt_u: f64, mean_thpt_all: &[f64]) -> f64 {
    let total: f64 = mean_thpt_all.iter().sum();
    if total <= 0.0 {
        log::warn!("zero total throughput; mobility overhead set to 0");
        return 0.0;
    }
    (ho_count as f64 / duration_s) * (mean_thpt_u / total)
}

/// Everything the metrics are computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub duration_s: f64,
    pub ue_rows: Vec<UeWindowRow>,
    pub cell_rows: Vec<CellWindowRow>,
    pub ho_counts: BTreeMap<UeId, u32>,
    pub nr_bandwidth_hz: f64,
    pub lte_bandwidth_hz: f64,
}

impl RunLog {
    pub fn from_world(w: &World) -> Self {
        Self::from_parts(
            w.now_ms as f64 / 1000.0,
            w.ue_log.clone(),
            w.cell_log.clone(),
            &w.events,
            w.config.nr_bandwidth_hz,
            w.config.lte_bandwidth_hz,
        )
    }

    pub fn from_parts(
        duration_s: f64,
        ue_rows: Vec<UeWindowRow>,
        cell_rows: Vec<CellWindowRow>,
        events: &[Event],
        nr_bandwidth_hz: f64,
        lte_bandwidth_hz: f64,
    ) -> Self {
        let mut ho_counts: BTreeMap<UeId, u32> = ue_rows.iter().map(|r| (r.ue_id, 0)).collect();
        for e in events.iter().filter(|e| e.kind == EventKind::Handover) {
            *ho_counts.entry(e.ue_id).or_default() += 1;
        }
        Self { duration_s, ue_rows, cell_rows, ho_counts, nr_bandwidth_hz, lte_bandwidth_hz }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeMetrics {
    pub ue_id: UeId,
    pub mean_throughput_bps: f64,
    pub ho_count: u32,
    pub h_u: f64,
    pub spectral_eff_bps_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub duration_s: f64,
    pub per_ue: Vec<UeMetrics>,
    pub mean_throughput_bps: f64,
    pub p10_throughput_bps: f64,
    pub p95_throughput_bps: f64,
    pub mean_ue_spectral_eff: f64,
    pub mean_cell_spectral_eff: f64,
    pub mean_prb_util_pct: f64,
    pub total_handovers: u64,
    pub mean_h_u: f64,
    pub sinr_samples_db: Vec<f64>,
    /// Served bits summed over UE rows and over cell rows.
    pub ue_bits_total: f64,
    pub cell_bits_total: f64,
}

pub fn compute_metrics(log: &RunLog) -> Result<RunMetrics, EvalError> {
    if log.duration_s <= 0.0 {
        return Err(EvalError::BadLog("duration must be positive".into()));
    }
    let t = log.duration_s;
    let mut bits: BTreeMap<UeId, (f64, f64)> = BTreeMap::new();
    for r in &log.ue_rows {
        let e = bits.entry(r.ue_id).or_default();
        e.0 += r.nr_bits;
        e.1 += r.lte_bits;
    }
    let thpt: Vec<f64> = bits.values().map(|(n, l)| (n + l) / t).collect();
    let per_ue: Vec<UeMetrics> = bits
        .iter()
        .zip(&thpt)
        .map(|((&ue_id, &(nr, lte)), &m)| {
            let ho = log.ho_counts.get(&ue_id).copied().unwrap_or(0);
            UeMetrics {
                ue_id,
                mean_throughput_bps: m,
                ho_count: ho,
                h_u: mobility_overhead(ho, t, m, &thpt),
                spectral_eff_bps_hz: spectral_efficiency(nr, log.nr_bandwidth_hz, t)
                    + spectral_efficiency(lte, log.lte_bandwidth_hz, t),
            }
        })
        .collect();
    if per_ue.is_empty() {
        return Err(EvalError::BadLog("no UE rows".into()));
    }
    let n = per_ue.len() as f64;

    let mut cells: BTreeMap<CellId, (f64, f64, Vec<f64>)> = BTreeMap::new();
    for r in &log.cell_rows {
        let e = cells.entry(r.cell_id).or_insert((0.0, r.bandwidth_hz, Vec::new()));
        e.0 += r.bits_served;
        let util = if r.prbs_available > 0 { 100.0 * r.prbs_used as f64 / r.prbs_available as f64 } else { 0.0 };
        e.2.push(util);
    }
    let nc = cells.len().max(1) as f64;
    let mean_cell_spectral_eff = cells.values().map(|(b, bw, _)| spectral_efficiency(*b, *bw, t)).sum::<f64>() / nc;
    let mean_prb_util_pct =
        cells.values().map(|(_, _, u)| u.iter().sum::<f64>() / u.len().max(1) as f64).sum::<f64>() / nc;

    Ok(RunMetrics {
        duration_s: t,
        mean_throughput_bps: thpt.iter().sum::<f64>() / n,
        p10_throughput_bps: percentile(&thpt, 10.0)?,
        p95_throughput_bps: percentile(&thpt, 95.0)?,
        mean_ue_spectral_eff: per_ue.iter().map(|u| u.spectral_eff_bps_hz).sum::<f64>() / n,
        mean_cell_spectral_eff,
        mean_prb_util_pct,
        total_handovers: per_ue.iter().map(|u| u.ho_count as u64).sum(),
        mean_h_u: per_ue.iter().map(|u| u.h_u).sum::<f64>() / n,
        sinr_samples_db: log.ue_rows.iter().map(|r| r.serving_sinr_db).collect(),
        ue_bits_total: bits.values().map(|(a, b)| a + b).sum(),
        cell_bits_total: cells.values().map(|c| c.0).sum(),
        per_ue,
    })
}

pub const METRICS_COLUMNS: [&str; 13] = [
    "run_id",
    "policy",
    "seed",
    "n_ues",
    "duration_s",
    "mean_thpt_bps",
    "p10_thpt_bps",
    "p95_thpt_bps",
    "mean_ue_se_bps_hz",
    "mean_cell_se_bps_hz",
    "mean_prb_util_pct",
    "total_handovers",
    "mean_h_u",
];

/// Identity of a run in `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunId {
    pub run_id: String,
    pub policy: String,
    pub seed: u64,
}

pub fn metrics_row(id: &RunId, m: &RunMetrics) -> Vec<String> {
    vec![
        id.run_id.clone(),
        id.policy.clone(),
        id.seed.to_string(),
        m.per_ue.len().to_string(),
        m.duration_s.to_string(),
        m.mean_throughput_bps.to_string(),
        m.p10_throughput_bps.to_string(),
        m.p95_throughput_bps.to_string(),
        m.mean_ue_spectral_eff.to_string(),
        m.mean_cell_spectral_eff.to_string(),
        m.mean_prb_util_pct.to_string(),
        m.total_handovers.to_string(),
        m.mean_h_u.to_string(),
    ]
}

pub fn write_metrics_csv<W: Write>(w: W, rows: &[(RunId, RunMetrics)]) -> Result<(), EvalError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(METRICS_COLUMNS)?;
    for (id, m) in rows {
        wr.write_record(metrics_row(id, m))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_per_ue_csv<W: Write>(w: W, m: &RunMetrics) -> Result<(), EvalError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["ue_id", "mean_throughput_bps", "ho_count", "h_u", "spectral_eff_bps_hz"])?;
    for u in &m.per_ue {
        wr.write_record([
            u.ue_id.to_string(),
            u.mean_throughput_bps.to_string(),
            u.ho_count.to_string(),
            u.h_u.to_string(),
            u.spectral_eff_bps_hz.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Empirical CDF points `(x, F(x))`, one per distinct sample value.
pub fn empirical_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in s.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => out.push((x, f)),
        }
    }
    out
}

pub fn write_sinr_cdf_csv<W: Write>(w: W, samples: &[f64]) -> Result<(), EvalError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["sinr_db", "cdf"])?;
    for (x, f) in empirical_cdf(samples) {
        wr.write_record([x.to_string(), f.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_rows_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<(), EvalError> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>, EvalError> {
    let mut rd = csv::Reader::from_reader(r);
    let rows = rd.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 10.0).unwrap(), 10.0);
        assert_eq!(percentile(&v, 95.0).unwrap(), 95.0);
        assert_eq!(percentile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&v, 100.0).unwrap(), 100.0);
        assert_eq!(percentile(&[7.5], 42.0).unwrap(), 7.5);
        assert!(matches!(percentile(&[], 10.0), Err(EvalError::Empty)));
        assert!(percentile(&[1.0], 101.0).is_err());
        assert_eq!(percentile(&[3.0, 1.0, 2.0, 4.0], 50.0).unwrap(), 2.0);
        assert_eq!(percentile(&[3.0, 1.0, 2.0, 4.0], 51.0).unwrap(), 3.0);
    }

    #[test]
    fn p10_of_uniform_draws() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let v: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let p = percentile(&v, 10.0).unwrap();
        assert!((0.07..=0.13).contains(&p));
    }

    #[test]
    fn overhead_and_efficiency() {
        assert_eq!(mobility_overhead(0, 10.0, 5.0, &[5.0, 5.0]), 0.0);
        assert_eq!(mobility_overhead(2, 10.0, 5.0, &[5.0, 5.0]), 0.1);
        assert_eq!(mobility_overhead(2, 10.0, 10.0, &[10.0, 10.0]), 0.1);
        assert_eq!(mobility_overhead(3, 10.0, 0.0, &[0.0, 0.0]), 0.0);
        assert_eq!(spectral_efficiency(20e6, 20e6, 1.0), 1.0);
        assert_eq!(spectral_efficiency(0.0, 20e6, 1.0), 0.0);
    }

    #[test]
    fn cdf_ends_at_one() {
        let c = empirical_cdf(&[3.0, 1.0, 1.0, 2.0]);
        assert_eq!(c, vec![(1.0, 0.5), (2.0, 0.75), (3.0, 1.0)]);
    }
}
