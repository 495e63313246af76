use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::RunError;
use crate::eval::METRICS_COLUMNS;

/// Columns of `metrics.csv` that identify a run rather than measure it.
const ID_COLUMNS: usize = 3;

/// One row per policy: mean, min and max of every metric across its runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: String,
    pub runs: usize,
    /// (metric, mean, min, max) in `metrics.csv` column order.
    pub stats: Vec<(String, f64, f64, f64)>,
}

fn read_metrics(path: &Path) -> Result<Vec<(String, Vec<f64>)>, RunError> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_COLUMNS {
        return Err(RunError::Config(format!("{} has unexpected columns", path.display())));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .skip(ID_COLUMNS)
            .map(|v| v.parse::<f64>().map_err(|e| RunError::Config(format!("{}: '{v}': {e}", path.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((rec[1].to_string(), vals));
    }
    Ok(rows)
}

/// Aggregates the `metrics.csv` of each run directory by policy.
pub fn compare_runs(dirs: &[PathBuf]) -> Result<Vec<PolicySummary>, RunError> {
    if dirs.is_empty() {
        return Err(RunError::Config("compare needs at least one run directory".into()));
    }
    let mut by_policy: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for d in dirs {
        for (policy, vals) in read_metrics(&d.join("metrics.csv"))? {
            by_policy.entry(policy).or_default().push(vals);
        }
    }
    let names = &METRICS_COLUMNS[ID_COLUMNS..];
    Ok(by_policy
        .into_iter()
        .map(|(policy, rows)| {
            let stats = names
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let col = rows.iter().map(|r| r[j]);
                    let mean = col.clone().sum::<f64>() / rows.len() as f64;
                    let min = col.clone().fold(f64::INFINITY, f64::min);
                    let max = col.fold(f64::NEG_INFINITY, f64::max);
                    (name.to_string(), mean, min, max)
                })
                .collect();
            PolicySummary { policy, runs: rows.len(), stats }
        })
        .collect())
}

pub fn write_compare_csv<W: Write>(w: W, rows: &[PolicySummary]) -> Result<(), RunError> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["policy".to_string(), "runs".to_string()];
    for name in &METRICS_COLUMNS[ID_COLUMNS..] {
        header.extend([format!("{name}_mean"), format!("{name}_min"), format!("{name}_max")]);
    }
    wr.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.policy.clone(), r.runs.to_string()];
        for (_, mean, min, max) in &r.stats {
            rec.extend([mean.to_string(), min.to_string(), max.to_string()]);
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, policy: &str, thpt: &str) {
        let mut wr = csv::Writer::from_path(dir.join("metrics.csv")).unwrap();
        wr.write_record(METRICS_COLUMNS).unwrap();
        let mut row = vec!["r".to_string(), policy.to_string(), "1".to_string()];
        row.extend(["20", "60", thpt, "1", "2", "3", "4", "50", "7", "0.1"].map(String::from));
        wr.write_record(&row).unwrap();
        wr.flush().unwrap();
    }

    #[test]
    fn groups_by_policy() {
        let t = tempfile::tempdir().unwrap();
        let dirs: Vec<PathBuf> = (0..3).map(|i| t.path().join(i.to_string())).collect();
        for d in &dirs {
            std::fs::create_dir_all(d).unwrap();
        }
        write(&dirs[0], "son1", "10");
        write(&dirs[1], "son1", "20");
        write(&dirs[2], "rrm", "5");
        let s = compare_runs(&dirs).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].policy, "son1");
        assert_eq!(s[1].runs, 2);
        assert_eq!(s[1].stats[2], ("mean_thpt_bps".to_string(), 15.0, 10.0, 20.0));
        let mut out = Vec::new();
        write_compare_csv(&mut out, &s).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("policy,runs,n_ues_mean,n_ues_min,n_ues_max,"));
        assert_eq!(text.lines().count(), 3);
    }
}
