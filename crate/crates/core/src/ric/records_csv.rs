use std::io::{Read, Write};

use super::record::{CellState, UeStateRecord, N_NR_CELLS};
use crate::sim::CellId;

/// A record together with the target cell the policy chose for it.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchedRecord {
    pub record: UeStateRecord,
    pub action_target_cell_id: CellId,
}

const CELL_FIELDS: [&str; 8] =
    ["sinr_db", "prb_util_pct", "active_ues", "tb_count", "share_qpsk", "share_16qam", "share_64qam", "ho_cost"];

/// Column names of `records.csv`; per-cell blocks are numbered by position
/// (ascending cell id).
pub fn record_columns() -> Vec<String> {
    let mut cols: Vec<String> =
        ["ue_id", "window_end_ms", "t_since_last_ho_ms", "serving_cell_id"].iter().map(|s| s.to_string()).collect();
    for k in 1..=N_NR_CELLS {
        cols.push(format!("c{k}_cell_id"));
        for f in CELL_FIELDS {
            cols.push(format!("c{k}_{f}"));
        }
    }
    cols.push("reward_throughput_bps".into());
    cols.push("action_target_cell_id".into());
    cols
}

pub fn write_records_csv<W: Write>(w: W, rows: &[DispatchedRecord]) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(record_columns())?;
    for row in rows {
        let r = &row.record;
        let mut out = vec![
            r.ue_id.to_string(),
            r.window_end_ms.to_string(),
            r.t_since_last_ho_ms.to_string(),
            r.serving_cell_id.to_string(),
        ];
        for c in &r.per_cell {
            out.push(c.cell_id.to_string());
            out.push(c.sinr_db.to_string());
            out.push(c.prb_util_pct.to_string());
            out.push(c.active_ues.to_string());
            out.push(c.tb_count.to_string());
            out.push(c.share_qpsk.to_string());
            out.push(c.share_16qam.to_string());
            out.push(c.share_64qam.to_string());
            out.push(c.ho_cost.to_string());
        }
        out.push(r.reward_throughput_bps.to_string());
        out.push(row.action_target_cell_id.to_string());
        wr.write_record(&out)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum RecordsCsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header")]
    Header,
    #[error("row {row}: bad value in column {col}")]
    Value { row: usize, col: usize },
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<DispatchedRecord>, RecordsCsvError> {
    let mut rd = csv::Reader::from_reader(r);
    if rd.headers()?.iter().ne(record_columns().iter().map(String::as_str)) {
        return Err(RecordsCsvError::Header);
    }
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let mut col = 0;
        let mut next = || {
            col += 1;
            rec.get(col - 1).unwrap_or("")
        };
        macro_rules! num {
            ($t:ty) => {{
                let s = next();
                s.parse::<$t>().map_err(|_| RecordsCsvError::Value { row, col: 0 })?
            }};
        }
        let ue_id = num!(u32);
        let window_end_ms = num!(u64);
        let t_since_last_ho_ms = num!(u64);
        let serving_cell_id = num!(u32);
        let mut per_cell = Vec::with_capacity(N_NR_CELLS);
        for _ in 0..N_NR_CELLS {
            per_cell.push(CellState {
                cell_id: num!(u32),
                sinr_db: num!(f64),
                prb_util_pct: num!(f64),
                active_ues: num!(u32),
                tb_count: num!(u32),
                share_qpsk: num!(f64),
                share_16qam: num!(f64),
                share_64qam: num!(f64),
                ho_cost: num!(f64),
            });
        }
        let reward_throughput_bps = num!(f64);
        let action_target_cell_id = num!(u32);
        out.push(DispatchedRecord {
            record: UeStateRecord {
                ue_id,
                window_end_ms,
                t_since_last_ho_ms,
                serving_cell_id,
                per_cell,
                reward_throughput_bps,
            },
            action_target_cell_id,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ric::fixtures::record;

    #[test]
    fn csv_round_trip() {
        let mut r = record(4, 300, 2, [1.5, -2.25, 3.0, 0.1, 7.0, 8.0, 1e-7]);
        r.per_cell[2].share_16qam = 1.0 / 3.0;
        let rows = vec![
            DispatchedRecord { record: r.clone(), action_target_cell_id: 2 },
            DispatchedRecord { record: r, action_target_cell_id: 5 },
        ];
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &rows).unwrap();
        let back = read_records_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let header = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
        assert!(header.starts_with("ue_id,window_end_ms,t_since_last_ho_ms,serving_cell_id,c1_cell_id,c1_sinr_db,"));
        assert!(header.ends_with(",c7_ho_cost,reward_throughput_bps,action_target_cell_id"));
        assert_eq!(header.split(',').count(), 4 + 7 * 9 + 2);
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(matches!(read_records_csv("a,b\n1,2\n".as_bytes()), Err(RecordsCsvError::Header)));
    }
}
