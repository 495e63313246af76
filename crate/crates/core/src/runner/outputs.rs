use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{RunError, RunOutput, VERSION};
use crate::eval::{
    compute_metrics, read_rows_csv, write_metrics_csv, write_per_ue_csv, write_rows_csv, write_sinr_cdf_csv, RunId,
    RunLog, RunMetrics,
};
use crate::ric::{write_records_csv, DispatchedRecord};
use crate::sim::{CellWindowRow, Event, EventKind, SimConfig, UeWindowRow};

pub const MANIFEST: &str = "manifest.json";

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, RunError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Simulator-side files plus the metrics derived from them.
pub fn write_sim_outputs(dir: &Path, out: &RunOutput, id: &RunId) -> Result<RunMetrics, RunError> {
    std::fs::create_dir_all(dir)?;
    let w = &out.world;
    w.write_events_csv(create(dir, "events.csv")?)?;
    write_rows_csv(create(dir, "ue_windows.csv")?, &w.ue_log)?;
    write_rows_csv(create(dir, "cell_windows.csv")?, &w.cell_log)?;
    let m = compute_metrics(&RunLog::from_world(w))?;
    write_run_metrics(dir, id, &m)?;
    Ok(m)
}

pub fn write_run_metrics(dir: &Path, id: &RunId, m: &RunMetrics) -> Result<(), RunError> {
    write_metrics_csv(create(dir, "metrics.csv")?, &[(id.clone(), m.clone())])?;
    write_per_ue_csv(create(dir, "per_ue.csv")?, m)?;
    write_sinr_cdf_csv(create(dir, "sinr_cdf.csv")?, &m.sinr_samples_db)?;
    Ok(())
}

/// RIC-side files: dispatched records and the structured log.
pub fn write_ric_outputs(dir: &Path, records: &[DispatchedRecord], log: &[String]) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    write_records_csv(create(dir, "records.csv")?, records)?;
    let mut f = create(dir, "ric_log.jsonl")?;
    for line in log {
        writeln!(f, "{line}")?;
    }
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub policy: String,
    pub seed: u64,
    pub out_dir: String,
    pub config: serde_json::Value,
    /// Free-form run facts such as the E2 transcript digest.
    #[serde(default)]
    pub summary: serde_json::Value,
    /// sha256 of every other file in the output directory.
    #[serde(default)]
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, policy: &str, seed: u64, out_dir: &Path, config: serde_json::Value) -> Self {
        Self {
            version: VERSION.to_string(),
            command: command.to_string(),
            policy: policy.to_string(),
            seed,
            out_dir: out_dir.display().to_string(),
            config,
            summary: serde_json::Value::Null,
            files: BTreeMap::new(),
        }
    }
}

pub fn file_sha256(path: &Path) -> Result<String, RunError> {
    let mut h = Sha256::new();
    std::io::copy(&mut BufReader::new(File::open(path)?), &mut h)?;
    Ok(hex::encode(h.finalize()))
}

/// Checksums the directory's files and writes `manifest.json` beside them.
pub fn write_manifest(dir: &Path, mut m: RunManifest) -> Result<RunManifest, RunError> {
    m.files.clear();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == MANIFEST || !entry.file_type()?.is_file() {
            continue;
        }
        m.files.insert(name, file_sha256(&entry.path())?);
    }
    let mut f = create(dir, MANIFEST)?;
    serde_json::to_writer_pretty(&mut f, &m)?;
    writeln!(f)?;
    f.flush()?;
    Ok(m)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest, RunError> {
    let f = File::open(dir.join(MANIFEST))
        .map_err(|e| RunError::Config(format!("no manifest in {}: {e}", dir.display())))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

#[derive(Deserialize)]
struct EventRow {
    time_ms: u64,
    ue_id: u32,
    event_kind: String,
    detail: String,
}

/// Rebuilds the metric inputs of a finished run from its CSV logs.
pub fn load_run_log(dir: &Path, sim: &SimConfig) -> Result<RunLog, RunError> {
    let open = |name: &str| -> Result<BufReader<File>, RunError> {
        File::open(dir.join(name))
            .map(BufReader::new)
            .map_err(|e| RunError::Config(format!("cannot open {}: {e}", dir.join(name).display())))
    };
    let ue_rows: Vec<UeWindowRow> = read_rows_csv(open("ue_windows.csv")?)?;
    let cell_rows: Vec<CellWindowRow> = read_rows_csv(open("cell_windows.csv")?)?;
    let mut events = Vec::new();
    for row in csv::Reader::from_reader(open("events.csv")?).deserialize() {
        let r: EventRow = row?;
        let kind = match r.event_kind.as_str() {
            "attach" => EventKind::Attach,
            "handover" => EventKind::Handover,
            other => return Err(RunError::Config(format!("unknown event kind '{other}'"))),
        };
        events.push(Event { time_ms: r.time_ms, ue_id: r.ue_id, kind, detail: r.detail });
    }
    let end_ms = ue_rows.iter().map(|r| r.window_end_ms).max().unwrap_or(0);
    Ok(RunLog::from_parts(
        end_ms as f64 / 1000.0,
        ue_rows,
        cell_rows,
        &events,
        sim.nr_bandwidth_hz,
        sim.lte_bandwidth_hz,
    ))
}
