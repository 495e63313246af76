use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_policy, run_experiment, Explore, ExperimentConfig, RunError, VERSION};
use crate::policies::{Policy, PolicySpec};
use crate::rl::{
    build_transitions, read_transitions_bin, train, write_transitions_bin, write_transitions_csv, Model, ModelMeta,
    NormManifest, RewardParams, TrainConfig, TrainReport, Transition, FEATURES_PER_CELL,
};

/// One simulated run feeding a dataset.
#[derive(Debug, Clone)]
pub struct CollectRun {
    pub label: String,
    pub config: ExperimentConfig,
    pub policy: PolicySpec,
    pub seed: u64,
    pub explore: f64,
}

/// Every combination of configs × seeds × policies, in that nesting order.
pub fn expand_runs(
    configs: &[(String, ExperimentConfig)],
    seeds: &[u64],
    policies: &[PolicySpec],
    explore: f64,
) -> Vec<CollectRun> {
    let mut runs = Vec::new();
    for (label, cfg) in configs {
        for &seed in seeds {
            for p in policies {
                runs.push(CollectRun {
                    label: label.clone(),
                    config: cfg.with_seed(seed),
                    policy: p.clone(),
                    seed,
                    explore,
                });
            }
        }
    }
    runs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub label: String,
    pub policy: String,
    pub seed: u64,
    pub explore: f64,
    pub n_ues: usize,
    pub records: usize,
    /// Half-open row range in the dataset.
    pub rows: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: String,
    pub n_nr_cells: usize,
    pub features_per_cell: usize,
    pub state_dim: usize,
    pub rows: usize,
    pub norms: NormManifest,
    pub reward: RewardParams,
    pub runs: Vec<RunProvenance>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub transitions: Vec<Transition>,
}

fn run_one(run: &CollectRun, norms: &NormManifest) -> Result<(usize, Vec<Transition>), RunError> {
    let mut policy: Box<dyn Policy> = build_policy(&run.policy)?;
    if run.explore > 0.0 {
        policy = Box::new(Explore::new(policy, run.explore, run.seed));
    }
    let out = run_experiment(&run.config, policy)?;
    if !out.violations.is_empty() {
        return Err(RunError::Protocol(format!("{} invariant violations in run {}", out.violations.len(), run.label)));
    }
    let rows = build_transitions(&out.records, norms, &run.config.reward)?;
    Ok((out.records.len(), rows))
}

/// Runs every spec (up to `jobs` at a time) and concatenates their
/// transitions in spec order, so the result does not depend on `jobs`.
pub fn collect(runs: &[CollectRun], norms: &NormManifest, jobs: usize) -> Result<Dataset, RunError> {
    let first = runs.first().ok_or_else(|| RunError::Config("collect needs at least one run".into()))?;
    let layout = first.config.sim.n_nr_cells;
    let reward = first.config.reward;
    for r in runs {
        if r.config.sim.n_nr_cells != layout {
            return Err(RunError::Config(format!(
                "mixed feature layouts: {} NR cells in '{}' vs {layout}",
                r.config.sim.n_nr_cells, r.label
            )));
        }
        if r.config.reward != reward {
            return Err(RunError::Config(format!("run '{}' uses different reward parameters", r.label)));
        }
        if !(0.0..=1.0).contains(&r.explore) {
            return Err(RunError::Config(format!("explore must be in [0, 1], got {}", r.explore)));
        }
    }
    // Fail on unloadable models before spending time simulating.
    for r in runs {
        build_policy(&r.policy)?;
    }

    let jobs = jobs.clamp(1, runs.len());
    let mut results: Vec<Option<Result<(usize, Vec<Transition>), RunError>>> = (0..runs.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let chunks: Vec<_> = results.chunks_mut(runs.len().div_ceil(jobs)).enumerate().collect();
        let size = runs.len().div_ceil(jobs);
        for (c, slots) in chunks {
            s.spawn(move || {
                for (k, slot) in slots.iter_mut().enumerate() {
                    let run = &runs[c * size + k];
                    log::info!("collect: {} {} seed {}", run.label, run.policy, run.seed);
                    *slot = Some(run_one(run, norms));
                }
            });
        }
    });

    let mut transitions = Vec::new();
    let mut prov = Vec::new();
    for (run, res) in runs.iter().zip(results) {
        let (records, rows) = res.expect("every slot filled")?;
        let start = transitions.len();
        transitions.extend(rows);
        prov.push(RunProvenance {
            label: run.label.clone(),
            policy: run.policy.to_string(),
            seed: run.seed,
            explore: run.explore,
            n_ues: run.config.sim.n_ues,
            records,
            rows: [start, transitions.len()],
        });
    }
    let manifest = DatasetManifest {
        version: VERSION.to_string(),
        n_nr_cells: layout,
        features_per_cell: FEATURES_PER_CELL,
        state_dim: 1 + layout * FEATURES_PER_CELL,
        rows: transitions.len(),
        norms: *norms,
        reward,
        runs: prov,
    };
    Ok(Dataset { manifest, transitions })
}

pub const DATASET_BIN: &str = "transitions.bin";
pub const DATASET_CSV: &str = "transitions.csv";
pub const DATASET_JSON: &str = "dataset.json";

/// Writes `transitions.bin`, `transitions.csv` and `dataset.json` into `dir`.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join(DATASET_BIN))?);
    write_transitions_bin(&mut w, &ds.transitions)?;
    w.flush()?;
    write_transitions_csv(BufWriter::new(File::create(dir.join(DATASET_CSV))?), &ds.transitions)?;
    let mut w = BufWriter::new(File::create(dir.join(DATASET_JSON))?);
    serde_json::to_writer_pretty(&mut w, &ds.manifest)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<Dataset, RunError> {
    let open = |name: &str| {
        File::open(dir.join(name))
            .map(BufReader::new)
            .map_err(|e| RunError::Config(format!("cannot open {}: {e}", dir.join(name).display())))
    };
    let manifest: DatasetManifest = serde_json::from_reader(open(DATASET_JSON)?)?;
    let transitions = read_transitions_bin(open(DATASET_BIN)?, manifest.state_dim)?;
    if transitions.len() != manifest.rows {
        return Err(RunError::Config(format!(
            "dataset.json declares {} rows, transitions.bin holds {}",
            manifest.rows,
            transitions.len()
        )));
    }
    Ok(Dataset { manifest, transitions })
}

/// Trains on a dataset and packages the network with its normalization.
pub fn train_dataset(ds: &Dataset, cfg: &TrainConfig) -> Result<(Model, TrainReport), RunError> {
    let m = &ds.manifest;
    if cfg.arch.input_dim() != m.state_dim || cfg.arch.actions != m.n_nr_cells {
        return Err(RunError::Config(format!(
            "network expects {} inputs and {} actions, dataset has {} and {}",
            cfg.arch.input_dim(),
            cfg.arch.actions,
            m.state_dim,
            m.n_nr_cells
        )));
    }
    let (net, report) = train(ds.transitions.clone(), cfg)?;
    let meta = ModelMeta { norms: m.norms, train: cfg.clone(), steps_trained: report.steps, dataset_rows: m.rows };
    Ok((Model { meta, net }, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n_ues: usize) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(r#"{{"sim": {{"n_ues": {n_ues}, "sim_duration_ms": 1000}}}}"#)).unwrap()
    }

    #[test]
    fn rows_are_records_minus_one_per_ue_and_additive() {
        let norms = NormManifest::default();
        let one = expand_runs(&[("a".into(), cfg(4))], &[1], &[PolicySpec::Son1], 0.0);
        let ds = collect(&one, &norms, 1).unwrap();
        assert_eq!(ds.manifest.runs[0].records, 40);
        assert_eq!(ds.transitions.len(), 40 - 4);

        let two = expand_runs(&[("a".into(), cfg(4))], &[1, 2], &[PolicySpec::Son1], 0.0);
        let both = collect(&two, &norms, 2).unwrap();
        assert_eq!(both.transitions.len(), 2 * 36);
        assert_eq!(both.manifest.runs[1].rows, [36, 72]);
        assert_eq!(&both.transitions[..36], &ds.transitions[..]);
        assert_eq!(collect(&two, &norms, 1).unwrap().transitions, both.transitions);
    }

    #[test]
    fn rejects_empty_and_mixed_layouts() {
        let norms = NormManifest::default();
        assert!(collect(&[], &norms, 1).is_err());
        let mut other = cfg(4);
        other.sim.n_nr_cells = 3;
        let runs = expand_runs(&[("a".into(), cfg(4)), ("b".into(), other)], &[1], &[PolicySpec::Rrm], 0.0);
        let err = collect(&runs, &norms, 1).unwrap_err().to_string();
        assert!(err.contains("mixed feature layouts"), "{err}");
    }

    #[test]
    fn train_checks_layout() {
        let runs = expand_runs(&[("a".into(), cfg(3))], &[5], &[PolicySpec::Son1], 0.3);
        let ds = collect(&runs, &NormManifest::default(), 1).unwrap();
        let small = crate::rl::Arch { filters: 4, hidden1: 8, hidden2: 4, heads: 2, ..Default::default() };
        let tc = TrainConfig { arch: small, steps: 20, min_replay_history: 1, log_every: 5, ..Default::default() };
        let (model, rep) = train_dataset(&ds, &tc).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert_eq!(model.meta.dataset_rows, ds.transitions.len());
        let wrong = TrainConfig { arch: crate::rl::Arch { n_cells: 5, ..small }, ..tc };
        assert!(train_dataset(&ds, &wrong).is_err());
    }

    #[test]
    fn dataset_files_round_trip() {
        let norms = NormManifest::default();
        let runs = expand_runs(&[("a".into(), cfg(3))], &[5], &[PolicySpec::Rrm], 0.2);
        let ds = collect(&runs, &norms, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &ds).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.manifest, ds.manifest);
        assert_eq!(back.transitions.len(), ds.transitions.len());
        // The binary format stores f32.
        for (a, b) in back.transitions.iter().zip(&ds.transitions) {
            assert_eq!(a.action, b.action);
            assert!((a.reward - b.reward).abs() <= 1e-6 * b.reward.abs().max(1.0));
        }
    }
}
