//! Wires the simulator, the E2-lite links and the RIC into complete runs, and
//! writes their outputs.

mod agent;
mod collect;
mod compare;
mod embedded;
mod outputs;
mod split;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use agent::SimAgent;
pub use collect::{
    collect, expand_runs, read_dataset, train_dataset, write_dataset, CollectRun, Dataset, DatasetManifest, RunProvenance, DATASET_BIN,
    DATASET_CSV, DATASET_JSON,
};
pub use compare::{compare_runs, write_compare_csv, PolicySummary};
pub use embedded::run_embedded;
pub use outputs::{
    file_sha256, load_run_log, read_manifest, write_manifest, write_ric_outputs, write_run_metrics, write_sim_outputs,
    RunManifest, MANIFEST,
};
pub use split::{run_remote, RicServer};

use crate::e2lite::E2Error;
use crate::policies::{DecisionReason, Policy, PolicyDecision, PolicyError, PolicySpec, Rrm, Son};
use crate::ric::{DispatchedRecord, EtlParams, RicConfig, RicError, RicService, RicStats, UeStateRecord};
use crate::rl::{Model, RewardParams, RlError, RlPolicy};
use crate::sim::{SimConfig, SimError, Violation, World};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("sim: {0}")]
    Sim(#[from] SimError),
    #[error("e2: {0}")]
    E2(#[from] E2Error),
    #[error("ric: {0}")]
    Ric(#[from] RicError),
    #[error("rl: {0}")]
    Rl(#[from] RlError),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("eval: {0}")]
    Eval(#[from] crate::eval::EvalError),
}

/// RIC-side knobs of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RicParams {
    /// Staleness bound for filling missing KPMs.
    pub epsilon_ms: u64,
    /// Handover cost `K0 e^{-δ windows}`.
    pub k0: f64,
    pub delta: f64,
}

impl Default for RicParams {
    fn default() -> Self {
        let e = EtlParams::default();
        Self { epsilon_ms: e.epsilon_ms, k0: e.k0, delta: e.delta }
    }
}

const SECTIONS: [&str; 3] = ["sim", "ric", "reward"];

/// Full experiment description: `{"sim": {...}, "ric": {...}, "reward": {...}}`.
/// Every section is optional and overlays its defaults. A flat object without
/// sections is read as the `sim` section alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub ric: RicParams,
    pub reward: RewardParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_sim(SimConfig::default())
    }
}

impl ExperimentConfig {
    pub fn from_sim(sim: SimConfig) -> Self {
        let ric = RicParams::default();
        let reward = RewardParams {
            k0: ric.k0,
            delta: ric.delta,
            report_period_ms: sim.report_period_ms as f64,
            ..RewardParams::default()
        };
        Self { sim, ric, reward }
    }

    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let serde_json::Value::Object(mut obj) = v else {
            return Err(RunError::Config("experiment config must be a JSON object".into()));
        };
        // A flat object is a bare simulator config.
        if obj.keys().any(|k| !SECTIONS.contains(&k.as_str())) && !obj.keys().any(|k| SECTIONS.contains(&k.as_str())) {
            let cfg = Self::from_sim(SimConfig::from_json(text)?);
            cfg.validate()?;
            return Ok(cfg);
        }
        let sim = match obj.remove("sim") {
            Some(s) => SimConfig::from_json(&s.to_string())?,
            None => SimConfig::default(),
        };
        let mut cfg = Self::from_sim(sim);
        if let Some(r) = obj.remove("ric") {
            cfg.ric = serde_json::from_value(r)?;
            cfg.reward.k0 = cfg.ric.k0;
            cfg.reward.delta = cfg.ric.delta;
        }
        if let Some(r) = obj.remove("reward") {
            let mut base = serde_json::to_value(cfg.reward)?;
            let serde_json::Value::Object(over) = r else {
                return Err(RunError::Config("reward must be an object".into()));
            };
            for (k, v) in over {
                if base.get(&k).is_none() {
                    return Err(RunError::Config(format!("unknown reward field '{k}'")));
                }
                base[k] = v;
            }
            cfg.reward = serde_json::from_value(base)?;
        }
        if let Some(k) = obj.keys().next() {
            return Err(RunError::Config(format!("unknown section '{k}'")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), RunError> {
        self.sim.validate()?;
        if self.reward.report_period_ms != self.sim.report_period_ms as f64 {
            return Err(RunError::Config("reward.report_period_ms must match sim.report_period_ms".into()));
        }
        if self.ric.epsilon_ms < self.sim.report_period_ms {
            return Err(RunError::Config("ric.epsilon_ms must cover at least one report period".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.sim.seed = seed;
        c
    }

    pub fn etl_params(&self) -> EtlParams {
        EtlParams {
            epsilon_ms: self.ric.epsilon_ms,
            report_period_ms: self.sim.report_period_ms,
            k0: self.ric.k0,
            delta: self.ric.delta,
        }
    }

    pub fn ric_config(&self, world: &World) -> RicConfig {
        RicConfig::new(world.topology.nr_cell_ids(), world.topology.lte_cell_id(), self.etl_params())
    }
}

/// ε-exploration around another policy, used to widen dataset coverage.
/// With probability `epsilon` the target is drawn uniformly from the NR cells.
pub struct Explore {
    inner: Box<dyn Policy>,
    epsilon: f64,
    rng: ChaCha8Rng,
    name: String,
}

impl Explore {
    pub fn new(inner: Box<dyn Policy>, epsilon: f64, seed: u64) -> Self {
        let name = format!("{}+eps{epsilon}", inner.name());
        Self { inner, epsilon, rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e4e1), name }
    }
}

impl Policy for Explore {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&mut self, record: &UeStateRecord) -> Result<PolicyDecision, PolicyError> {
        // The inner policy always sees the record so its timers stay current.
        let base = self.inner.decide(record)?;
        if self.epsilon <= 0.0 || self.rng.gen::<f64>() >= self.epsilon {
            return Ok(base);
        }
        let k = self.rng.gen_range(0..record.per_cell.len());
        let target = record.per_cell[k].cell_id;
        if target == record.serving_cell_id {
            return Ok(PolicyDecision::noop(record));
        }
        Ok(PolicyDecision { ue_id: record.ue_id, target_cell_id: target, reason: DecisionReason::Threshold })
    }
}

/// Instantiates a policy. RL models are loaded here, so a bad path fails
/// before any output is written.
pub fn build_policy(spec: &PolicySpec) -> Result<Box<dyn Policy>, RunError> {
    Ok(match spec {
        PolicySpec::Rrm => Box::new(Rrm::default()),
        PolicySpec::Son1 => Box::new(Son::son1()),
        PolicySpec::Son2 => Box::new(Son::son2()),
        PolicySpec::Rl(path) => {
            let model = Model::load(std::path::Path::new(path))
                .map_err(|e| RunError::Config(format!("cannot load model '{path}': {e}")))?;
            Box::new(RlPolicy::new(model))
        }
    })
}

/// Everything a finished run leaves behind.
pub struct RunOutput {
    pub world: World,
    pub violations: Vec<Violation>,
    pub transcript: String,
    pub records: Vec<DispatchedRecord>,
    pub ric_log: Vec<String>,
    pub ric_stats: RicStats,
}

impl RunOutput {
    pub(crate) fn new(agent: SimAgent, ric: Option<RicService>) -> Self {
        let transcript = agent.transcript_digest();
        let (records, ric_log, ric_stats) = match ric {
            Some(mut r) => (r.take_records(), r.log_lines().to_vec(), r.stats().clone()),
            None => (Vec::new(), Vec::new(), RicStats::default()),
        };
        Self { violations: agent.violations, world: agent.world, transcript, records, ric_log, ric_stats }
    }
}

/// Default wall-clock base for E2 timestamps. Fixed so replays are byte-identical.
pub const BASE_UNIX_MS: u64 = 1_700_000_000_000;

/// One embedded run of `policy` on a freshly dropped world.
pub fn run_experiment(cfg: &ExperimentConfig, policy: Box<dyn Policy>) -> Result<RunOutput, RunError> {
    let world = World::new(cfg.sim.clone())?;
    run_world(cfg, world, policy)
}

/// One embedded run on a prepared world.
pub fn run_world(cfg: &ExperimentConfig, world: World, policy: Box<dyn Policy>) -> Result<RunOutput, RunError> {
    let ric = RicService::new(cfg.ric_config(&world), policy);
    run_embedded(SimAgent::new(world, BASE_UNIX_MS), ric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> ExperimentConfig {
        ExperimentConfig::from_json(r#"{"sim": {"n_ues": 6, "sim_duration_ms": 2000, "seed": 4}}"#).unwrap()
    }

    #[test]
    fn config_sections() {
        let c = short();
        assert_eq!(c.sim.n_ues, 6);
        assert_eq!(c.ric, RicParams::default());
        let c = ExperimentConfig::from_json(r#"{"ric": {"epsilon_ms": 500, "k0": 2.0}}"#).unwrap();
        assert_eq!(c.ric.epsilon_ms, 500);
        assert_eq!(c.reward.k0, 2.0);
        assert!(ExperimentConfig::from_json(r#"{"simm": {}}"#).is_err());
        let flat = ExperimentConfig::from_json(r#"{"n_ues": 9, "band": "CBand3500"}"#).unwrap();
        assert_eq!(flat.sim.isd_m, 1000.0);
        assert_eq!(ExperimentConfig::from_json(r#"{"n_ues": 9}"#).unwrap().sim.n_ues, 9);
        assert!(ExperimentConfig::from_json(r#"{"sim": {}, "n_ues": 9}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"ric": {"eps": 1}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"reward": {"betta": 1}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"ric": {"epsilon_ms": 10}}"#).is_err());
    }

    #[test]
    fn embedded_run_dispatches_every_window() {
        let c = short();
        let out = run_experiment(&c, Box::new(Son::son1())).unwrap();
        assert!(out.violations.is_empty(), "{:?}", out.violations);
        assert_eq!(out.ric_stats.windows, 20);
        assert_eq!(out.records.len(), 20 * 6);
        assert_eq!(out.ric_stats.controls, out.world.ues.iter().map(|u| u.ho_count as u64).sum::<u64>());
    }

    #[test]
    fn embedded_replay_is_identical() {
        let c = short();
        let a = run_experiment(&c, Box::new(Rrm::default())).unwrap();
        let b = run_experiment(&c, Box::new(Rrm::default())).unwrap();
        assert_eq!(a.transcript, b.transcript);
        assert_eq!(a.world.fingerprint(), b.world.fingerprint());
        assert_eq!(a.ric_log, b.ric_log);
    }

    #[test]
    fn explore_produces_handovers_deterministically() {
        let c = short();
        let run = |seed| {
            let p = Explore::new(Box::new(Son::son1()), 0.3, seed);
            run_experiment(&c, Box::new(p)).unwrap()
        };
        let (a, b) = (run(1), run(1));
        assert_eq!(a.transcript, b.transcript);
        assert!(a.ric_stats.controls > 0);
        assert_ne!(a.transcript, run(2).transcript);
    }

    #[test]
    fn missing_model_is_config_error() {
        let err = build_policy(&PolicySpec::Rl("/nonexistent/model.tsq".into())).err().unwrap();
        assert!(err.to_string().contains("cannot load model"));
    }
}
