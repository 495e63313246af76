//! `ts-sandbox`: simulate, collect, train, serve, evaluate and compare.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ts_core::e2lite::EndpointBinding;
use ts_core::eval::{compute_metrics, RunId};
use ts_core::policies::PolicySpec;
use ts_core::ric::RicService;
use ts_core::rl::{write_loss_csv, NormManifest, TrainConfig};
use ts_core::runner::{
    build_policy, collect, compare_runs, expand_runs, load_run_log, read_dataset, read_manifest, run_embedded,
    run_remote, train_dataset, write_compare_csv, write_dataset, write_manifest, write_ric_outputs,
    write_run_metrics, write_sim_outputs, Explore, ExperimentConfig, RicServer, RunManifest, SimAgent,
    BASE_UNIX_MS,
};
use ts_core::sim::World;

#[derive(Parser)]
#[command(name = "ts-sandbox", version, about = "Traffic-steering sandbox: EN-DC simulator, E2-lite RIC and offline RL")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation under a policy and write its logs and metrics.
    Simulate(SimulateArgs),
    /// Run many simulations and build an offline transition dataset.
    Collect(CollectArgs),
    /// Train a Q-network on a collected dataset.
    Train(TrainArgs),
    /// Host the RIC for a simulator started with `simulate --remote`.
    Serve(ServeArgs),
    /// Recompute metrics from a finished run's logs.
    Evaluate(EvaluateArgs),
    /// Aggregate metrics across runs, per policy.
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's UE count.
    #[arg(long)]
    ues: Option<usize>,
    /// Overrides the simulated duration.
    #[arg(long)]
    duration_ms: Option<u64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(n) = self.ues {
            cfg.sim.n_ues = n;
        }
        if let Some(d) = self.duration_ms {
            cfg.sim.sim_duration_ms = d;
        }
        cfg.sim.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// rrm | son1 | son2 | rl:<model-path>
    #[arg(long, default_value = "son1")]
    policy: PolicySpec,
    /// Probability of replacing a decision with a uniformly random cell.
    #[arg(long, default_value_t = 0.0)]
    explore: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Connect to a RIC started with `serve` at HOST:BASE_PORT instead of
    /// running one in-process.
    #[arg(long)]
    remote: Option<String>,
    /// Re-run the config, seed and policy recorded in a manifest.
    #[arg(long, conflicts_with_all = ["config", "ues", "duration_ms"])]
    from_manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "son1")]
    policy: PolicySpec,
    #[arg(long, default_value_t = 0.0)]
    explore: f64,
    #[arg(long, default_value = "127.0.0.1")]
    listen: String,
    /// Node n listens on BASE_PORT + n.
    #[arg(long, default_value_t = 36420)]
    base_port: u16,
    #[arg(long, default_value = "out-ric")]
    out: PathBuf,
}

#[derive(Args)]
struct CollectArgs {
    /// One or more experiment configs; defaults to the built-in scenario.
    #[arg(long)]
    config: Vec<PathBuf>,
    #[arg(long)]
    ues: Option<usize>,
    #[arg(long)]
    duration_ms: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "son1")]
    policies: Vec<PolicySpec>,
    #[arg(long, default_value_t = 0.0)]
    explore: f64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "dataset")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory written by `collect`.
    #[arg(long)]
    dataset: PathBuf,
    /// Training config (JSON); unspecified fields keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "model")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Run directory written by `simulate`.
    #[arg(long)]
    run: PathBuf,
    /// Where to write the recomputed metrics; defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Run directories to aggregate.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[arg(long, default_value = "compare")]
    out: PathBuf,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TS_SANDBOX_LOG", "info")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Simulate(a) => simulate(a),
        Cmd::Collect(a) => cmd_collect(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Serve(a) => serve(a),
        Cmd::Evaluate(a) => evaluate(a),
        Cmd::Compare(a) => compare(a),
    };
    if let Err(e) = res {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn policy_with_explore(spec: &PolicySpec, explore: f64, seed: u64) -> Result<Box<dyn ts_core::policies::Policy>> {
    if !(0.0..=1.0).contains(&explore) {
        bail!("--explore must be in [0, 1]");
    }
    let p = build_policy(spec)?;
    Ok(if explore > 0.0 { Box::new(Explore::new(p, explore, seed)) } else { p })
}

fn policy_label(spec: &PolicySpec, explore: f64) -> String {
    if explore > 0.0 {
        format!("{spec}+eps{explore}")
    } else {
        spec.to_string()
    }
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    let v = serde_json::to_value(cfg)?;
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&v)? + "\n")?;
    Ok(v)
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn parse_remote(s: &str) -> Result<(String, u16)> {
    let (host, port) = s.rsplit_once(':').context("--remote expects HOST:BASE_PORT")?;
    Ok((host.to_string(), port.parse().context("bad base port")?))
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let (cfg, seed, spec, explore) = match &a.from_manifest {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let m: RunManifest = serde_json::from_str(&text)?;
            let cfg = ExperimentConfig::from_json(&m.config.to_string())?;
            let (spec, explore) = match m.policy.split_once("+eps") {
                Some((p, e)) => (p.parse().map_err(anyhow::Error::msg)?, e.parse()?),
                None => (m.policy.parse().map_err(anyhow::Error::msg)?, 0.0),
            };
            (cfg, m.seed, spec, explore)
        }
        None => (a.scenario.load()?.with_seed(a.seed), a.seed, a.policy.clone(), a.explore),
    };
    let label = policy_label(&spec, explore);
    let world = World::new(cfg.sim.clone())?;
    let agent = SimAgent::new(world, BASE_UNIX_MS);

    let out = match &a.remote {
        None => {
            let policy = policy_with_explore(&spec, explore, seed)?;
            let ric = RicService::new(cfg.ric_config(&agent.world), policy);
            prepare_out(&a.out)?;
            run_embedded(agent, ric)?
        }
        Some(remote) => {
            let (host, base) = parse_remote(remote)?;
            let bindings = EndpointBinding::for_nodes(&host, base, agent.nodes());
            prepare_out(&a.out)?;
            run_remote(agent, &bindings, Duration::from_secs(30))?
        }
    };
    let id = RunId { run_id: format!("{label}-seed{seed}"), policy: label.clone(), seed };
    let metrics = write_sim_outputs(&a.out, &out, &id)?;
    if a.remote.is_none() {
        write_ric_outputs(&a.out, &out.records, &out.ric_log)?;
    }
    let config = write_config(&a.out, &cfg)?;
    let mut m = RunManifest::new("simulate", &label, seed, &a.out, config);
    m.summary = serde_json::json!({
        "mode": if a.remote.is_some() { "remote" } else { "embedded" },
        "e2_transcript_sha256": out.transcript,
        "world_fingerprint": out.world.fingerprint(),
        "invariant_violations": out.violations.len(),
        "dispatched_records": out.records.len(),
        "handovers": metrics.total_handovers,
        "mean_thpt_bps": metrics.mean_throughput_bps,
    });
    write_manifest(&a.out, m)?;
    for v in out.violations.iter().take(10) {
        log::error!("invariant violation: {v:?}");
    }
    log::info!(
        "{label} seed {seed}: mean {:.0} bps, p10 {:.0}, p95 {:.0}, {} handovers -> {}",
        metrics.mean_throughput_bps,
        metrics.p10_throughput_bps,
        metrics.p95_throughput_bps,
        metrics.total_handovers,
        a.out.display()
    );
    if !out.violations.is_empty() {
        bail!("{} invariant violations", out.violations.len());
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let cfg = a.scenario.load()?.with_seed(a.seed);
    let label = policy_label(&a.policy, a.explore);
    let policy = policy_with_explore(&a.policy, a.explore, a.seed)?;
    // The node set depends only on the topology.
    let world = World::new(cfg.sim.clone())?;
    let ric = RicService::new(cfg.ric_config(&world), policy);
    let mut nodes = world.topology.nr_cell_ids();
    nodes.push(world.topology.lte_cell_id());
    nodes.sort_unstable();
    let server = RicServer::bind(&a.listen, a.base_port, &nodes)?;
    for b in server.bindings() {
        log::info!("node {} -> {}", b.node_id, b.socket_addr());
    }
    prepare_out(&a.out)?;
    let ric = server.serve(ric)?;
    write_ric_outputs(&a.out, ric.records(), ric.log_lines())?;
    let config = write_config(&a.out, &cfg)?;
    let s = ric.stats();
    let mut m = RunManifest::new("serve", &label, a.seed, &a.out, config);
    m.summary = serde_json::json!({
        "windows": s.windows,
        "dispatches": s.dispatches,
        "controls": s.controls,
        "acks": s.acks,
        "drops": s.drops,
        "policy_errors": s.policy_errors,
        "max_decision_latency_us": ric.max_latency_us(),
    });
    write_manifest(&a.out, m)?;
    log::info!("served {} windows, {} controls", s.windows, s.controls);
    Ok(())
}

fn cmd_collect(a: CollectArgs) -> Result<()> {
    let scenario = |config: Option<PathBuf>| ScenarioArgs { config, ues: a.ues, duration_ms: a.duration_ms };
    let mut configs = Vec::new();
    if a.config.is_empty() {
        configs.push(("default".to_string(), scenario(None).load()?));
    }
    for p in &a.config {
        let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        configs.push((label, scenario(Some(p.clone())).load()?));
    }
    let runs = expand_runs(&configs, &a.seeds, &a.policies, a.explore);
    let ds = collect(&runs, &NormManifest::default(), a.jobs)?;
    prepare_out(&a.out)?;
    write_dataset(&a.out, &ds)?;
    let runs_json = serde_json::to_value(&configs.iter().map(|(l, c)| (l, c)).collect::<Vec<_>>())?;
    let policies = a.policies.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
    let mut m = RunManifest::new("collect", &policy_label_list(&policies, a.explore), a.seeds[0], &a.out, runs_json);
    m.summary = serde_json::json!({ "seeds": a.seeds, "rows": ds.manifest.rows, "runs": ds.manifest.runs.len() });
    write_manifest(&a.out, m)?;
    log::info!("{} transitions from {} runs -> {}", ds.manifest.rows, ds.manifest.runs.len(), a.out.display());
    Ok(())
}

fn policy_label_list(policies: &str, explore: f64) -> String {
    if explore > 0.0 {
        format!("{policies}+eps{explore}")
    } else {
        policies.to_string()
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?)
            .with_context(|| format!("bad training config {}", p.display()))?,
        None => TrainConfig::default(),
    };
    if let Some(s) = a.steps {
        cfg.steps = s;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let ds = read_dataset(&a.dataset)?;
    let (model, report) = train_dataset(&ds, &cfg)?;
    prepare_out(&a.out)?;
    model.save(&a.out.join("model.tsq"))?;
    write_loss_csv(std::fs::File::create(a.out.join("loss.csv"))?, &report.rows)?;
    let mut m = RunManifest::new("train", "rl", cfg.seed, &a.out, serde_json::to_value(&cfg)?);
    m.summary = serde_json::json!({
        "dataset": a.dataset.display().to_string(),
        "dataset_rows": ds.manifest.rows,
        "steps": report.steps,
        "final_total_loss": report.rows.last().map(|r| r.total),
    });
    write_manifest(&a.out, m)?;
    log::info!("trained {} steps on {} rows -> {}", report.steps, ds.manifest.rows, a.out.display());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let man = read_manifest(&a.run)?;
    let cfg = ExperimentConfig::from_json(&man.config.to_string())?;
    let metrics = compute_metrics(&load_run_log(&a.run, &cfg.sim)?)?;
    let out = a.out.unwrap_or_else(|| a.run.clone());
    prepare_out(&out)?;
    let id = RunId { run_id: format!("{}-seed{}", man.policy, man.seed), policy: man.policy.clone(), seed: man.seed };
    write_run_metrics(&out, &id, &metrics)?;
    if out != a.run {
        write_config(&out, &cfg)?;
        let mut m = RunManifest::new("evaluate", &man.policy, man.seed, &out, man.config.clone());
        m.summary = serde_json::json!({ "source": a.run.display().to_string() });
        write_manifest(&out, m)?;
    } else {
        let mut m = man;
        m.summary["evaluated"] = serde_json::Value::Bool(true);
        write_manifest(&out, m)?;
    }
    log::info!("{}: mean {:.0} bps over {} UEs", a.run.display(), metrics.mean_throughput_bps, metrics.per_ue.len());
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let rows = compare_runs(&a.runs)?;
    prepare_out(&a.out)?;
    write_compare_csv(std::fs::File::create(a.out.join("compare.csv"))?, &rows)?;
    let runs: Vec<String> = a.runs.iter().map(|p| p.display().to_string()).collect();
    let mut m = RunManifest::new("compare", "-", 0, &a.out, serde_json::json!({ "runs": runs }));
    m.summary = serde_json::json!({ "policies": rows.iter().map(|r| &r.policy).collect::<Vec<_>>() });
    write_manifest(&a.out, m)?;
    for r in &rows {
        let thpt = r.stats.iter().find(|s| s.0 == "mean_thpt_bps").map(|s| s.1).unwrap_or(f64::NAN);
        println!("{:<16} runs={:<3} mean_thpt_bps={:.0}", r.policy, r.runs, thpt);
    }
    Ok(())
}
