use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{objective, LossOutput, LossWeights};
use super::net::{Arch, QNet};
use super::rem::RemWeights;
use super::replay::{ReplayBuffer, Transition};
use super::RlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub arch: Arch,
    pub steps: u64,
    pub batch_size: usize,
    pub lr: f64,
    pub gamma: f64,
    pub target_update_period: u64,
    pub min_replay_history: usize,
    pub loss: LossWeights,
    pub seed: u64,
    /// Loss rows are averaged over this many steps.
    pub log_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            arch: Arch::default(),
            steps: 200_000,
            batch_size: 32,
            lr: 5e-5,
            gamma: 0.99,
            target_update_period: 8000,
            min_replay_history: 20_000,
            loss: LossWeights::default(),
            seed: 0,
            log_every: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub step: u64,
    pub td_loss: f64,
    pub cql_term: f64,
    pub total: f64,
}

pub fn write_loss_csv<W: Write>(w: W, rows: &[LossRow]) -> Result<(), RlError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["step", "td_loss", "cql_term", "total"])?;
    for r in rows {
        wr.write_record([r.step.to_string(), r.td_loss.to_string(), r.cql_term.to_string(), r.total.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

/// Online/target networks, optimizer and sampling state.
pub struct Trainer {
    pub cfg: TrainConfig,
    pub net: QNet,
    pub target: QNet,
    pub adam: Adam,
    pub rng: ChaCha8Rng,
    pub step: u64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let net = QNet::init(cfg.arch, &mut rng);
        Self::with_net(cfg, net, rng)
    }

    pub fn with_net(cfg: TrainConfig, net: QNet, rng: ChaCha8Rng) -> Self {
        let adam = Adam::new(net.params.len(), cfg.lr);
        Self { target: net.clone(), net, adam, rng, step: 0, cfg }
    }

    /// One update on `batch` with a freshly drawn mixture.
    pub fn step_on(&mut self, batch: &[&Transition]) -> Result<LossOutput, RlError> {
        let alpha = RemWeights::sample(self.cfg.arch.heads, &mut self.rng);
        let out = objective(&self.net, &self.target, batch, &alpha, self.cfg.gamma, self.cfg.loss)?;
        if !out.total.is_finite() {
            return Err(RlError::NonFiniteLoss { step: self.step + 1, td: out.td, cql: out.cql });
        }
        self.adam.step(&mut self.net.params, &out.grad)?;
        self.step += 1;
        if self.cfg.target_update_period > 0 && self.step % self.cfg.target_update_period == 0 {
            self.target.params.copy_from_slice(&self.net.params);
        }
        Ok(out)
    }

    /// Samples a batch from `buffer` and updates.
    pub fn step_sampled(&mut self, buffer: &ReplayBuffer) -> Result<LossOutput, RlError> {
        let idx: Vec<usize> = {
            use rand::Rng;
            (0..self.cfg.batch_size).map(|_| self.rng.gen_range(0..buffer.len())).collect()
        };
        let batch: Vec<&Transition> = idx.iter().map(|&i| &buffer.items()[i]).collect();
        self.step_on(&batch)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub steps: u64,
    pub rows: Vec<LossRow>,
}

/// Offline training over a fixed dataset.
pub fn train(dataset: Vec<Transition>, cfg: &TrainConfig) -> Result<(QNet, TrainReport), RlError> {
    if dataset.is_empty() {
        return Err(RlError::Dataset("empty dataset".into()));
    }
    if dataset.len() < cfg.min_replay_history {
        return Err(RlError::InsufficientData { have: dataset.len(), need: cfg.min_replay_history });
    }
    let buffer = ReplayBuffer::from_dataset(dataset);
    let mut t = Trainer::new(cfg.clone());
    let mut rows = Vec::new();
    let (mut td, mut cql, mut total, mut k) = (0.0, 0.0, 0.0, 0u64);
    while t.step < cfg.steps {
        let out = t.step_sampled(&buffer)?;
        td += out.td;
        cql += out.cql;
        total += out.total;
        k += 1;
        if k == cfg.log_every.max(1) || t.step == cfg.steps {
            let n = k as f64;
            rows.push(LossRow { step: t.step, td_loss: td / n, cql_term: cql / n, total: total / n });
            (td, cql, total, k) = (0.0, 0.0, 0.0, 0);
        }
    }
    Ok((t.net, TrainReport { steps: t.step, rows }))
}
