//! Handover policies: the RRM and SON baselines and the shared interface the
//! RL xApp implements.

mod son;

pub use son::{Son, SonParams, TttTracker};

use serde::{Deserialize, Serialize};

use crate::ric::UeStateRecord;
use crate::sim::{CellId, UeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionReason {
    Threshold,
    TttExpired,
    RlGreedy,
    NoOp,
}

impl DecisionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionReason::Threshold => "threshold",
            DecisionReason::TttExpired => "ttt_expired",
            DecisionReason::RlGreedy => "rl_greedy",
            DecisionReason::NoOp => "noop",
        }
    }
}

/// Target PSCell for one UE; `target_cell_id == serving` means no handover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub ue_id: UeId,
    pub target_cell_id: CellId,
    pub reason: DecisionReason,
}

impl PolicyDecision {
    pub fn noop(record: &UeStateRecord) -> Self {
        Self { ue_id: record.ue_id, target_cell_id: record.serving_cell_id, reason: DecisionReason::NoOp }
    }

    pub fn is_handover(&self, record: &UeStateRecord) -> bool {
        self.target_cell_id != record.serving_cell_id
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("malformed record for UE {ue_id}: {why}")]
    BadRecord { ue_id: UeId, why: String },
    #[error("{0}")]
    Other(String),
}

pub trait Policy: Send {
    fn name(&self) -> &str;
    fn decide(&mut self, record: &UeStateRecord) -> Result<PolicyDecision, PolicyError>;
}

/// Parsed `rrm | son1 | son2 | rl:<model-path>` selector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicySpec {
    Rrm,
    Son1,
    Son2,
    Rl(String),
}

impl std::str::FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rrm" => Ok(PolicySpec::Rrm),
            "son1" => Ok(PolicySpec::Son1),
            "son2" => Ok(PolicySpec::Son2),
            _ => match s.strip_prefix("rl:") {
                Some(path) if !path.is_empty() => Ok(PolicySpec::Rl(path.to_string())),
                _ => Err(format!("unknown policy '{s}', expected rrm, son1, son2 or rl:<model-path>")),
            },
        }
    }
}

impl std::fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicySpec::Rrm => write!(f, "rrm"),
            PolicySpec::Son1 => write!(f, "son1"),
            PolicySpec::Son2 => write!(f, "son2"),
            PolicySpec::Rl(p) => write!(f, "rl:{p}"),
        }
    }
}

pub(crate) fn check(record: &UeStateRecord) -> Result<(), PolicyError> {
    record.validate().map_err(|why| PolicyError::BadRecord { ue_id: record.ue_id, why })
}

/// Best neighbor by SINR, lowest cell id on ties.
pub(crate) fn best_neighbor(record: &UeStateRecord) -> Option<(CellId, f64)> {
    let mut best: Option<(CellId, f64)> = None;
    for c in &record.per_cell {
        if c.cell_id == record.serving_cell_id {
            continue;
        }
        if best.map_or(true, |(_, s)| c.sinr_db > s) {
            best = Some((c.cell_id, c.sinr_db));
        }
    }
    best
}

/// Hands over when the best neighbor beats the serving cell by strictly more
/// than `threshold_db`.
#[derive(Debug, Clone)]
pub struct Rrm {
    pub threshold_db: f64,
}

impl Default for Rrm {
    fn default() -> Self {
        Self { threshold_db: 3.0 }
    }
}

impl Policy for Rrm {
    fn name(&self) -> &str {
        "rrm"
    }

    fn decide(&mut self, record: &UeStateRecord) -> Result<PolicyDecision, PolicyError> {
        check(record)?;
        let serving = record.serving().expect("validated").sinr_db;
        match best_neighbor(record) {
            Some((cell, sinr)) if sinr > serving + self.threshold_db => {
                Ok(PolicyDecision { ue_id: record.ue_id, target_cell_id: cell, reason: DecisionReason::Threshold })
            }
            _ => Ok(PolicyDecision::noop(record)),
        }
    }
}
