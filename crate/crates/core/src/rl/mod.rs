//! Offline traffic-steering learner: state encoding, the multi-head Q-network,
//! REM mixing, TD and conservative losses, Adam, replay and inference.

mod adam;
mod agent;
mod features;
mod loss;
mod model;
mod net;
mod rem;
mod replay;
mod reward;
mod train;

pub use adam::Adam;
pub use agent::{act_online, RlPolicy};
pub use features::{encode_state, NormManifest, FEATURES_PER_CELL, STATE_DIM};
pub use loss::{cql_regularizer, dqn_loss, objective, td_loss_rem, td_target, CqlKind, LossOutput, LossWeights};
pub use model::{Model, ModelMeta};
pub use net::{Arch, Layout, MixedHead, QNet, Trace};
pub use rem::{argmax, rem_combine, RemWeights};
pub use replay::{
    build_transitions, read_transitions_bin, record_bytes, write_transitions_bin, write_transitions_csv, ReplayBuffer,
    Transition,
};
pub use reward::{compute_reward, RewardParams, COST_CEILING_W, LAMBDA, W_PRIME};
pub use train::{train, write_loss_csv, LossRow, TrainConfig, TrainReport, Trainer};

#[derive(Debug, thiserror::Error)]
pub enum RlError {
    #[error("{what} has size {got}, expected {expected}")]
    Shape { what: &'static str, expected: usize, got: usize },
    #[error("mixture weights off the simplex (sum {0})")]
    OffSimplex(f64),
    #[error("non-finite gradient at parameter {0}")]
    NonFiniteGradient(usize),
    #[error("non-finite loss at step {step} (td {td}, cql {cql})")]
    NonFiniteLoss { step: u64, td: f64, cql: f64 },
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("dataset has {have} rows, training needs at least {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("model file: {0}")]
    BadModel(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
