//! Handover-steering sandbox: a cellular network simulator speaking a small
//! E2-style protocol to a near-RT RIC, baseline and learned handover
//! policies, offline CQL/REM training, and KPI evaluation.
//!
//! [`runner`] ties the pieces together for the CLI and the tests.

pub mod e2lite;
pub mod eval;
pub mod policies;
pub mod ric;
pub mod rl;
pub mod runner;
pub mod sim;
