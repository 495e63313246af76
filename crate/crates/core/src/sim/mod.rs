//! Discrete-time EN-DC RAN simulator.
//!
//! Seven gNBs (one central, six on a hexagonal ring) plus an eNB co-located
//! with the central gNB. UEs follow a random walk, receive downlink traffic
//! over a split bearer and are scheduled per cell in 1 ms slots. Every report
//! window each node produces a [`KpmReport`].

mod channel;
mod config;
mod kpm;
mod mcs;
mod mobility;
mod scheduler;
mod topology;
mod traffic;
mod world;

pub use channel::{compute_sinr_db, dbm_to_mw, noise_power_dbm, pathloss_db, LinkParams};
pub use config::{Band, McsTable, SimConfig};
pub use kpm::{CellKpm, KpmReport, TbTally, UeKpm};
pub use mcs::{mcs_from_sinr, Mcs, Modulation};
pub use mobility::advance as advance_position;
pub use scheduler::{schedule_cell, CellSchedule, Grant, SchedRequest, SlotGrid, UeId};
pub use topology::{
    build_topology, Bounds, Cell, CellId, CellKind, Point, Topology, CENTRAL_NR_CELL, LTE_CELL,
};
pub use traffic::{OnOffParams, TrafficModel, TrafficSource};
pub use world::{CellWindowRow, ClosedWindow, Event, EventKind, UeSim, UeWindowRow, Violation, World};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown cell {0}")]
    UnknownCell(CellId),
    #[error("unknown UE {0}")]
    UnknownUe(UeId),
    #[error("UE {ue_id} is attached to cell {got}, not {expected}")]
    WrongCell { ue_id: UeId, expected: CellId, got: CellId },
    #[error("negative demand for UE {0}")]
    NegativeDemand(UeId),
    #[error("step must be {expected} ms, got {got} ms")]
    BadStep { expected: u64, got: u64 },
    #[error("window ending at {0} ms has not been closed")]
    WindowNotClosed(u64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
