//! Near-RT RIC: subscription management, the KPM-to-record ETL, the handover
//! ledger and policy dispatch.

mod etl;
mod record;
mod records_csv;
mod service;
mod subscription;

pub use etl::{DroppedRecord, Etl, EtlParams, HoLedger, WindowOutput};
pub use record::{ho_cost, CellState, UeStateRecord, N_NR_CELLS};
pub use records_csv::{read_records_csv, record_columns, write_records_csv, DispatchedRecord, RecordsCsvError};
pub use service::{RicConfig, RicError, RicService, RicStats, KPM_NAMES};
pub use subscription::{Subscription, SubscriptionOutcome, SubscriptionRegistry, UnknownNode};

#[cfg(test)]
pub(crate) use record::fixtures;
