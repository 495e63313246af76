use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;

use serde_json::json;

use super::etl::{Etl, EtlParams, HoLedger};
use super::records_csv::DispatchedRecord;
use super::subscription::{Subscription, SubscriptionOutcome, SubscriptionRegistry, UnknownNode};
use crate::e2lite::{encode_message, E2Error, E2Message, FrameReader, Payload, BARRIER_UE};
use crate::policies::Policy;
use crate::sim::{CellId, KpmReport};

/// KPM names requested from every node.
pub const KPM_NAMES: [&str; 9] = [
    "DRB.UEThpDl",
    "RRU.PrbUsedDl",
    "DRB.MeanActiveUeDl",
    "TB.TotNbrDl",
    "TB.TotNbrDlInitial.Qpsk",
    "TB.TotNbrDlInitial.16Qam",
    "TB.TotNbrDlInitial.64Qam",
    "L3.ServingSinr",
    "L3.NeighSinr",
];

#[derive(Debug, Clone)]
pub struct RicConfig {
    pub etl: EtlParams,
    /// Every E2 node expected to connect (NR cells plus the eNB).
    pub nodes: Vec<u32>,
    pub nr_cells: Vec<CellId>,
    pub kpm_names: Vec<String>,
    /// xApps that subscribe on each node connect.
    pub xapps: Vec<String>,
}

impl RicConfig {
    pub fn new(nr_cells: Vec<CellId>, lte_node: u32, etl: EtlParams) -> Self {
        let mut nodes = nr_cells.clone();
        nodes.push(lte_node);
        Self {
            etl,
            nodes,
            nr_cells,
            kpm_names: KPM_NAMES.iter().map(|s| s.to_string()).collect(),
            xapps: vec!["ts-xapp".into(), "kpm-collector".into()],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RicStats {
    pub indications: u64,
    pub windows: u64,
    pub dispatches: u64,
    pub controls: u64,
    pub acks: u64,
    pub drops: u64,
    pub fills: u64,
    pub forwarded_subscriptions: u64,
    pub deduplicated_subscriptions: u64,
    pub policy_errors: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum RicError {
    #[error("e2: {0}")]
    E2(#[from] E2Error),
    #[error("connection for node {conn} carried a frame from node {header}")]
    NodeMismatch { conn: u32, header: u32 },
    #[error("unknown node {0}")]
    UnknownNode(u32),
    #[error(transparent)]
    Subscription(#[from] UnknownNode),
    #[error("unexpected {what} from node {node}")]
    Unexpected { node: u32, what: &'static str },
}

/// Transport-agnostic RIC: feed it bytes per node connection, collect the
/// frames it wants sent.
pub struct RicService {
    cfg: RicConfig,
    registry: SubscriptionRegistry,
    etl: Etl,
    ledger: HoLedger,
    policy: Box<dyn Policy>,
    readers: BTreeMap<u32, FrameReader>,
    subscribed: BTreeSet<u32>,
    pending: BTreeMap<u64, BTreeMap<u32, KpmReport>>,
    outbox: Vec<(u32, Vec<u8>)>,
    records: Vec<DispatchedRecord>,
    acks: BTreeMap<(u32, u32, u32), bool>,
    log: Vec<String>,
    stats: RicStats,
    max_latency_us: u128,
}

impl RicService {
    pub fn new(cfg: RicConfig, policy: Box<dyn Policy>) -> Self {
        Self {
            registry: SubscriptionRegistry::new(cfg.nodes.iter().copied()),
            etl: Etl::new(cfg.etl, cfg.nr_cells.clone()),
            cfg,
            ledger: HoLedger::default(),
            policy,
            readers: BTreeMap::new(),
            subscribed: BTreeSet::new(),
            pending: BTreeMap::new(),
            outbox: Vec::new(),
            records: Vec::new(),
            acks: BTreeMap::new(),
            log: Vec::new(),
            stats: RicStats::default(),
            max_latency_us: 0,
        }
    }

    fn send(&mut self, node: u32, msg: E2Message) {
        let bytes = encode_message(&msg).expect("RIC frames are small");
        self.outbox.push((node, bytes));
    }

    fn log(&mut self, v: serde_json::Value) {
        self.log.push(v.to_string());
    }

    /// Registers a node connection and lets every xApp subscribe to it.
    pub fn connect(&mut self, node: u32) -> Result<(), RicError> {
        if !self.cfg.nodes.contains(&node) {
            return Err(RicError::UnknownNode(node));
        }
        self.readers.insert(node, FrameReader::new());
        let period = self.cfg.etl.report_period_ms as u32;
        for xapp in self.cfg.xapps.clone() {
            let req = Subscription {
                xapp_id: xapp.clone(),
                node_id: node,
                report_period_ms: period,
                kpm_names: self.cfg.kpm_names.clone(),
            };
            match self.registry.handle(&req)? {
                SubscriptionOutcome::Forwarded => {
                    self.stats.forwarded_subscriptions += 1;
                    self.log(json!({"event": "subscription_forwarded", "node": node, "xapp": xapp}));
                    let payload =
                        Payload::SubscriptionRequest { report_period_ms: period, kpm_names: req.kpm_names };
                    self.send(node, E2Message::new(node, 0, payload));
                }
                SubscriptionOutcome::Deduplicated => {
                    self.stats.deduplicated_subscriptions += 1;
                    self.log(json!({"event": "subscription_dedup", "node": node, "xapp": xapp}));
                }
            }
        }
        Ok(())
    }

    pub fn all_subscribed(&self) -> bool {
        self.cfg.nodes.iter().all(|n| self.subscribed.contains(n))
    }

    /// Bytes received on the connection of `node`.
    pub fn on_bytes(&mut self, node: u32, bytes: &[u8]) -> Result<(), RicError> {
        let reader = self.readers.get_mut(&node).ok_or(RicError::UnknownNode(node))?;
        reader.push(bytes);
        let mut msgs = Vec::new();
        while let Some(m) = reader.next_message()? {
            msgs.push(m);
        }
        for m in msgs {
            self.on_message(node, m)?;
        }
        Ok(())
    }

    fn on_message(&mut self, node: u32, msg: E2Message) -> Result<(), RicError> {
        if msg.node_id != node {
            return Err(RicError::NodeMismatch { conn: node, header: msg.node_id });
        }
        match msg.payload {
            Payload::SubscriptionAck => {
                self.subscribed.insert(node);
            }
            Payload::KpmIndication(mut report) => {
                self.stats.indications += 1;
                report.node_id = node;
                let started = Instant::now();
                let window = self.pending.entry(msg.timestamp_ms).or_default();
                window.insert(node, report);
                if window.len() == self.cfg.nodes.len() {
                    // Anything older can no longer complete.
                    let ready: Vec<u64> = self.pending.range(..=msg.timestamp_ms).map(|(&t, _)| t).collect();
                    for t in ready {
                        self.process_window(t);
                    }
                    self.max_latency_us = self.max_latency_us.max(started.elapsed().as_micros());
                }
            }
            Payload::ControlAck { ue_id, target_cell_id } => {
                self.stats.acks += 1;
                let matched = self.ledger.control_acked(ue_id, target_cell_id);
                // Arrival order across connections is transport-dependent; log
                // acks in a fixed order at the next window boundary instead.
                self.acks.insert((node, ue_id, target_cell_id), matched);
            }
            Payload::SubscriptionRequest { .. } => return Err(RicError::Unexpected { node, what: "subscription request" }),
            Payload::RicControl { .. } => return Err(RicError::Unexpected { node, what: "control" }),
        }
        Ok(())
    }

    /// Processes every pending window regardless of completeness.
    pub fn flush(&mut self) {
        let ready: Vec<u64> = self.pending.keys().copied().collect();
        for t in ready {
            self.process_window(t);
        }
        self.log_acks();
    }

    fn log_acks(&mut self) {
        for ((node, ue_id, target), matched) in std::mem::take(&mut self.acks) {
            self.log(json!({"event": "control_ack", "node": node, "ue_id": ue_id, "target": target, "matched": matched}));
        }
    }

    fn process_window(&mut self, ts: u64) {
        let Some(reports) = self.pending.remove(&ts) else { return };
        self.log_acks();
        self.stats.windows += 1;
        let window_end = reports.values().next().map_or(ts, |r| r.window_end_ms);
        let out = self.etl.aggregate(window_end, &reports, &self.ledger);
        self.stats.fills += out.filled;
        for d in &out.dropped {
            self.stats.drops += 1;
            self.log(json!({"event": "drop", "window_end_ms": d.window_end_ms, "ue_id": d.ue_id, "reason": d.reason}));
        }
        for record in out.records {
            self.stats.dispatches += 1;
            let serving = record.serving_cell_id;
            let (target, reason) = match self.policy.decide(&record) {
                Ok(d) if record.cell(d.target_cell_id).is_some() && d.ue_id == record.ue_id => {
                    (d.target_cell_id, d.reason.as_str())
                }
                Ok(d) => {
                    self.stats.policy_errors += 1;
                    self.log(json!({"event": "policy_error", "window_end_ms": window_end, "ue_id": record.ue_id, "error": format!("invalid decision {d:?}")}));
                    (serving, "noop")
                }
                Err(e) => {
                    self.stats.policy_errors += 1;
                    self.log(json!({"event": "policy_error", "window_end_ms": window_end, "ue_id": record.ue_id, "error": e.to_string()}));
                    (serving, "noop")
                }
            };
            self.log(json!({
                "event": "dispatch",
                "window_end_ms": window_end,
                "ue_id": record.ue_id,
                "serving": serving,
                "target": target,
                "reason": reason,
            }));
            if target != serving {
                self.stats.controls += 1;
                self.ledger.control_sent(record.ue_id, target, window_end);
                self.send(serving, E2Message::new(serving, ts, Payload::RicControl { ue_id: record.ue_id, target_cell_id: target }));
            }
            self.records.push(DispatchedRecord { record, action_target_cell_id: target });
        }
        for node in self.cfg.nodes.clone() {
            self.send(node, E2Message::new(node, ts, Payload::RicControl { ue_id: BARRIER_UE, target_cell_id: 0 }));
        }
    }

    pub fn take_outbox(&mut self) -> Vec<(u32, Vec<u8>)> {
        std::mem::take(&mut self.outbox)
    }

    pub fn records(&self) -> &[DispatchedRecord] {
        &self.records
    }

    pub fn take_records(&mut self) -> Vec<DispatchedRecord> {
        std::mem::take(&mut self.records)
    }

    pub fn stats(&self) -> &RicStats {
        &self.stats
    }

    pub fn registry(&self) -> &SubscriptionRegistry {
        &self.registry
    }

    pub fn max_latency_us(&self) -> u128 {
        self.max_latency_us
    }

    pub fn log_lines(&self) -> &[String] {
        &self.log
    }

    pub fn write_log<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for line in &self.log {
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e2lite::{decode_message, MsgType};
    use crate::policies::{DecisionReason, PolicyDecision, PolicyError, Rrm};
    use crate::ric::UeStateRecord;
    use crate::sim::{CellKpm, UeKpm};

    fn cfg() -> RicConfig {
        RicConfig::new((1..=7).collect(), 8, EtlParams::default())
    }

    fn frame(node: u32, ts: u64, payload: Payload) -> Vec<u8> {
        encode_message(&E2Message::new(node, ts, payload)).unwrap()
    }

    fn kpm(node: u32, t: u64, ue_sinr: Option<[f64; 7]>) -> Vec<u8> {
        let ues = ue_sinr
            .map(|s| {
                vec![UeKpm {
                    ue_id: 0,
                    pdcp_throughput_bps: 2e6,
                    sinr_db_by_cell: (1..=7).map(|c| (c, s[c as usize - 1])).collect(),
                }]
            })
            .unwrap_or_default();
        frame(node, 1000 + t, Payload::KpmIndication(KpmReport { node_id: node, window_end_ms: t, cell: CellKpm::idle(node), ues }))
    }

    fn connected(policy: Box<dyn Policy>) -> RicService {
        let mut r = RicService::new(cfg(), policy);
        for n in 1..=8 {
            r.connect(n).unwrap();
            r.on_bytes(n, &frame(n, 0, Payload::SubscriptionAck)).unwrap();
        }
        r
    }

    fn decoded(out: &[(u32, Vec<u8>)]) -> Vec<(u32, E2Message)> {
        out.iter().map(|(n, b)| (*n, decode_message(b).unwrap())).collect()
    }

    #[test]
    fn subscriptions_deduplicated_on_the_wire() {
        let mut r = connected(Box::new(Rrm::default()));
        let out = decoded(&r.take_outbox());
        assert_eq!(out.len(), 8);
        assert!(out.iter().all(|(n, m)| m.node_id == *n && m.payload.msg_type() == MsgType::SubscriptionRequest));
        assert_eq!(r.stats().deduplicated_subscriptions, 8);
        assert!(r.all_subscribed());
        assert!(matches!(r.connect(99), Err(RicError::UnknownNode(99))));
    }

    #[test]
    fn window_dispatch_and_ledger() {
        let mut r = connected(Box::new(Rrm::default()));
        r.take_outbox();
        let mut s = [0.0; 7];
        s[4] = 10.0;
        for n in 1..=8 {
            assert!(r.take_outbox().is_empty());
            r.on_bytes(n, &kpm(n, 100, (n == 2).then_some(s))).unwrap();
        }
        let out = decoded(&r.take_outbox());
        // One control to the serving node, then a barrier per node.
        assert_eq!(out.len(), 9);
        assert_eq!(out[0].0, 2);
        assert_eq!(out[0].1.payload, Payload::RicControl { ue_id: 0, target_cell_id: 5 });
        assert_eq!(out[0].1.timestamp_ms, 1100);
        assert!(out[1..].iter().all(|(n, m)| m.is_barrier() && m.node_id == *n));
        assert_eq!(r.records()[0].action_target_cell_id, 5);

        r.on_bytes(2, &frame(2, 1100, Payload::ControlAck { ue_id: 0, target_cell_id: 5 })).unwrap();
        for n in 1..=8 {
            r.on_bytes(n, &kpm(n, 300, (n == 5).then_some([0.0; 7]))).unwrap();
        }
        let rec = &r.records()[1].record;
        assert_eq!((rec.serving_cell_id, rec.t_since_last_ho_ms), (5, 200));
        assert_eq!(r.stats().dispatches, 2);
        assert_eq!(r.stats().controls, 1);
    }

    #[test]
    fn noop_sends_only_barriers() {
        let mut r = connected(Box::new(Rrm::default()));
        r.take_outbox();
        for n in 1..=8 {
            r.on_bytes(n, &kpm(n, 100, (n == 3).then_some([0.0; 7]))).unwrap();
        }
        let out = decoded(&r.take_outbox());
        assert_eq!(out.len(), 8);
        assert!(out.iter().all(|(_, m)| m.is_barrier()));
    }

    struct Failing;
    impl Policy for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn decide(&mut self, r: &UeStateRecord) -> Result<PolicyDecision, PolicyError> {
            if r.window_end_ms == 100 {
                Err(PolicyError::Other("boom".into()))
            } else {
                Ok(PolicyDecision { ue_id: r.ue_id, target_cell_id: 42, reason: DecisionReason::RlGreedy })
            }
        }
    }

    #[test]
    fn policy_failure_is_isolated() {
        let mut r = connected(Box::new(Failing));
        for t in [100, 200] {
            for n in 1..=8 {
                r.on_bytes(n, &kpm(n, t, (n == 1).then_some([0.0; 7]))).unwrap();
            }
        }
        assert_eq!(r.stats().policy_errors, 2);
        assert_eq!(r.stats().controls, 0);
        assert_eq!(r.records().len(), 2);
        assert!(r.log_lines().iter().any(|l| l.contains("boom")));
    }

    #[test]
    fn node_attribution_is_per_connection() {
        let mut r = connected(Box::new(Rrm::default()));
        let err = r.on_bytes(3, &kpm(4, 100, None)).unwrap_err();
        assert!(matches!(err, RicError::NodeMismatch { conn: 3, header: 4 }));
    }

    #[test]
    fn fragmented_input() {
        let mut r = connected(Box::new(Rrm::default()));
        for n in 1..=8 {
            let b = kpm(n, 100, (n == 1).then_some([0.0; 7]));
            for chunk in b.chunks(7) {
                r.on_bytes(n, chunk).unwrap();
            }
        }
        assert_eq!(r.stats().windows, 1);
    }
}
