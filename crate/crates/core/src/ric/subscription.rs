use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subscription {
    pub xapp_id: String,
    pub node_id: u32,
    pub report_period_ms: u32,
    pub kpm_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubscriptionOutcome {
    /// First request for this stream; send it upstream.
    Forwarded,
    /// Attached to an existing upstream stream.
    Deduplicated,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("xApp {xapp_id} asked for unknown node {node_id}")]
pub struct UnknownNode {
    pub xapp_id: String,
    pub node_id: u32,
}

/// Tracks xApp subscriptions and keeps one upstream stream per
/// (node, period, KPM set).
#[derive(Debug, Clone, Default)]
pub struct SubscriptionRegistry {
    nodes: BTreeSet<u32>,
    streams: BTreeMap<(u32, u32, Vec<String>), Vec<String>>,
}

impl SubscriptionRegistry {
    pub fn new(nodes: impl IntoIterator<Item = u32>) -> Self {
        Self { nodes: nodes.into_iter().collect(), streams: BTreeMap::new() }
    }

    pub fn handle(&mut self, req: &Subscription) -> Result<SubscriptionOutcome, UnknownNode> {
        if !self.nodes.contains(&req.node_id) {
            return Err(UnknownNode { xapp_id: req.xapp_id.clone(), node_id: req.node_id });
        }
        let mut names = req.kpm_names.clone();
        names.sort();
        names.dedup();
        let subscribers = self.streams.entry((req.node_id, req.report_period_ms, names)).or_default();
        let outcome = if subscribers.is_empty() { SubscriptionOutcome::Forwarded } else { SubscriptionOutcome::Deduplicated };
        if !subscribers.contains(&req.xapp_id) {
            subscribers.push(req.xapp_id.clone());
        }
        Ok(outcome)
    }

    pub fn upstream_count(&self) -> usize {
        self.streams.len()
    }

    pub fn subscribers(&self, node_id: u32) -> Vec<&str> {
        self.streams
            .iter()
            .filter(|((n, _, _), _)| *n == node_id)
            .flat_map(|(_, s)| s.iter().map(String::as_str))
            .collect()
    }
}
