use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use super::RunError;
use crate::e2lite::{encode_message, E2Message, FrameReader, NodeClock, Payload};
use crate::sim::{Violation, World};

/// Simulator side of the E2 links: one endpoint per cell, all sharing the
/// same world.
pub struct SimAgent {
    pub world: World,
    nodes: Vec<u32>,
    clocks: BTreeMap<u32, NodeClock>,
    readers: BTreeMap<u32, FrameReader>,
    subscribed: BTreeSet<u32>,
    barriers: BTreeSet<u32>,
    uplink: BTreeMap<u32, Sha256>,
    downlink: BTreeMap<u32, Sha256>,
    pub violations: Vec<Violation>,
    pub handovers: u64,
}

impl SimAgent {
    pub fn new(world: World, base_unix_ms: u64) -> Self {
        let mut nodes: Vec<u32> = world.topology.cells.iter().map(|c| c.cell_id).collect();
        nodes.sort_unstable();
        Self {
            clocks: nodes.iter().map(|&n| (n, NodeClock::new(base_unix_ms))).collect(),
            readers: nodes.iter().map(|&n| (n, FrameReader::new())).collect(),
            uplink: nodes.iter().map(|&n| (n, Sha256::new())).collect(),
            downlink: nodes.iter().map(|&n| (n, Sha256::new())).collect(),
            nodes,
            world,
            subscribed: BTreeSet::new(),
            barriers: BTreeSet::new(),
            violations: Vec::new(),
            handovers: 0,
        }
    }

    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    fn send(&mut self, out: &mut Vec<(u32, Vec<u8>)>, node: u32, payload: Payload) -> Result<(), RunError> {
        let ts = self.clocks.get_mut(&node).expect("known node").stamp(self.world.now_ms);
        let bytes = encode_message(&E2Message::new(node, ts, payload))?;
        self.uplink.get_mut(&node).expect("known node").update(&bytes);
        out.push((node, bytes));
        Ok(())
    }

    /// Handles bytes arriving at `node`'s endpoint; returns frames to send back.
    pub fn receive(&mut self, node: u32, bytes: &[u8]) -> Result<Vec<(u32, Vec<u8>)>, RunError> {
        let reader = self.readers.get_mut(&node).ok_or(RunError::Protocol(format!("unknown node {node}")))?;
        self.downlink.get_mut(&node).expect("known node").update(bytes);
        reader.push(bytes);
        let mut msgs = Vec::new();
        while let Some(m) = reader.next_message()? {
            msgs.push(m);
        }
        let mut out = Vec::new();
        for m in msgs {
            if m.node_id != node {
                return Err(RunError::Protocol(format!("frame for node {} arrived at node {node}", m.node_id)));
            }
            match m.payload {
                Payload::SubscriptionRequest { .. } => {
                    self.subscribed.insert(node);
                    self.send(&mut out, node, Payload::SubscriptionAck)?;
                }
                Payload::RicControl { .. } if m.is_barrier() => {
                    self.barriers.insert(node);
                }
                Payload::RicControl { ue_id, target_cell_id } => {
                    let serving = self.world.ue_index(ue_id).map(|u| self.world.ues[u].serving_nr_cell);
                    if serving != Some(node) {
                        log::warn!("node {node}: control for UE {ue_id} it does not serve; ignored");
                        continue;
                    }
                    if self.world.execute_handover(ue_id, target_cell_id)? {
                        self.handovers += 1;
                    }
                    self.send(&mut out, node, Payload::ControlAck { ue_id, target_cell_id })?;
                }
                other => {
                    return Err(RunError::Protocol(format!("node {node} got unexpected {:?}", other.msg_type())));
                }
            }
        }
        Ok(out)
    }

    pub fn all_subscribed(&self) -> bool {
        self.subscribed.len() == self.nodes.len()
    }

    pub fn is_subscribed(&self, node: u32) -> bool {
        self.subscribed.contains(&node)
    }

    pub fn has_barrier(&self, node: u32) -> bool {
        self.barriers.contains(&node)
    }

    pub fn barrier_complete(&self) -> bool {
        self.barriers.len() == self.nodes.len()
    }

    pub fn finished(&self) -> bool {
        self.world.now_ms >= self.world.config.sim_duration_ms
    }

    /// Simulates one report window and returns every node's indication.
    pub fn next_window(&mut self) -> Result<Vec<(u32, Vec<u8>)>, RunError> {
        self.barriers.clear();
        self.world.run_window()?;
        self.violations.extend(self.world.check_window_invariants());
        let t = self.world.now_ms;
        let mut out = Vec::new();
        for node in self.nodes.clone() {
            if !self.subscribed.contains(&node) {
                continue;
            }
            let report = self.world.generate_kpm_report(node, t)?;
            self.send(&mut out, node, Payload::KpmIndication(report))?;
        }
        Ok(out)
    }

    /// Digest over every byte sent and received, per node and direction.
    pub fn transcript_digest(&self) -> String {
        let mut h = Sha256::new();
        for n in &self.nodes {
            h.update(n.to_le_bytes());
            h.update(self.uplink[n].clone().finalize());
            h.update(self.downlink[n].clone().finalize());
        }
        hex::encode(h.finalize())
    }
}
