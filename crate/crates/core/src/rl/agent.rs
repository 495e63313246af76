use super::features::{encode_state, NormManifest};
use super::model::Model;
use super::net::{MixedHead, QNet, Trace};
use super::rem::{argmax, RemWeights};
use crate::policies::{DecisionReason, Policy, PolicyDecision, PolicyError};
use crate::ric::UeStateRecord;

/// Greedy action under the uniform head mixture.
pub fn act_online(net: &QNet, norms: &NormManifest, record: &UeStateRecord) -> Result<PolicyDecision, PolicyError> {
    RlPolicy::from_parts(net.clone(), *norms).decide(record)
}

/// The traffic-steering xApp.
pub struct RlPolicy {
    net: QNet,
    norms: NormManifest,
    head: MixedHead,
    trace: Trace,
    q: Vec<f64>,
}

impl RlPolicy {
    pub fn new(model: Model) -> Self {
        Self::from_parts(model.net, model.meta.norms)
    }

    pub fn from_parts(net: QNet, norms: NormManifest) -> Self {
        let head = net.mixed_head(&RemWeights::uniform(net.arch.heads).alpha);
        let q = vec![0.0; net.arch.actions];
        Self { net, norms, head, trace: Trace::default(), q }
    }

    /// Combined Q-values for a record.
    pub fn q_values(&mut self, record: &UeStateRecord) -> Result<&[f64], PolicyError> {
        let bad = |why: String| PolicyError::BadRecord { ue_id: record.ue_id, why };
        record.validate().map_err(bad)?;
        if record.per_cell.len() != self.net.arch.actions {
            return Err(bad(format!("model expects {} cells", self.net.arch.actions)));
        }
        let x = encode_state(record, &self.norms).map_err(|e| bad(e.to_string()))?;
        if x.len() != self.net.arch.input_dim() {
            return Err(bad(format!("state has {} features, model expects {}", x.len(), self.net.arch.input_dim())));
        }
        self.net.trunk(&x, &mut self.trace);
        self.head.q(&self.trace.h2, &mut self.q);
        Ok(&self.q)
    }
}

impl Policy for RlPolicy {
    fn name(&self) -> &str {
        "rl"
    }

    fn decide(&mut self, record: &UeStateRecord) -> Result<PolicyDecision, PolicyError> {
        let a = argmax(self.q_values(record)?);
        let target = record.per_cell[a].cell_id;
        if target == record.serving_cell_id {
            return Ok(PolicyDecision::noop(record));
        }
        Ok(PolicyDecision { ue_id: record.ue_id, target_cell_id: target, reason: DecisionReason::RlGreedy })
    }
}
