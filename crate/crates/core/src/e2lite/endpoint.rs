use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::E2Error;

/// Where the RIC listens for one E2 node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointBinding {
    pub node_id: u32,
    pub address: String,
    pub port: u16,
}

impl EndpointBinding {
    /// One port per node, `base_port + node_id`, all on the same address.
    pub fn for_nodes(address: &str, base_port: u16, nodes: &[u32]) -> Vec<Self> {
        nodes
            .iter()
            .map(|&node_id| Self { node_id, address: address.to_string(), port: base_port + node_id as u16 })
            .collect()
    }

    pub fn socket_addr(&self) -> String {
        format!("{}:{}", self.address, self.port)
    }
}

pub fn validate_bindings(bindings: &[EndpointBinding]) -> Result<(), E2Error> {
    let mut seen: BTreeMap<u16, u32> = BTreeMap::new();
    for b in bindings {
        if let Some(&first) = seen.get(&b.port) {
            return Err(E2Error::DuplicatePort { port: b.port, first, second: b.node_id });
        }
        seen.insert(b.port, b.node_id);
    }
    Ok(())
}

pub fn wall_timestamp_ms(base_unix_ms: u64, sim_elapsed_ms: u64) -> u64 {
    base_unix_ms + sim_elapsed_ms
}

/// Timestamp source for one simulator-side endpoint.
#[derive(Debug, Clone)]
pub struct NodeClock {
    base_unix_ms: u64,
    last: u64,
}

impl NodeClock {
    pub fn new(base_unix_ms: u64) -> Self {
        Self { base_unix_ms, last: base_unix_ms }
    }

    /// Wall time for `sim_elapsed_ms`, never earlier than a previous stamp.
    pub fn stamp(&mut self, sim_elapsed_ms: u64) -> u64 {
        self.last = self.last.max(wall_timestamp_ms(self.base_unix_ms, sim_elapsed_ms));
        self.last
    }

    pub fn base_unix_ms(&self) -> u64 {
        self.base_unix_ms
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps() {
        assert_eq!(wall_timestamp_ms(1_700_000_000_000, 0), 1_700_000_000_000);
        assert_eq!(wall_timestamp_ms(1_700_000_000_000, 100), 1_700_000_000_100);
        let mut c = NodeClock::new(5);
        assert_eq!(c.stamp(10), 15);
        assert_eq!(c.stamp(3), 15);
    }

    #[test]
    fn ports_unique() {
        let b = EndpointBinding::for_nodes("127.0.0.1", 36400, &[1, 2, 3, 8]);
        assert!(validate_bindings(&b).is_ok());
        assert_eq!(b[3].socket_addr(), "127.0.0.1:36408");
        let mut dup = b.clone();
        dup[1].port = dup[0].port;
        assert_eq!(validate_bindings(&dup), Err(E2Error::DuplicatePort { port: 36401, first: 1, second: 2 }));
    }
}
