use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use super::agent::SimAgent;
use super::{RunError, RunOutput};
use crate::e2lite::{validate_bindings, EndpointBinding};
use crate::ric::RicService;

/// RIC side of a split deployment: one listening port per E2 node.
pub struct RicServer {
    listeners: Vec<(u32, TcpListener)>,
    bindings: Vec<EndpointBinding>,
}

impl RicServer {
    /// Binds `base_port + node_id` for every node, or ephemeral ports when
    /// `base_port` is 0.
    pub fn bind(address: &str, base_port: u16, nodes: &[u32]) -> Result<Self, RunError> {
        let mut listeners = Vec::new();
        let mut bindings = Vec::new();
        for &node in nodes {
            let port = if base_port == 0 { 0 } else { base_port + node as u16 };
            let l = TcpListener::bind((address, port))
                .map_err(|e| RunError::Protocol(format!("cannot bind {address}:{port} for node {node}: {e}")))?;
            let port = l.local_addr()?.port();
            bindings.push(EndpointBinding { node_id: node, address: address.to_string(), port });
            listeners.push((node, l));
        }
        validate_bindings(&bindings)?;
        Ok(Self { listeners, bindings })
    }

    pub fn bindings(&self) -> &[EndpointBinding] {
        &self.bindings
    }

    /// Accepts one connection per node and serves until every node hangs up.
    pub fn serve(self, mut ric: RicService) -> Result<RicService, RunError> {
        let (tx, rx) = mpsc::channel::<(u32, Option<Vec<u8>>)>();
        let mut writers: BTreeMap<u32, TcpStream> = BTreeMap::new();
        let mut threads = Vec::new();
        for (node, listener) in self.listeners {
            let (stream, peer) = listener.accept()?;
            log::info!("node {node} connected from {peer}");
            stream.set_nodelay(true)?;
            let mut reader = stream.try_clone()?;
            writers.insert(node, stream);
            let tx = tx.clone();
            threads.push(std::thread::spawn(move || {
                let mut buf = vec![0u8; 64 * 1024];
                loop {
                    match reader.read(&mut buf) {
                        Ok(0) | Err(_) => {
                            let _ = tx.send((node, None));
                            return;
                        }
                        Ok(n) => {
                            if tx.send((node, Some(buf[..n].to_vec()))).is_err() {
                                return;
                            }
                        }
                    }
                }
            }));
        }
        drop(tx);

        let flush = |ric: &mut RicService, writers: &mut BTreeMap<u32, TcpStream>| -> Result<(), RunError> {
            for (node, bytes) in ric.take_outbox() {
                writers.get_mut(&node).expect("connected node").write_all(&bytes)?;
            }
            Ok(())
        };
        for &node in writers.keys() {
            ric.connect(node)?;
        }
        flush(&mut ric, &mut writers)?;
        let mut open = writers.len();
        while open > 0 {
            let Ok((node, data)) = rx.recv() else { break };
            match data {
                Some(bytes) => {
                    ric.on_bytes(node, &bytes)?;
                    flush(&mut ric, &mut writers)?;
                }
                None => open -= 1,
            }
        }
        for t in threads {
            let _ = t.join();
        }
        ric.flush();
        ric.take_outbox();
        Ok(ric)
    }
}

fn connect(b: &EndpointBinding, timeout: Duration) -> Result<TcpStream, RunError> {
    let start = Instant::now();
    loop {
        match TcpStream::connect(b.socket_addr()) {
            Ok(s) => {
                s.set_nodelay(true)?;
                return Ok(s);
            }
            Err(e) if start.elapsed() < timeout => {
                log::debug!("waiting for RIC at {}: {e}", b.socket_addr());
                std::thread::sleep(Duration::from_millis(50));
            }
            Err(e) => return Err(RunError::Protocol(format!("cannot reach RIC at {}: {e}", b.socket_addr()))),
        }
    }
}

/// Reads from `node`'s stream until `done` holds, answering as needed.
fn read_until(
    agent: &mut SimAgent,
    streams: &mut BTreeMap<u32, TcpStream>,
    node: u32,
    done: impl Fn(&SimAgent) -> bool,
) -> Result<(), RunError> {
    let mut buf = vec![0u8; 64 * 1024];
    while !done(agent) {
        let n = streams.get_mut(&node).expect("connected").read(&mut buf)?;
        if n == 0 {
            return Err(RunError::Protocol(format!("RIC closed the connection of node {node}")));
        }
        for (to, bytes) in agent.receive(node, &buf[..n])? {
            streams.get_mut(&to).expect("connected").write_all(&bytes)?;
        }
    }
    Ok(())
}

/// Simulator side of a split deployment: connects every node to its RIC port.
pub fn run_remote(mut agent: SimAgent, bindings: &[EndpointBinding], timeout: Duration) -> Result<RunOutput, RunError> {
    validate_bindings(bindings)?;
    let mut streams = BTreeMap::new();
    for &node in agent.nodes() {
        let b = bindings
            .iter()
            .find(|b| b.node_id == node)
            .ok_or_else(|| RunError::Protocol(format!("no binding for node {node}")))?;
        streams.insert(node, connect(b, timeout)?);
    }
    for node in agent.nodes().to_vec() {
        read_until(&mut agent, &mut streams, node, |a| a.is_subscribed(node))?;
    }
    while !agent.finished() {
        for (node, bytes) in agent.next_window()? {
            streams.get_mut(&node).expect("connected").write_all(&bytes)?;
        }
        for node in agent.nodes().to_vec() {
            read_until(&mut agent, &mut streams, node, |a| a.has_barrier(node))?;
        }
    }
    for s in streams.values() {
        let _ = s.shutdown(std::net::Shutdown::Write);
    }
    // Drain until the RIC hangs up so it sees every frame before we exit.
    let mut sink = [0u8; 1024];
    for s in streams.values_mut() {
        while matches!(s.read(&mut sink), Ok(n) if n > 0) {}
    }
    Ok(RunOutput::new(agent, None))
}
