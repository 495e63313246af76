use super::agent::SimAgent;
use super::{RunError, RunOutput};
use crate::ric::RicService;

fn pump(agent: &mut SimAgent, ric: &mut RicService) -> Result<(), RunError> {
    loop {
        let out = ric.take_outbox();
        if out.is_empty() {
            return Ok(());
        }
        for (node, bytes) in out {
            for (n, b) in agent.receive(node, &bytes)? {
                ric.on_bytes(n, &b)?;
            }
        }
    }
}

/// Runs simulator and RIC in one process, exchanging E2-lite frames through
/// memory.
pub fn run_embedded(mut agent: SimAgent, mut ric: RicService) -> Result<RunOutput, RunError> {
    for &n in agent.nodes() {
        ric.connect(n)?;
    }
    pump(&mut agent, &mut ric)?;
    if !agent.all_subscribed() || !ric.all_subscribed() {
        return Err(RunError::Protocol("subscription handshake incomplete".into()));
    }
    while !agent.finished() {
        for (n, b) in agent.next_window()? {
            ric.on_bytes(n, &b)?;
        }
        pump(&mut agent, &mut ric)?;
        if !agent.barrier_complete() {
            return Err(RunError::Protocol(format!("window {} not closed by the RIC", agent.world.now_ms)));
        }
    }
    ric.flush();
    Ok(RunOutput::new(agent, Some(ric)))
}
