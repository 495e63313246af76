//! Link budget: log-distance UMa-LOS pathloss, log-normal shadowing and
//! interference-limited SINR.

use super::topology::{CellId, Point, Topology};
use super::SimError;

pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// `28 + 22 log10(d) + 20 log10(f_GHz)`, with `d` clamped to at least 1 m.
pub fn pathloss_db(distance_m: f64, carrier_freq_hz: f64) -> f64 {
    let d = if distance_m.is_nan() { 1.0 } else { distance_m.max(1.0) };
    28.0 + 22.0 * d.log10() + 20.0 * (carrier_freq_hz / 1e9).log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Static radio parameters shared by every link evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LinkParams {
    pub carrier_freq_hz: f64,
    pub noise_figure_db: f64,
}

/// Received power (dBm) from the cell at `cell_idx` (index into `topo.cells`).
pub fn rx_power_dbm(
    pos: &Point,
    topo: &Topology,
    cell_idx: usize,
    shadowing_db: &[f64],
    link: &LinkParams,
) -> f64 {
    let cell = &topo.cells[cell_idx];
    cell.tx_power_dbm
        - pathloss_db(pos.distance(&cell.position), link.carrier_freq_hz)
        - shadowing_db[cell_idx]
}

/// SINR (dB) of the link to `cell_id`, treating every other cell of the same
/// kind as a full-power interferer. `shadowing_db` holds one value per entry
/// of `topo.cells`, in the same order.
pub fn compute_sinr_db(
    pos: &Point,
    cell_id: CellId,
    topo: &Topology,
    shadowing_db: &[f64],
    link: &LinkParams,
) -> Result<f64, SimError> {
    let idx = topo
        .cells
        .iter()
        .position(|c| c.cell_id == cell_id)
        .ok_or(SimError::UnknownCell(cell_id))?;
    if shadowing_db.len() != topo.cells.len() {
        return Err(SimError::InvalidConfig(format!(
            "shadowing map has {} links, topology has {} cells",
            shadowing_db.len(),
            topo.cells.len()
        )));
    }
    let kind = topo.cells[idx].kind;
    let signal = dbm_to_mw(rx_power_dbm(pos, topo, idx, shadowing_db, link));
    let interference: f64 = topo
        .cells
        .iter()
        .enumerate()
        .filter(|&(i, c)| i != idx && c.kind == kind)
        .map(|(i, _)| dbm_to_mw(rx_power_dbm(pos, topo, i, shadowing_db, link)))
        .sum();
    let noise = dbm_to_mw(noise_power_dbm(topo.cells[idx].bandwidth_hz, link.noise_figure_db));
    Ok(mw_to_dbm(signal / (interference + noise)))
}
