//! The stepped world: UEs, per-link shadowing, split-bearer queues, per-cell
//! scheduling and window accounting.

use std::collections::BTreeSet;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::channel::{compute_sinr_db, LinkParams};
use super::kpm::{CellKpm, KpmReport, TbTally, UeKpm};
use super::mcs::{mcs_from_sinr, Modulation};
use super::mobility;
use super::scheduler::{schedule_cell, SchedRequest, SlotGrid, UeId};
use super::topology::{build_topology, CellId, CellKind, Point, Topology};
use super::traffic::{OnOffParams, TrafficModel, TrafficSource};
use super::{SimConfig, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSim {
    pub ue_id: UeId,
    pub position: Point,
    pub velocity: Point,
    /// The PSCell.
    pub serving_nr_cell: CellId,
    pub lte_anchor: CellId,
    pub traffic_model: TrafficModel,
    /// Time of the last executed handover (0 before any).
    pub last_ho_time_ms: u64,
    pub ho_freeze_until_ms: u64,
    pub nr_backlog_bits: f64,
    pub lte_backlog_bits: f64,
    pub next_direction_change_ms: u64,
    pub ho_count: u32,
}

impl UeSim {
    pub fn backlog_bits(&self) -> f64 {
        self.nr_backlog_bits + self.lte_backlog_bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Attach,
    Handover,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Attach => "attach",
            EventKind::Handover => "handover",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time_ms: u64,
    pub ue_id: UeId,
    pub kind: EventKind,
    pub detail: String,
}

/// Per-UE accounting for one closed report window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeWindowRow {
    pub window_end_ms: u64,
    pub ue_id: UeId,
    pub serving_cell: CellId,
    pub nr_bits: f64,
    pub lte_bits: f64,
    pub serving_sinr_db: f64,
}

/// Per-cell accounting for one closed report window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellWindowRow {
    pub window_end_ms: u64,
    pub cell_id: CellId,
    pub prbs_used: u64,
    pub prbs_available: u64,
    pub bits_served: f64,
    pub tb_count: u64,
    pub active_ues: u32,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, Default)]
struct CellAccum {
    prbs: u64,
    slots: u64,
    bits: f64,
    tbs: TbTally,
    active: BTreeSet<UeId>,
}

#[derive(Debug, Clone, Default)]
struct UeAccum {
    nr_bits: f64,
    lte_bits: f64,
    serving: CellId,
}

/// Statistics of the most recently closed window.
#[derive(Debug, Clone, Default)]
pub struct ClosedWindow {
    pub window_end_ms: u64,
    cells: Vec<CellAccum>,
    ues: Vec<UeAccum>,
    /// SINR snapshot at the window end, `[ue][cell index]`.
    sinr: Vec<f64>,
}

/// One capacity or accounting violation found at a window boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub window_end_ms: u64,
    pub what: String,
}

pub struct World {
    pub config: SimConfig,
    pub topology: Topology,
    pub now_ms: u64,
    pub ues: Vec<UeSim>,
    link: LinkParams,
    traffic: Vec<TrafficSource>,
    mobility_rngs: Vec<ChaCha8Rng>,
    traffic_rngs: Vec<ChaCha8Rng>,
    shadow_rng: ChaCha8Rng,
    /// `[ue][cell index]`, redrawn at every window start.
    shadowing: Vec<f64>,
    /// `[ue][cell index]`, refreshed every step.
    sinr: Vec<f64>,
    rotation: Vec<u64>,
    cell_acc: Vec<CellAccum>,
    ue_acc: Vec<UeAccum>,
    /// Active-UE counts of the previous window, used for the bearer split.
    prev_active: Vec<u32>,
    /// NR share of new traffic per UE, fixed at each window start.
    split_nr: Vec<f64>,
    /// Window index the current shadowing draw belongs to.
    shadow_window: u64,
    closed: Option<ClosedWindow>,
    pub events: Vec<Event>,
    pub ue_log: Vec<UeWindowRow>,
    pub cell_log: Vec<CellWindowRow>,
}

fn sub_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stream.to_le_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

impl World {
    /// Builds the world from `config`, dropping UEs uniformly at random.
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        let topology = build_topology(&config)?;
        let mut drop_rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, 0, 0));
        let mut positions = Vec::with_capacity(config.n_ues);
        for _ in 0..config.n_ues {
            use rand::Rng;
            let b = topology.bounds;
            positions.push(Point::new(
                drop_rng.gen_range(b.min.x..=b.max.x),
                drop_rng.gen_range(b.min.y..=b.max.y),
            ));
        }
        Self::with_positions(config, topology, &positions, None)
    }

    /// Builds a world with explicit UE positions and, optionally, forced
    /// initial PSCells. Used for scripted scenarios.
    pub fn with_positions(
        config: SimConfig,
        topology: Topology,
        positions: &[Point],
        initial_cells: Option<&[CellId]>,
    ) -> Result<Self, SimError> {
        config.validate()?;
        let n_ues = positions.len();
        let n_cells = topology.cells.len();
        let lte = topology.lte_cell_id();
        let onoff = OnOffParams {
            on_mean_ms: config.burst_on_mean_ms,
            off_mean_ms: config.burst_off_mean_ms,
        };
        let mut mobility_rngs: Vec<ChaCha8Rng> = (0..n_ues)
            .map(|i| ChaCha8Rng::seed_from_u64(sub_seed(config.seed, 1, i as u64)))
            .collect();
        let mut traffic_rngs: Vec<ChaCha8Rng> = (0..n_ues)
            .map(|i| ChaCha8Rng::seed_from_u64(sub_seed(config.seed, 2, i as u64)))
            .collect();
        let shadow_rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, 3, 0));
        let mut traffic = Vec::with_capacity(n_ues);
        let mut ues = Vec::with_capacity(n_ues);
        for (i, &p) in positions.iter().enumerate() {
            let model = TrafficModel::for_ue_index(i);
            traffic.push(TrafficSource::new(model, onoff, &mut traffic_rngs[i]));
            let velocity =
                mobility::draw_velocity(&mut mobility_rngs[i], config.speed_min_mps, config.speed_max_mps);
            ues.push(UeSim {
                ue_id: i as UeId,
                position: p,
                velocity,
                serving_nr_cell: 0,
                lte_anchor: lte,
                traffic_model: model,
                last_ho_time_ms: 0,
                ho_freeze_until_ms: 0,
                nr_backlog_bits: 0.0,
                lte_backlog_bits: 0.0,
                next_direction_change_ms: config.direction_hold_ms,
                ho_count: 0,
            });
        }
        let link = LinkParams {
            carrier_freq_hz: config.carrier_freq_hz,
            noise_figure_db: config.noise_figure_db,
        };
        let mut world = World {
            config,
            topology,
            now_ms: 0,
            ues,
            link,
            traffic,
            mobility_rngs,
            traffic_rngs,
            shadow_rng,
            shadowing: vec![0.0; n_ues * n_cells],
            sinr: vec![0.0; n_ues * n_cells],
            rotation: vec![0; n_cells],
            cell_acc: vec![CellAccum::default(); n_cells],
            ue_acc: vec![UeAccum::default(); n_ues],
            prev_active: vec![0; n_cells],
            split_nr: vec![0.5; n_ues],
            shadow_window: 0,
            closed: None,
            events: Vec::new(),
            ue_log: Vec::new(),
            cell_log: Vec::new(),
        };
        world.draw_shadowing();
        world.refresh_sinr()?;
        let nr_ids = world.topology.nr_cell_ids();
        for u in 0..n_ues {
            let cell = match initial_cells {
                Some(cells) => {
                    let c = cells[u];
                    if !world.topology.is_nr(c) {
                        return Err(SimError::UnknownCell(c));
                    }
                    c
                }
                None => world.strongest_nr_cell(u, &nr_ids),
            };
            world.ues[u].serving_nr_cell = cell;
            world.events.push(Event {
                time_ms: 0,
                ue_id: u as UeId,
                kind: EventKind::Attach,
                detail: format!("nr={cell};lte={lte}"),
            });
        }
        Ok(world)
    }

    fn n_cells(&self) -> usize {
        self.topology.cells.len()
    }

    fn cell_index(&self, id: CellId) -> Option<usize> {
        self.topology.cells.iter().position(|c| c.cell_id == id)
    }

    fn strongest_nr_cell(&self, u: usize, nr_ids: &[CellId]) -> CellId {
        let mut best = nr_ids[0];
        let mut best_sinr = f64::NEG_INFINITY;
        for &id in nr_ids {
            let s = self.sinr_db(u, id);
            if s > best_sinr {
                best_sinr = s;
                best = id;
            }
        }
        best
    }

    /// Latest SINR of UE index `u` towards `cell`.
    pub fn sinr_db(&self, u: usize, cell: CellId) -> f64 {
        let c = self.cell_index(cell).expect("known cell");
        self.sinr[u * self.n_cells() + c]
    }

    pub fn shadowing_db(&self, u: usize) -> &[f64] {
        let n = self.n_cells();
        &self.shadowing[u * n..(u + 1) * n]
    }

    fn draw_shadowing(&mut self) {
        let sigma = self.config.shadowing_sigma_db;
        if sigma == 0.0 {
            self.shadowing.iter_mut().for_each(|s| *s = 0.0);
            return;
        }
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        for s in self.shadowing.iter_mut() {
            *s = normal.sample(&mut self.shadow_rng);
        }
    }

    fn refresh_sinr(&mut self) -> Result<(), SimError> {
        let n = self.n_cells();
        for u in 0..self.ues.len() {
            let pos = self.ues[u].position;
            for c in 0..n {
                let id = self.topology.cells[c].cell_id;
                let shadow = &self.shadowing[u * n..(u + 1) * n];
                self.sinr[u * n + c] = compute_sinr_db(&pos, id, &self.topology, shadow, &self.link)?;
            }
        }
        Ok(())
    }


    pub fn ue_index(&self, ue_id: UeId) -> Option<usize> {
        self.ues.iter().position(|u| u.ue_id == ue_id)
    }

    pub fn closed_window(&self) -> Option<&ClosedWindow> {
        self.closed.as_ref()
    }

    fn window_start(&mut self) {
        let window = self.now_ms / self.config.report_period_ms;
        if window != self.shadow_window {
            self.draw_shadowing();
            self.shadow_window = window;
        }
        // Split uses the previous window's achievable rates, i.e. the SINR
        // snapshot taken before this window's shadowing applies.
        let n = self.n_cells();
        let window_s = self.config.report_period_ms as f64 / 1000.0;
        let lte_idx = self.cell_index(self.topology.lte_cell_id()).expect("lte cell");
        for u in 0..self.ues.len() {
            let nr_idx = self.cell_index(self.ues[u].serving_nr_cell).expect("serving cell");
            let achievable = |c: usize| {
                let cell = &self.topology.cells[c];
                mcs_from_sinr(self.sinr[u * n + c], &self.config.mcs).spectral_eff_bps_per_hz
                    * cell.bandwidth_hz
                    / self.prev_active[c].max(1) as f64
            };
            let (a_nr, a_lte) = (achievable(nr_idx), achievable(lte_idx));
            let f_nr = if a_nr + a_lte > 0.0 { a_nr / (a_nr + a_lte) } else { 0.5 };
            self.split_nr[u] = f_nr;
            let ue = &mut self.ues[u];
            if ue.traffic_model.is_full_buffer() {
                let budget = ue.traffic_model.nominal_bps() * window_s;
                ue.nr_backlog_bits = budget * f_nr;
                ue.lte_backlog_bits = budget * (1.0 - f_nr);
            }
            self.ue_acc[u] = UeAccum { nr_bits: 0.0, lte_bits: 0.0, serving: ue.serving_nr_cell };
        }
        for acc in self.cell_acc.iter_mut() {
            *acc = CellAccum::default();
        }
    }

    /// Advances the world by one step of `dt_ms` (must equal `sim_step_ms`).
    pub fn step(&mut self, dt_ms: u64) -> Result<(), SimError> {
        if dt_ms != self.config.sim_step_ms {
            return Err(SimError::BadStep { expected: self.config.sim_step_ms, got: dt_ms });
        }
        if self.now_ms % self.config.report_period_ms == 0 {
            self.window_start();
        }
        let dt_s = dt_ms as f64 / 1000.0;

        let bounds = self.topology.bounds;
        for (u, ue) in self.ues.iter_mut().enumerate() {
            if self.now_ms >= ue.next_direction_change_ms {
                ue.velocity = mobility::draw_velocity(
                    &mut self.mobility_rngs[u],
                    self.config.speed_min_mps,
                    self.config.speed_max_mps,
                );
                ue.next_direction_change_ms += self.config.direction_hold_ms;
            }
            mobility::advance(&mut ue.position, &mut ue.velocity, dt_s, &bounds);
        }
        self.refresh_sinr()?;

        for (u, ue) in self.ues.iter_mut().enumerate() {
            let mut bits = self.traffic[u].arrivals_bits(dt_ms as f64, &mut self.traffic_rngs[u]);
            if bits > 0.0 {
                let cap = self.config.burst_backlog_cap_s * ue.traffic_model.nominal_bps();
                bits = bits.min((cap - ue.backlog_bits()).max(0.0));
                ue.nr_backlog_bits += bits * self.split_nr[u];
                ue.lte_backlog_bits += bits * (1.0 - self.split_nr[u]);
            }
        }

        let grid = SlotGrid {
            slots: self.config.slots_per_step(),
            slot_s: self.config.slot_ms / 1000.0,
            prb_bandwidth_hz: self.config.prb_bandwidth_hz,
        };
        let n = self.n_cells();
        for c in 0..n {
            let cell = &self.topology.cells[c];
            let mut requests = Vec::new();
            let mut owners = Vec::new();
            for (u, ue) in self.ues.iter().enumerate() {
                if self.now_ms < ue.ho_freeze_until_ms {
                    continue;
                }
                let demand = match cell.kind {
                    CellKind::Nr if ue.serving_nr_cell == cell.cell_id => ue.nr_backlog_bits,
                    CellKind::Lte if ue.lte_anchor == cell.cell_id => ue.lte_backlog_bits,
                    _ => continue,
                };
                requests.push(SchedRequest {
                    ue_id: ue.ue_id,
                    serving_cell: cell.cell_id,
                    demand_bits: demand,
                    mcs: mcs_from_sinr(self.sinr[u * n + c], &self.config.mcs),
                });
                owners.push(u);
            }
            let sched = schedule_cell(cell, &requests, grid, &mut self.rotation[c])?;
            let acc = &mut self.cell_acc[c];
            acc.slots += grid.slots as u64;
            for (g, &u) in sched.grants.iter().zip(&owners) {
                if g.tb_count == 0 {
                    continue;
                }
                acc.prbs += g.prbs_granted;
                acc.bits += g.bits_served;
                acc.active.insert(g.ue_id);
                match g.modulation {
                    Modulation::Qpsk => acc.tbs.qpsk += g.tb_count,
                    Modulation::Qam16 => acc.tbs.qam16 += g.tb_count,
                    Modulation::Qam64 => acc.tbs.qam64 += g.tb_count,
                    Modulation::Outage => {}
                }
                let ue = &mut self.ues[u];
                match cell.kind {
                    CellKind::Nr => {
                        ue.nr_backlog_bits = (ue.nr_backlog_bits - g.bits_served).max(0.0);
                        self.ue_acc[u].nr_bits += g.bits_served;
                    }
                    CellKind::Lte => {
                        ue.lte_backlog_bits = (ue.lte_backlog_bits - g.bits_served).max(0.0);
                        self.ue_acc[u].lte_bits += g.bits_served;
                    }
                }
            }
        }

        self.now_ms += dt_ms;
        if self.now_ms % self.config.report_period_ms == 0 {
            self.close_window();
        }
        Ok(())
    }

    /// Steps until `now_ms` reaches the next report boundary.
    pub fn run_window(&mut self) -> Result<(), SimError> {
        let dt = self.config.sim_step_ms;
        loop {
            self.step(dt)?;
            if self.now_ms % self.config.report_period_ms == 0 {
                return Ok(());
            }
        }
    }

    fn close_window(&mut self) {
        let window_end_ms = self.now_ms;
        for (c, acc) in self.cell_acc.iter().enumerate() {
            let cell = &self.topology.cells[c];
            self.prev_active[c] = acc.active.len() as u32;
            self.cell_log.push(CellWindowRow {
                window_end_ms,
                cell_id: cell.cell_id,
                prbs_used: acc.prbs,
                prbs_available: acc.slots * cell.n_prb as u64,
                bits_served: acc.bits,
                tb_count: acc.tbs.total(),
                active_ues: acc.active.len() as u32,
                bandwidth_hz: cell.bandwidth_hz,
            });
        }
        for (u, acc) in self.ue_acc.iter().enumerate() {
            self.ue_log.push(UeWindowRow {
                window_end_ms,
                ue_id: self.ues[u].ue_id,
                serving_cell: acc.serving,
                nr_bits: acc.nr_bits,
                lte_bits: acc.lte_bits,
                serving_sinr_db: self.sinr_db(u, acc.serving),
            });
        }
        self.closed = Some(ClosedWindow {
            window_end_ms,
            cells: self.cell_acc.clone(),
            ues: self.ue_acc.clone(),
            sinr: self.sinr.clone(),
        });
    }

    /// Switches the PSCell of `ue_id` to `target`. Returns whether a handover
    /// actually happened (targeting the serving cell is a no-op).
    pub fn execute_handover(&mut self, ue_id: UeId, target: CellId) -> Result<bool, SimError> {
        let u = self.ue_index(ue_id).ok_or(SimError::UnknownUe(ue_id))?;
        if !self.topology.is_nr(target) {
            return Err(SimError::UnknownCell(target));
        }
        let now = self.now_ms;
        let interruption = self.config.ho_interruption_ms;
        let ue = &mut self.ues[u];
        if ue.serving_nr_cell == target {
            return Ok(false);
        }
        let detail = format!(
            "from={};to={};since_last_ms={}",
            ue.serving_nr_cell,
            target,
            now - ue.last_ho_time_ms
        );
        ue.serving_nr_cell = target;
        ue.last_ho_time_ms = now;
        ue.ho_freeze_until_ms = now + interruption;
        ue.ho_count += 1;
        self.ue_acc[u].serving = target;
        self.events.push(Event { time_ms: now, ue_id, kind: EventKind::Handover, detail });
        Ok(true)
    }

    /// KPM report of `node_id` (node ids equal cell ids) for the window ending
    /// at `window_end_ms`, which must be the most recently closed window.
    pub fn generate_kpm_report(&self, node_id: u32, window_end_ms: u64) -> Result<KpmReport, SimError> {
        let closed = self
            .closed
            .as_ref()
            .filter(|w| w.window_end_ms == window_end_ms)
            .ok_or(SimError::WindowNotClosed(window_end_ms))?;
        let c = self.cell_index(node_id).ok_or(SimError::UnknownCell(node_id))?;
        let cell = &self.topology.cells[c];
        let acc = &closed.cells[c];
        let capacity = (acc.slots * cell.n_prb as u64) as f64;
        let (q, m16, m64) = acc.tbs.shares();
        let cell_kpm = CellKpm {
            cell_id: cell.cell_id,
            prb_util_pct: if capacity > 0.0 { 100.0 * acc.prbs as f64 / capacity } else { 0.0 },
            active_ues: acc.active.len() as u32,
            tb_count: acc.tbs.total() as u32,
            share_qpsk: q,
            share_16qam: m16,
            share_64qam: m64,
        };
        let window_s = self.config.report_period_ms as f64 / 1000.0;
        let n = self.n_cells();
        let mut ues = Vec::new();
        for (u, ua) in closed.ues.iter().enumerate() {
            let ue_id = self.ues[u].ue_id;
            match cell.kind {
                CellKind::Nr if ua.serving == cell.cell_id => {
                    let mut sinr: Vec<(CellId, f64)> = self
                        .topology
                        .cells
                        .iter()
                        .enumerate()
                        .filter(|(_, x)| x.kind == CellKind::Nr)
                        .map(|(i, x)| (x.cell_id, closed.sinr[u * n + i]))
                        .collect();
                    sinr.sort_by_key(|&(id, _)| id);
                    ues.push(UeKpm {
                        ue_id,
                        pdcp_throughput_bps: (ua.nr_bits + ua.lte_bits) / window_s,
                        sinr_db_by_cell: sinr,
                    });
                }
                CellKind::Lte if self.ues[u].lte_anchor == cell.cell_id => ues.push(UeKpm {
                    ue_id,
                    pdcp_throughput_bps: ua.lte_bits / window_s,
                    sinr_db_by_cell: vec![(cell.cell_id, closed.sinr[u * n + c])],
                }),
                _ => {}
            }
        }
        Ok(KpmReport { node_id, window_end_ms, cell: cell_kpm, ues })
    }

    /// Capacity and accounting checks on the most recently closed window.
    pub fn check_window_invariants(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let Some(closed) = &self.closed else { return out };
        let w = closed.window_end_ms;
        let mut v = |what: String| out.push(Violation { window_end_ms: w, what });
        let slot_s = self.config.slot_ms / 1000.0;
        let max_se = self.config.mcs.se_64qam;
        for (c, acc) in closed.cells.iter().enumerate() {
            let cell = &self.topology.cells[c];
            let cap_prbs = acc.slots * cell.n_prb as u64;
            if acc.prbs > cap_prbs {
                v(format!("cell {}: {} PRBs > capacity {}", cell.cell_id, acc.prbs, cap_prbs));
            }
            let cap_bits = cap_prbs as f64 * self.config.prb_bandwidth_hz * max_se * slot_s;
            if acc.bits > cap_bits * (1.0 + 1e-12) {
                v(format!("cell {}: {} bits > capacity {}", cell.cell_id, acc.bits, cap_bits));
            }
            let (q, a, b) = acc.tbs.shares();
            if q + a + b > 1.0 + 1e-12 {
                v(format!("cell {}: modulation shares sum {}", cell.cell_id, q + a + b));
            }
            let util = if cap_prbs > 0 { 100.0 * acc.prbs as f64 / cap_prbs as f64 } else { 0.0 };
            if !(0.0..=100.0).contains(&util) {
                v(format!("cell {}: PRB utilization {util}", cell.cell_id));
            }
        }
        let window_s = self.config.report_period_ms as f64 / 1000.0;
        for (u, acc) in closed.ues.iter().enumerate() {
            let ue = &self.ues[u];
            let bits = acc.nr_bits + acc.lte_bits;
            if ue.traffic_model.is_full_buffer() && bits > 20e6 * window_s * (1.0 + 1e-9) {
                v(format!("ue {}: full-buffer throughput {} bps above cap", ue.ue_id, bits / window_s));
            }
            if !(bits >= 0.0) {
                v(format!("ue {}: negative or non-finite bits {bits}", ue.ue_id));
            }
        }
        let ue_bits: f64 = closed.ues.iter().map(|a| a.nr_bits + a.lte_bits).sum();
        let cell_bits: f64 = closed.cells.iter().map(|a| a.bits).sum();
        if (ue_bits - cell_bits).abs() > 1e-6 * cell_bits.max(1.0) {
            v(format!("accounting mismatch: ue bits {ue_bits} vs cell bits {cell_bits}"));
        }
        out
    }

    /// Digest of the full mutable state, for replay comparisons.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.now_ms.to_le_bytes());
        for ue in &self.ues {
            for x in [
                ue.position.x,
                ue.position.y,
                ue.velocity.x,
                ue.velocity.y,
                ue.nr_backlog_bits,
                ue.lte_backlog_bits,
            ] {
                h.update(x.to_bits().to_le_bytes());
            }
            for x in [ue.serving_nr_cell as u64, ue.last_ho_time_ms, ue.ho_freeze_until_ms, ue.next_direction_change_ms] {
                h.update(x.to_le_bytes());
            }
        }
        for t in &self.traffic {
            h.update([t.on as u8]);
            h.update(t.phase_left_ms.to_bits().to_le_bytes());
        }
        for x in self.shadowing.iter().chain(&self.sinr).chain(&self.split_nr) {
            h.update(x.to_bits().to_le_bytes());
        }
        for r in &self.rotation {
            h.update(r.to_le_bytes());
        }
        h.update((self.events.len() as u64).to_le_bytes());
        hex::encode(h.finalize())
    }

    pub fn write_events_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["time_ms", "ue_id", "event_kind", "detail"])?;
        for e in &self.events {
            wr.write_record([
                e.time_ms.to_string(),
                e.ue_id.to_string(),
                e.kind.as_str().to_string(),
                e.detail.clone(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}
