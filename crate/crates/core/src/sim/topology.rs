//! Deployment geometry: one central gNB co-located with the eNB and a hexagonal
//! ring of six gNBs at the inter-site distance.

use serde::{Deserialize, Serialize};

use super::{SimConfig, SimError};

pub type CellId = u32;

/// Id of the central NR cell; ring cells follow as `CENTRAL_NR_CELL + 1 + k`.
pub const CENTRAL_NR_CELL: CellId = 1;
pub const LTE_CELL: CellId = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Nr,
    Lte,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub cell_id: CellId,
    pub kind: CellKind,
    pub position: Point,
    pub tx_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub n_prb: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub cells: Vec<Cell>,
    pub bounds: Bounds,
}

impl Topology {
    pub fn cell(&self, id: CellId) -> Option<&Cell> {
        self.cells.iter().find(|c| c.cell_id == id)
    }

    /// NR cell ids in ascending order; this ordering fixes the feature layout.
    pub fn nr_cell_ids(&self) -> Vec<CellId> {
        let mut ids: Vec<CellId> = self
            .cells
            .iter()
            .filter(|c| c.kind == CellKind::Nr)
            .map(|c| c.cell_id)
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn lte_cell_id(&self) -> CellId {
        self.cells
            .iter()
            .find(|c| c.kind == CellKind::Lte)
            .map(|c| c.cell_id)
            .expect("topology always holds one LTE cell")
    }

    pub fn is_nr(&self, id: CellId) -> bool {
        self.cell(id).is_some_and(|c| c.kind == CellKind::Nr)
    }
}

/// Builds the 7-gNB / 1-eNB layout for `config`.
pub fn build_topology(config: &SimConfig) -> Result<Topology, SimError> {
    config.validate()?;
    let nr = |cell_id, position| Cell {
        cell_id,
        kind: CellKind::Nr,
        position,
        tx_power_dbm: config.nr_tx_power_dbm,
        bandwidth_hz: config.nr_bandwidth_hz,
        n_prb: config.nr_n_prb,
    };
    let mut cells = vec![nr(CENTRAL_NR_CELL, Point::default())];
    for k in 0..6u32 {
        let angle = (60.0 * k as f64).to_radians();
        let p = Point::new(config.isd_m * angle.cos(), config.isd_m * angle.sin());
        cells.push(nr(CENTRAL_NR_CELL + 1 + k, p));
    }
    cells.push(Cell {
        cell_id: LTE_CELL,
        kind: CellKind::Lte,
        position: Point::default(),
        tx_power_dbm: config.lte_tx_power_dbm,
        bandwidth_hz: config.lte_bandwidth_hz,
        n_prb: config.lte_n_prb,
    });

    let (mut min, mut max) = (Point::new(f64::MAX, f64::MAX), Point::new(f64::MIN, f64::MIN));
    for c in &cells {
        min.x = min.x.min(c.position.x);
        min.y = min.y.min(c.position.y);
        max.x = max.x.max(c.position.x);
        max.y = max.y.max(c.position.y);
    }
    let m = config.bounds_margin_m;
    let bounds = Bounds {
        min: Point::new(min.x - m, min.y - m),
        max: Point::new(max.x + m, max.y + m),
    };
    Ok(Topology { cells, bounds })
}
