//! Downlink traffic sources: a rate-capped full-buffer flow and exponential
//! on/off bursty flows.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrafficModel {
    FullBuffer20M,
    Bursty3M,
    Bursty750k,
    Bursty150k,
}

impl TrafficModel {
    pub const ALL: [TrafficModel; 4] = [
        TrafficModel::FullBuffer20M,
        TrafficModel::Bursty3M,
        TrafficModel::Bursty750k,
        TrafficModel::Bursty150k,
    ];

    /// Nominal rate: the saturation cap for full buffer, the long-run mean otherwise.
    pub fn nominal_bps(self) -> f64 {
        match self {
            TrafficModel::FullBuffer20M => 20e6,
            TrafficModel::Bursty3M => 3e6,
            TrafficModel::Bursty750k => 750e3,
            TrafficModel::Bursty150k => 150e3,
        }
    }

    pub fn is_full_buffer(self) -> bool {
        matches!(self, TrafficModel::FullBuffer20M)
    }

    /// Models are assigned round-robin so each covers a quarter of the UEs.
    pub fn for_ue_index(i: usize) -> Self {
        Self::ALL[i % 4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnOffParams {
    pub on_mean_ms: f64,
    pub off_mean_ms: f64,
}

/// Per-UE traffic generator state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSource {
    pub model: TrafficModel,
    pub on: bool,
    /// Time left in the current on/off phase.
    pub phase_left_ms: f64,
    pub params: OnOffParams,
}

impl TrafficSource {
    pub fn new(model: TrafficModel, params: OnOffParams, rng: &mut ChaCha8Rng) -> Self {
        let total = params.on_mean_ms + params.off_mean_ms;
        let on = rng.gen::<f64>() < params.on_mean_ms / total;
        let mut src = Self { model, on, phase_left_ms: 0.0, params };
        src.phase_left_ms = src.draw_phase(rng);
        src
    }

    fn draw_phase(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mean = if self.on { self.params.on_mean_ms } else { self.params.off_mean_ms };
        Exp::new(1.0 / mean).expect("positive phase mean").sample(rng)
    }

    /// Rate while in the on phase, chosen so the long-run mean equals the nominal rate.
    pub fn peak_bps(&self) -> f64 {
        let p = self.params;
        self.model.nominal_bps() * (p.on_mean_ms + p.off_mean_ms) / p.on_mean_ms
    }

    /// Bits arriving over the next `dt_ms` for a bursty source. Full-buffer
    /// sources are refilled per report window instead and return 0 here.
    pub fn arrivals_bits(&mut self, dt_ms: f64, rng: &mut ChaCha8Rng) -> f64 {
        if self.model.is_full_buffer() {
            return 0.0;
        }
        let mut left = dt_ms;
        let mut on_ms = 0.0;
        while left > 0.0 {
            let span = self.phase_left_ms.min(left);
            if self.on {
                on_ms += span;
            }
            left -= span;
            self.phase_left_ms -= span;
            if self.phase_left_ms <= 0.0 {
                self.on = !self.on;
                self.phase_left_ms = self.draw_phase(rng);
            }
        }
        self.peak_bps() * on_ms / 1000.0
    }
}
