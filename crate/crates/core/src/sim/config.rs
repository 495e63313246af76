//! Simulation configuration.

use serde::{Deserialize, Serialize};

use super::SimError;

/// Carrier configuration studied in the dense-urban scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    /// 850 MHz low band, 1700 m inter-site distance.
    Low850,
    /// 3.5 GHz C-band, 1000 m inter-site distance.
    CBand3500,
}

impl Band {
    pub fn carrier_freq_hz(self) -> f64 {
        match self {
            Band::Low850 => 850e6,
            Band::CBand3500 => 3.5e9,
        }
    }

    pub fn isd_m(self) -> f64 {
        match self {
            Band::Low850 => 1700.0,
            Band::CBand3500 => 1000.0,
        }
    }
}

/// Modulation thresholds and spectral efficiencies used by link adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsTable {
    /// Lowest SINR (dB) at which QPSK is decodable; below is outage.
    pub qpsk_min_db: f64,
    pub qam16_min_db: f64,
    pub qam64_min_db: f64,
    pub se_qpsk: f64,
    pub se_16qam: f64,
    pub se_64qam: f64,
}

impl Default for McsTable {
    fn default() -> Self {
        Self {
            qpsk_min_db: 0.0,
            qam16_min_db: 10.0,
            qam64_min_db: 18.0,
            se_qpsk: 1.0,
            se_16qam: 2.4,
            se_64qam: 4.0,
        }
    }
}

/// Everything needed to build and step one simulated deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub band: Band,
    pub carrier_freq_hz: f64,
    pub isd_m: f64,
    pub nr_bandwidth_hz: f64,
    pub lte_bandwidth_hz: f64,
    pub n_nr_cells: usize,
    pub n_lte_cells: usize,
    pub n_ues: usize,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub report_period_ms: u64,
    pub sim_step_ms: u64,
    pub sim_duration_ms: u64,
    pub ho_interruption_ms: u64,
    pub seed: u64,

    pub nr_tx_power_dbm: f64,
    pub lte_tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub shadowing_sigma_db: f64,
    pub direction_hold_ms: u64,
    pub bounds_margin_m: f64,
    /// Scheduling slot length; the step is divided into `sim_step_ms / slot_ms` slots.
    pub slot_ms: f64,
    pub prb_bandwidth_hz: f64,
    pub nr_n_prb: u32,
    pub lte_n_prb: u32,
    pub mcs: McsTable,
    /// Mean on/off phase duration of the bursty traffic sources.
    pub burst_on_mean_ms: f64,
    pub burst_off_mean_ms: f64,
    /// Backlog cap for bursty sources, expressed in seconds of nominal rate.
    pub burst_backlog_cap_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::for_band(Band::Low850)
    }
}

impl SimConfig {
    pub fn for_band(band: Band) -> Self {
        Self {
            band,
            carrier_freq_hz: band.carrier_freq_hz(),
            isd_m: band.isd_m(),
            nr_bandwidth_hz: 20e6,
            lte_bandwidth_hz: 10e6,
            n_nr_cells: 7,
            n_lte_cells: 1,
            n_ues: 20,
            speed_min_mps: 2.0,
            speed_max_mps: 4.0,
            report_period_ms: 100,
            sim_step_ms: 10,
            sim_duration_ms: 60_000,
            ho_interruption_ms: 30,
            seed: 1,
            nr_tx_power_dbm: 43.0,
            lte_tx_power_dbm: 46.0,
            noise_figure_db: 9.0,
            shadowing_sigma_db: 4.0,
            direction_hold_ms: 1000,
            bounds_margin_m: 200.0,
            slot_ms: 1.0,
            prb_bandwidth_hz: 180e3,
            nr_n_prb: 106,
            lte_n_prb: 50,
            mcs: McsTable::default(),
            burst_on_mean_ms: 500.0,
            burst_off_mean_ms: 500.0,
            burst_backlog_cap_s: 2.0,
        }
    }

    pub fn slots_per_step(&self) -> u32 {
        (self.sim_step_ms as f64 / self.slot_ms).round() as u32
    }

    pub fn steps_per_report(&self) -> u64 {
        self.report_period_ms / self.sim_step_ms
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.n_nr_cells != 7 {
            return bad(format!("n_nr_cells must be 7, got {}", self.n_nr_cells));
        }
        if self.n_lte_cells != 1 {
            return bad(format!("n_lte_cells must be 1, got {}", self.n_lte_cells));
        }
        let positive = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("isd_m", self.isd_m),
            ("nr_bandwidth_hz", self.nr_bandwidth_hz),
            ("lte_bandwidth_hz", self.lte_bandwidth_hz),
            ("slot_ms", self.slot_ms),
            ("prb_bandwidth_hz", self.prb_bandwidth_hz),
            ("burst_on_mean_ms", self.burst_on_mean_ms),
            ("burst_off_mean_ms", self.burst_off_mean_ms),
            ("burst_backlog_cap_s", self.burst_backlog_cap_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !(self.speed_min_mps >= 0.0 && self.speed_min_mps <= self.speed_max_mps) {
            return bad(format!(
                "speed range invalid: min {} max {}",
                self.speed_min_mps, self.speed_max_mps
            ));
        }
        if self.shadowing_sigma_db < 0.0 || !self.shadowing_sigma_db.is_finite() {
            return bad("shadowing_sigma_db must be >= 0".into());
        }
        if self.sim_step_ms == 0 || self.report_period_ms == 0 {
            return bad("sim_step_ms and report_period_ms must be > 0".into());
        }
        if self.report_period_ms % self.sim_step_ms != 0 {
            return bad(format!(
                "sim_step_ms ({}) must divide report_period_ms ({})",
                self.sim_step_ms, self.report_period_ms
            ));
        }
        let slots = self.sim_step_ms as f64 / self.slot_ms;
        if (slots - slots.round()).abs() > 1e-9 || slots < 1.0 {
            return bad("slot_ms must divide sim_step_ms".into());
        }
        if self.direction_hold_ms == 0 {
            return bad("direction_hold_ms must be > 0".into());
        }
        if self.nr_n_prb == 0 || self.lte_n_prb == 0 {
            return bad("PRB counts must be > 0".into());
        }
        let m = &self.mcs;
        if !(m.qpsk_min_db <= m.qam16_min_db && m.qam16_min_db <= m.qam64_min_db) {
            return bad("MCS thresholds must be nondecreasing".into());
        }
        if !(0.0 < m.se_qpsk && m.se_qpsk <= m.se_16qam && m.se_16qam <= m.se_64qam) {
            return bad("MCS spectral efficiencies must be positive and nondecreasing".into());
        }
        Ok(())
    }

    /// Parses a JSON config; absent fields take the band defaults of [`SimConfig::default`].
    /// When `band` is given, unspecified band-dependent fields follow that band.
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let invalid = |e: serde_json::Error| SimError::InvalidConfig(e.to_string());
        let overlay: serde_json::Value = serde_json::from_str(text).map_err(invalid)?;
        let serde_json::Value::Object(overlay) = overlay else {
            return Err(SimError::InvalidConfig("config must be a JSON object".into()));
        };
        let band = match overlay.get("band") {
            Some(b) => serde_json::from_value(b.clone()).map_err(invalid)?,
            None => Band::Low850,
        };
        let mut merged = serde_json::to_value(Self::for_band(band)).map_err(invalid)?;
        if let serde_json::Value::Object(base) = &mut merged {
            for (k, v) in overlay {
                if !base.contains_key(&k) {
                    return Err(SimError::InvalidConfig(format!("unknown config field `{k}`")));
                }
                base.insert(k, v);
            }
        }
        let cfg: SimConfig = serde_json::from_value(merged).map_err(invalid)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimConfig::for_band(Band::Low850).validate().unwrap();
        SimConfig::for_band(Band::CBand3500).validate().unwrap();
    }

    #[test]
    fn rejects_step_not_dividing_report() {
        let mut c = SimConfig::default();
        c.sim_step_ms = 30;
        assert!(matches!(c.validate(), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn rejects_inverted_speed_range() {
        let mut c = SimConfig::default();
        c.speed_min_mps = 5.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = SimConfig::from_json(r#"{"n_ues": 42, "seed": 9}"#).unwrap();
        assert_eq!(c.n_ues, 42);
        assert_eq!(c.seed, 9);
        assert_eq!(c.isd_m, 1700.0);
    }

    #[test]
    fn band_in_json_selects_band_defaults() {
        let c = SimConfig::from_json(r#"{"band": "CBand3500"}"#).unwrap();
        assert_eq!(c.isd_m, 1000.0);
        assert_eq!(c.carrier_freq_hz, 3.5e9);
        assert!(SimConfig::from_json(r#"{"n_uez": 3}"#).is_err());
    }
}
