use serde::{Deserialize, Serialize};

use super::McsTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modulation {
    Outage,
    Qpsk,
    Qam16,
    Qam64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mcs {
    pub modulation: Modulation,
    pub spectral_eff_bps_per_hz: f64,
}

/// Piecewise-constant link adaptation.
pub fn mcs_from_sinr(sinr_db: f64, table: &McsTable) -> Mcs {
    let (modulation, se) = if sinr_db >= table.qam64_min_db {
        (Modulation::Qam64, table.se_64qam)
    } else if sinr_db >= table.qam16_min_db {
        (Modulation::Qam16, table.se_16qam)
    } else if sinr_db >= table.qpsk_min_db {
        (Modulation::Qpsk, table.se_qpsk)
    } else {
        (Modulation::Outage, 0.0)
    };
    Mcs { modulation, spectral_eff_bps_per_hz: se }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        let t = McsTable::default();
        let low = mcs_from_sinr(-10.0, &t);
        assert_eq!(low.modulation, Modulation::Outage);
        assert_eq!(low.spectral_eff_bps_per_hz, 0.0);
        let high = mcs_from_sinr(30.0, &t);
        assert_eq!(high.modulation, Modulation::Qam64);
        assert_eq!(high.spectral_eff_bps_per_hz, 4.0);
    }

    #[test]
    fn threshold_edges_belong_to_upper_class() {
        let t = McsTable::default();
        assert_eq!(mcs_from_sinr(0.0, &t).modulation, Modulation::Qpsk);
        assert_eq!(mcs_from_sinr(9.999, &t).modulation, Modulation::Qpsk);
        assert_eq!(mcs_from_sinr(10.0, &t).modulation, Modulation::Qam16);
        assert_eq!(mcs_from_sinr(18.0, &t).spectral_eff_bps_per_hz, 4.0);
    }

    #[test]
    fn sweep_is_nondecreasing() {
        let t = McsTable::default();
        let mut prev = f64::NEG_INFINITY;
        let mut prev_mod = Modulation::Outage;
        for i in 0..=600 {
            let sinr = -20.0 + 0.1 * i as f64;
            let m = mcs_from_sinr(sinr, &t);
            assert!(m.spectral_eff_bps_per_hz >= prev);
            assert!(m.modulation >= prev_mod);
            assert!([0.0, 1.0, 2.4, 4.0].contains(&m.spectral_eff_bps_per_hz));
            prev = m.spectral_eff_bps_per_hz;
            prev_mod = m.modulation;
        }
    }
}
