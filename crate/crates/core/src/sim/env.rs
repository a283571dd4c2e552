//! Radio environment: log-distance pathloss and free-space propagation.
//!
//! The model is deliberately coarse. RSRP only has to order cells
//! correctly and feed the TA/signal-strength consistency check, and the
//! propagation delay only has to produce round trips in the
//! single-microsecond range typical of sub-kilometer cells.

use crate::defaults::{PATHLOSS_EXPONENT, PATHLOSS_REF_DB, RSRP_FLOOR_DBM, SPEED_OF_LIGHT_M_PER_US};

/// One-way propagation delay over `distance_m` meters.
pub fn propagation_delay_us(distance_m: f64) -> f64 {
    distance_m / SPEED_OF_LIGHT_M_PER_US
}

/// Log-distance pathloss, referenced to 1 m. Distances under a meter
/// clamp to the reference point.
pub fn pathloss_db(distance_m: f64, exponent: f64, ref_db: f64) -> f64 {
    ref_db + 10.0 * exponent * distance_m.max(1.0).log10()
}

/// Propagation parameters shared by every link in a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioEnvironment {
    pub pathloss_exponent: f64,
    pub pathloss_ref_db: f64,
    /// Cells measured below this RSRP are not detectable at all.
    pub rsrp_floor_dbm: f64,
}

impl Default for RadioEnvironment {
    fn default() -> Self {
        RadioEnvironment {
            pathloss_exponent: PATHLOSS_EXPONENT,
            pathloss_ref_db: PATHLOSS_REF_DB,
            rsrp_floor_dbm: RSRP_FLOOR_DBM,
        }
    }
}

impl RadioEnvironment {
    /// Received power from a transmitter at `distance_m`.
    pub fn rsrp_dbm(&self, tx_power_dbm: f64, distance_m: f64) -> f64 {
        tx_power_dbm - pathloss_db(distance_m, self.pathloss_exponent, self.pathloss_ref_db)
    }

    /// Whether a measurement clears the detection floor.
    pub fn detectable(&self, rsrp_dbm: f64) -> bool {
        rsrp_dbm >= self.rsrp_floor_dbm
    }

    /// Inverts the pathloss model: the distance at which a transmitter of
    /// `tx_power_dbm` would be received at `rsrp_dbm`. Never below 1 m.
    pub fn distance_for_rsrp_m(&self, tx_power_dbm: f64, rsrp_dbm: f64) -> f64 {
        let loss = tx_power_dbm - rsrp_dbm;
        let d = 10f64.powf((loss - self.pathloss_ref_db) / (10.0 * self.pathloss_exponent));
        d.max(1.0)
    }
}
