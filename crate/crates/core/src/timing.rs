//! Uplink timing-advance arithmetic.
//!
//! A UE applies the 12-bit TA command from the RAR as an absolute advance
//! N_TA on its uplink transmissions. The gNB decodes an uplink burst only
//! if it lands within the cyclic-prefix tolerance of the slot boundary;
//! the arrival offset is the advance minus the round trip. All quantities
//! here are microseconds unless a name says otherwise.

use thiserror::Error;

use crate::defaults::{BASE_QUANTUM_US, CP_TOLERANCE_UNITS, TA_COMMAND_MAX};

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("ta command {value} exceeds maximum {max}", max = TA_COMMAND_MAX)]
    TaOutOfRange { value: u16 },
}

/// Subcarrier-spacing numerology: index mu (spacing 15 * 2^mu kHz) plus
/// the configurable base TA quantum it scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerology {
    /// 0..=4.
    pub mu: u8,
    pub base_quantum_us: f64,
}

impl Numerology {
    pub fn new(mu: u8) -> Self {
        debug_assert!(mu <= 4);
        Numerology { mu, base_quantum_us: BASE_QUANTUM_US }
    }

    pub fn with_base(mu: u8, base_quantum_us: f64) -> Self {
        debug_assert!(mu <= 4 && base_quantum_us > 0.0);
        Numerology { mu, base_quantum_us }
    }

    /// Duration of one TA quantum: the base quantum at mu = 0, halving
    /// per numerology step.
    pub fn ta_unit_us(self) -> f64 {
        self.base_quantum_us / (1u64 << self.mu) as f64
    }
}

impl Default for Numerology {
    fn default() -> Self {
        Numerology::new(0)
    }
}

/// UE-side uplink timing state: the currently applied advance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TaState {
    pub nta_us: f64,
}

/// Decode tolerance of the uplink receiver, one cyclic prefix wide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpTolerance {
    pub units: f64,
}

impl Default for CpTolerance {
    fn default() -> Self {
        CpTolerance { units: CP_TOLERANCE_UNITS }
    }
}

impl CpTolerance {
    pub fn window_us(self, mu: Numerology) -> f64 {
        self.units * mu.ta_unit_us()
    }
}

/// Converts a TA command to an absolute advance in microseconds.
pub fn ta_to_time(ta_command: u16, mu: Numerology) -> Result<f64, TimingError> {
    if ta_command > TA_COMMAND_MAX {
        return Err(TimingError::TaOutOfRange { value: ta_command });
    }
    Ok(ta_command as f64 * mu.ta_unit_us())
}

/// Quantizes a desired advance to the nearest TA command, saturating at
/// the field bounds. This is what a gNB does when it measures the Msg1
/// round trip and picks the command for the RAR.
pub fn quantize_ta(advance_us: f64, mu: Numerology) -> u16 {
    let units = (advance_us / mu.ta_unit_us()).round();
    units.clamp(0.0, TA_COMMAND_MAX as f64) as u16
}

/// Applies an initial (absolute) TA command from a RAR.
pub fn apply_rar_ta(state: &mut TaState, ta_command: u16, mu: Numerology) -> Result<(), TimingError> {
    state.nta_us = ta_to_time(ta_command, mu)?;
    Ok(())
}

/// Arrival offset of an uplink burst at the gNB relative to the slot
/// boundary. Positive means early. The UE advances by N_TA; the signal
/// then spends one propagation delay in flight each way, so the residual
/// is the advance minus the round trip.
pub fn uplink_arrival_offset_us(state: TaState, one_way_delay_us: f64) -> f64 {
    state.nta_us - 2.0 * one_way_delay_us
}

/// Whether an uplink burst arriving at `offset_us` still decodes. The
/// boundary is inclusive: an offset exactly one tolerance window out
/// still lands inside the cyclic prefix.
pub fn is_uplink_decodable(offset_us: f64, tolerance: CpTolerance, mu: Numerology) -> bool {
    offset_us.abs() <= tolerance.window_us(mu)
}
