//! Default constants for timers, radio parameters, and detector thresholds.
//!
//! Every value here can be overridden from a scenario file; these are the
//! values a scenario gets when it does not say otherwise.

/// TA unit duration at numerology mu=0, in microseconds.
///
/// 3846 units at this quantum span roughly 2 ms of round trip, enough for
/// macro cells tens of kilometers out.
pub const BASE_QUANTUM_US: f64 = 0.5208;

/// Uplink decode tolerance, expressed in TA units at the configured numerology.
///
/// Sits between the stable band (offsets of 10 units and below decode fine)
/// and the failing band (20 units and above are rejected).
pub const CP_TOLERANCE_UNITS: f64 = 14.0;

/// Maximum valid Timing Advance Command value (12-bit field, 0..=3846).
pub const TA_COMMAND_MAX: u16 = 3846;

/// Consecutive out-of-sync indications before T310 starts.
pub const N310: u32 = 10;

/// Consecutive in-sync indications that stop a running T310.
pub const N311: u32 = 1;

/// T310 duration in ms. Together with N310 sync evaluations this puts the
/// deterministic time from connection establishment to RLF at 40 s.
pub const T310_MS: u64 = 30_000;

/// Period of uplink sync evaluation while connected, ms.
pub const SYNC_EVAL_MS: u64 = 1_000;

/// Idle-mode paging cycle, ms.
pub const PAGING_CYCLE_MS: u64 = 1_280;

/// Receiver-active time per paging occasion, ms.
pub const PAGING_WAKE_MS: u64 = 4;

/// Receiver-active time charged per SI reacquisition, ms (two SIB1 periods).
pub const SI_ACQ_ACTIVE_MS: u64 = 320;

/// SIB1 broadcast periodicity, ms.
pub const SIB1_PERIODICITY_MS: u64 = 160;

/// Log-distance pathloss exponent.
pub const PATHLOSS_EXPONENT: f64 = 2.7;

/// Pathloss at the 1 m reference distance, dB.
pub const PATHLOSS_REF_DB: f64 = 40.0;

/// Cells measured below this RSRP are not candidates for selection, dBm.
pub const RSRP_FLOOR_DBM: f64 = -120.0;

/// gNB-side latency from preamble detection to RAR transmission, ms.
pub const RAR_LATENCY_MS: u64 = 10;

/// Default RA response window, ms.
pub const RA_RESPONSE_WINDOW_MS: u64 = 20;

/// Msg3 grant time offset relative to the RAR, ms.
pub const MSG3_GRANT_DELAY_MS: u64 = 5;

/// Latency from Msg3 arrival to Msg4 (contention resolution), ms.
pub const MSG4_LATENCY_MS: u64 = 5;

/// Contention resolution timer, ms. Expiry without Msg4 retries the RACH.
pub const CONTENTION_RESOLUTION_MS: u64 = 64;

/// Delay from RLF to completed cell reselection, ms.
pub const RESELECT_DELAY_MS: u64 = 100;

/// Period of on-demand SI acquisition attempts while camped idle, ms.
pub const ON_DEMAND_SI_PERIOD_MS: u64 = 10_000;

/// Slots per frame used by the RA-RNTI formula.
pub const SLOTS_PER_FRAME: u32 = 14;

/// Speed of light in meters per microsecond.
pub const SPEED_OF_LIGHT_M_PER_US: f64 = 299.792;

/// valueTag increment period for the SIB1 spoofing profile, ms.
pub const VALUE_TAG_PERIOD_MS: u64 = 10_000;

/// TAC cycle period, ms.
pub const TAC_CYCLE_PERIOD_MS: u64 = 30_000;

/// TA/RSRP consistency detector: flag when the distance implied by the TA
/// command and the distance implied by RSRP disagree by more than this factor.
pub const DETECT_TA_RSRP_TOL_FACTOR: f64 = 3.0;

/// valueTag-rate detector: trailing window length, ms.
pub const DETECT_VALUETAG_WINDOW_MS: u64 = 120_000;

/// valueTag-rate detector: maximum benign tag transitions per window.
pub const DETECT_VALUETAG_MAX_UPDATES: u32 = 2;

/// First temporary C-RNTI a cell hands out.
pub const TC_RNTI_BASE: u16 = 0x0100;
