//! Cell-side behavior: SIB1 scheduling, attack mutations, and the RACH
//! responder.
//!
//! A rogue cell is an ordinary cell with an attack profile. Its SIB1
//! content is a pure function of (config, time), so replaying a scenario
//! never depends on mutable broadcast state, and its RACH responder can
//! bias the timing advance or skip uplink validation.

use crate::codec::{Msg3Grant, RarPdu, Sib1Message, SiWindowLength};
use crate::defaults::{TAC_CYCLE_PERIOD_MS, TA_COMMAND_MAX, TC_RNTI_BASE, VALUE_TAG_PERIOD_MS};
use crate::sim::env::propagation_delay_us;
use crate::timing::{is_uplink_decodable, quantize_ta, CpTolerance, Numerology, TaState};

/// What a cell does to the protocol, if anything.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum AttackProfile {
    #[default]
    None,
    /// Bump the SIB1 valueTag every `period_ms`, forcing idle UEs into
    /// repeated full SI reacquisitions.
    ValueTagIncrement { period_ms: u64 },
    /// Cycle the tracking area code through `tac_list` every `period_ms`.
    /// Each change is a real SI change, so the valueTag advances with it;
    /// eager UEs answer every step with a registration update.
    TacCycle { period_ms: u64, tac_list: Vec<u32> },
    /// Rotate si-WindowLength through `seq` across SIB1 broadcast
    /// instants without touching the valueTag, so caches go stale and
    /// on-demand SI is monitored at the wrong offsets.
    SiWindowToggle { seq: Vec<SiWindowLength> },
    /// Add `delta_units` TA quanta to every RAR timing advance command.
    TaDelta { delta_units: i32 },
}

impl AttackProfile {
    pub fn is_none(&self) -> bool {
        matches!(self, AttackProfile::None)
    }

    /// Short label for log payloads.
    pub fn label(&self) -> &'static str {
        match self {
            AttackProfile::None => "none",
            AttackProfile::ValueTagIncrement { .. } => "value_tag_increment",
            AttackProfile::TacCycle { .. } => "tac_cycle",
            AttackProfile::SiWindowToggle { .. } => "si_window_toggle",
            AttackProfile::TaDelta { .. } => "ta_delta",
        }
    }
}

/// Static configuration of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellConfig {
    pub id: String,
    pub pos_m: f64,
    pub tx_power_dbm: f64,
    pub base_sib1: Sib1Message,
    pub attack: AttackProfile,
    /// Rogue cells complete random access without validating Msg3: the
    /// attacker wants the handshake to finish no matter how broken the
    /// uplink timing is.
    pub rogue: bool,
}

impl CellConfig {
    pub fn new(id: impl Into<String>, pos_m: f64, tx_power_dbm: f64, base_sib1: Sib1Message) -> Self {
        CellConfig { id: id.into(), pos_m, tx_power_dbm, base_sib1, attack: AttackProfile::None, rogue: false }
    }
}

/// Builds a rogue cell configuration by harvesting a target cell's
/// broadcast. Everything a passive sniffer can read is copied bit for
/// bit, including the cell identity: the impersonation is only convincing
/// because the clone is indistinguishable on the broadcast channel.
pub fn harvest_cell_config(
    target: &CellConfig,
    new_id: impl Into<String>,
    pos_m: f64,
    tx_power_dbm: f64,
) -> CellConfig {
    CellConfig {
        id: new_id.into(),
        pos_m,
        tx_power_dbm,
        base_sib1: target.base_sib1.clone(),
        attack: AttackProfile::None,
        rogue: true,
    }
}

/// The SIB1 a cell broadcasts at `now_ms`, with its attack mutation
/// applied. Pure in (config, time).
pub fn next_sib1(config: &CellConfig, now_ms: u64) -> Sib1Message {
    let mut sib1 = config.base_sib1.clone();
    match &config.attack {
        AttackProfile::None | AttackProfile::TaDelta { .. } => {}
        AttackProfile::ValueTagIncrement { period_ms } => {
            let steps = now_ms / (*period_ms).max(1);
            sib1.value_tag = ((sib1.value_tag as u64 + steps) % 32) as u8;
        }
        AttackProfile::TacCycle { period_ms, tac_list } => {
            if !tac_list.is_empty() {
                let steps = now_ms / (*period_ms).max(1);
                sib1.tracking_area_code = tac_list[(steps % tac_list.len() as u64) as usize];
                sib1.value_tag = ((sib1.value_tag as u64 + steps) % 32) as u8;
            }
        }
        AttackProfile::SiWindowToggle { seq } => {
            if !seq.is_empty() {
                let steps = now_ms / sib1.sib1_periodicity_ms.max(1);
                sib1.si_window_length = seq[(steps % seq.len() as u64) as usize];
            }
        }
    }
    sib1
}

/// Decode verdict for one uplink burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlVerdict {
    pub ok: bool,
    pub offset_us: f64,
}

/// Per-cell mutable runtime: just the TC-RNTI allocator.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRuntime {
    pub config: CellConfig,
    next_tc_rnti: u16,
}

impl CellRuntime {
    pub fn new(config: CellConfig) -> Self {
        CellRuntime { config, next_tc_rnti: TC_RNTI_BASE }
    }

    pub fn current_sib1(&self, now_ms: u64) -> Sib1Message {
        next_sib1(&self.config, now_ms)
    }

    /// Responds to a detected preamble. The cell measures the round trip
    /// from the preamble arrival, quantizes it to the nearest TA command,
    /// and, if it is running the TA attack, biases the command before the
    /// field's own clamp.
    pub fn handle_prach(&mut self, rapid: u8, ue_distance_m: f64, mu: Numerology) -> RarPdu {
        let round_trip_us = 2.0 * propagation_delay_us(ue_distance_m);
        let legit = quantize_ta(round_trip_us, mu) as i64;
        let biased = match self.config.attack {
            AttackProfile::TaDelta { delta_units } => legit + delta_units as i64,
            _ => legit,
        };
        let ta_command = biased.clamp(0, TA_COMMAND_MAX as i64) as u16;
        let tc_rnti = self.next_tc_rnti;
        self.next_tc_rnti = self.next_tc_rnti.wrapping_add(1);
        RarPdu {
            rapid,
            ta_command,
            msg3_grant: Msg3Grant { freq_assign: 100, time_assign: 5, mcs: 4 },
            tc_rnti,
        }
    }

    /// Attempts to decode an uplink burst from a UE applying `ta` at
    /// `ue_distance_m`. Purely a timing check; payload content is assumed
    /// intact whenever the burst lands inside the cyclic prefix.
    pub fn ul_decode(
        &self,
        ta: TaState,
        ue_distance_m: f64,
        tolerance: CpTolerance,
        mu: Numerology,
    ) -> UlVerdict {
        let offset_us =
            crate::timing::uplink_arrival_offset_us(ta, propagation_delay_us(ue_distance_m));
        UlVerdict { ok: is_uplink_decodable(offset_us, tolerance, mu), offset_us }
    }
}

/// Default attack cadences, exposed for scenario parsing.
pub fn default_attack_period_ms(attack_kind: &str) -> u64 {
    match attack_kind {
        "tac_cycle" => TAC_CYCLE_PERIOD_MS,
        _ => VALUE_TAG_PERIOD_MS,
    }
}
