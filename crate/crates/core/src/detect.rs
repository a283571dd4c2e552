//! Defense-side detectors.
//!
//! Detectors are pure observers: they read the same event stream the log
//! records and append DETECTOR_ALERT events of their own. They never feed
//! back into protocol behavior, so a run with detectors disabled differs
//! from the same run with them enabled only by the alert lines.
//!
//! Two checks are implemented. The TA consistency check compares the
//! distance implied by a RAR's timing advance against the distance implied
//! by the measured RSRP; a kilometer-scale TA paired with a strong signal
//! is the signature of TA manipulation. The valueTag rate check counts SI
//! version transitions per cell in a trailing window; benign cells change
//! SI rarely, a reacquisition-loop attacker changes it constantly.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::defaults::{
    DETECT_TA_RSRP_TOL_FACTOR, DETECT_VALUETAG_MAX_UPDATES, DETECT_VALUETAG_WINDOW_MS,
    SPEED_OF_LIGHT_M_PER_US,
};
use crate::sim::env::RadioEnvironment;
use crate::sim::event::{EventKind, SimEvent};
use crate::timing::Numerology;

pub const TA_RSRP_CHECK: &str = "ta_rsrp_check";
pub const VALUETAG_RATE_CHECK: &str = "valuetag_rate_check";

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("no transmit power known for cell {cell_id}")]
    UnknownCell { cell_id: String },
}

/// One TA/RSRP observation, as harvested from a RACH exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct TaRsrpSample {
    pub cell_id: String,
    pub ta_command: u16,
    pub rsrp_dbm: f64,
    pub time_ms: u64,
}

/// Outcome of one detector evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorVerdict {
    pub flagged: bool,
    pub score: f64,
    pub reason: String,
}

/// Checks whether a timing advance command is consistent with the distance
/// the signal strength implies. Both distances clamp at 1 m so the ratio
/// is always defined; the verdict flags when either distance exceeds the
/// other by more than `tol_factor` (strict).
pub fn ta_rsrp_check(
    sample: &TaRsrpSample,
    tx_power_dbm: Option<f64>,
    env: &RadioEnvironment,
    mu: Numerology,
    tol_factor: f64,
) -> Result<DetectorVerdict, DetectError> {
    let tx = tx_power_dbm.ok_or_else(|| DetectError::UnknownCell { cell_id: sample.cell_id.clone() })?;
    // The TA command encodes a round trip; halve it for distance.
    let one_way_us = sample.ta_command as f64 * mu.ta_unit_us() / 2.0;
    let d_ta = (one_way_us * SPEED_OF_LIGHT_M_PER_US).max(1.0);
    let d_rsrp = env.distance_for_rsrp_m(tx, sample.rsrp_dbm);
    let score = (d_ta / d_rsrp).max(d_rsrp / d_ta);
    let flagged = score > tol_factor;
    Ok(DetectorVerdict {
        flagged,
        score,
        reason: if flagged { "ta_rsrp_inconsistent".into() } else { "consistent".into() },
    })
}

/// Counts distinct-value transitions in the trailing window of a
/// time-ordered valueTag history. Flags when the count exceeds
/// `max_updates` (strict): benign SI changes are rare, so even a handful
/// of versions per two minutes is anomalous.
pub fn valuetag_rate_check(
    history: &[(u64, u8)],
    window_ms: u64,
    max_updates: u32,
) -> DetectorVerdict {
    let mut transitions = 0u32;
    if let Some(&(latest, _)) = history.last() {
        let cutoff = latest.saturating_sub(window_ms);
        for pair in history.windows(2) {
            let (t_prev, tag_prev) = pair[0];
            let (t, tag) = pair[1];
            debug_assert!(t >= t_prev, "history must be time-ordered");
            if tag != tag_prev && t >= cutoff {
                transitions += 1;
            }
        }
    }
    let flagged = transitions > max_updates;
    DetectorVerdict {
        flagged,
        score: transitions as f64,
        reason: if flagged { "value_tag_churn".into() } else { "normal_update_rate".into() },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub enabled: bool,
    /// Transmit power the network advertises for its cells. The check has
    /// no way to learn a rogue's true amplifier setting, and that blind
    /// spot is what it exploits: a cell running hotter than advertised
    /// looks nearer than any honest cell would.
    pub assumed_tx_power_dbm: f64,
    pub env: RadioEnvironment,
    pub mu: Numerology,
    /// Distance-ratio threshold for the TA consistency check, strict.
    pub ta_rsrp_tol_factor: f64,
    /// Trailing window for the valueTag rate check.
    pub valuetag_window_ms: u64,
    /// Distinct-tag transitions tolerated per window, strict.
    pub valuetag_max_updates: u32,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            enabled: true,
            assumed_tx_power_dbm: 30.0,
            env: RadioEnvironment::default(),
            mu: Numerology::new(0),
            ta_rsrp_tol_factor: DETECT_TA_RSRP_TOL_FACTOR,
            valuetag_window_ms: DETECT_VALUETAG_WINDOW_MS,
            valuetag_max_updates: DETECT_VALUETAG_MAX_UPDATES,
        }
    }
}

/// Sliding-window state for both detectors, fed one event at a time.
#[derive(Debug, Clone)]
pub struct DetectorBank {
    config: DetectorConfig,
    /// Last RACH attempt seen per cell: (ue id, measured rsrp dBm).
    pending_rach: BTreeMap<String, (String, f64)>,
    /// Per cell valueTag history, pruned to the detection window.
    tag_history: BTreeMap<String, Vec<(u64, u8)>>,
    /// Cells already reported for tag churn; one alert per cell.
    valuetag_alerted: BTreeSet<String>,
}

impl DetectorBank {
    pub fn new(config: DetectorConfig) -> Self {
        DetectorBank {
            config,
            pending_rach: BTreeMap::new(),
            tag_history: BTreeMap::new(),
            valuetag_alerted: BTreeSet::new(),
        }
    }

    pub fn enabled(&self) -> bool {
        self.config.enabled
    }

    /// Feeds one event through both detectors, returning any alerts. The
    /// alerts carry the same timestamp as the triggering event and name
    /// the suspect cell as subject.
    pub fn observe(&mut self, event: &SimEvent) -> Vec<SimEvent> {
        if !self.config.enabled {
            return Vec::new();
        }
        match event.kind {
            EventKind::RachAttempt => {
                if let (Some(cell), Some(Ok(rsrp))) =
                    (event.get("cell"), event.get("rsrp").map(|v| v.parse::<f64>()))
                {
                    self.pending_rach.insert(cell.to_string(), (event.subject.clone(), rsrp));
                }
                Vec::new()
            }
            EventKind::RarSent => self.on_rar(event),
            EventKind::Broadcast => self.on_broadcast(event),
            _ => Vec::new(),
        }
    }

    fn on_rar(&mut self, event: &SimEvent) -> Vec<SimEvent> {
        let Some(ta) = event.get("ta").and_then(|v| v.parse::<u16>().ok()) else {
            return Vec::new();
        };
        let Some((ue, rsrp)) = self.pending_rach.get(&event.subject).cloned() else {
            return Vec::new();
        };
        let sample = TaRsrpSample {
            cell_id: event.subject.clone(),
            ta_command: ta,
            rsrp_dbm: rsrp,
            time_ms: event.time_ms,
        };
        let verdict = ta_rsrp_check(
            &sample,
            Some(self.config.assumed_tx_power_dbm),
            &self.config.env,
            self.config.mu,
            self.config.ta_rsrp_tol_factor,
        )
        .expect("tx power is always supplied");
        if verdict.flagged {
            vec![SimEvent::new(event.time_ms, EventKind::DetectorAlert, &event.subject)
                .with("detector", TA_RSRP_CHECK)
                .with("ue", ue)
                .with("ta", ta)
                .with("score", format!("{:.2}", verdict.score))
                .with("reason", verdict.reason)]
        } else {
            Vec::new()
        }
    }

    fn on_broadcast(&mut self, event: &SimEvent) -> Vec<SimEvent> {
        let Some(tag) = event.get("value_tag").and_then(|v| v.parse::<u8>().ok()) else {
            return Vec::new();
        };
        let cell = event.subject.clone();
        let hist = self.tag_history.entry(cell.clone()).or_default();
        // Skip appends that change nothing so the history stays small.
        if hist.last().map(|&(_, t)| t) != Some(tag) {
            hist.push((event.time_ms, tag));
        }
        let cutoff = event.time_ms.saturating_sub(self.config.valuetag_window_ms);
        // Keep one sample before the cutoff so the transition into the
        // window still counts.
        while hist.len() > 1 && hist[1].0 < cutoff {
            hist.remove(0);
        }

        let verdict =
            valuetag_rate_check(hist, self.config.valuetag_window_ms, self.config.valuetag_max_updates);
        if verdict.flagged && !self.valuetag_alerted.contains(&cell) {
            self.valuetag_alerted.insert(cell.clone());
            vec![SimEvent::new(event.time_ms, EventKind::DetectorAlert, cell)
                .with("detector", VALUETAG_RATE_CHECK)
                .with("score", format!("{:.0}", verdict.score))
                .with("window_ms", self.config.valuetag_window_ms)
                .with("reason", verdict.reason)]
        } else {
            Vec::new()
        }
    }
}
