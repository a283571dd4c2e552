//! UE-side protocol state: camping, SI caching, random access, and the
//! radio-link-failure machinery.
//!
//! Nothing in here owns a clock or a queue. Each method takes `now`,
//! mutates the context, and reports what happened through a small outcome
//! type; the simulation engine turns outcomes into log events and timer
//! scheduling. That split keeps every state transition unit-testable.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::codec::{RarPdu, Sib1Message, SiWindowLength};
use crate::defaults::{N310, N311, PAGING_CYCLE_MS, PAGING_WAKE_MS, SI_ACQ_ACTIVE_MS, T310_MS};
use crate::timing::{apply_rar_ta, Numerology, TaState, TimingError};

#[derive(Debug, Error, PartialEq)]
pub enum UeError {
    #[error("ue is not camped on any cell")]
    NotCamped,
    #[error("no cell measured above the detection floor")]
    NoCellAvailable,
    #[error("{op}: precondition violated: {detail}")]
    PreconditionViolated { op: &'static str, detail: String },
    #[error("rar rapid {got} does not match sent preamble {sent}")]
    ContentionLost { sent: u8, got: u8 },
    #[error(transparent)]
    Timing(#[from] TimingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrcState {
    Idle,
    Connecting,
    Connected,
}

impl std::fmt::Display for RrcState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RrcState::Idle => "IDLE",
            RrcState::Connecting => "CONNECTING",
            RrcState::Connected => "CONNECTED",
        };
        f.write_str(s)
    }
}

/// How the UE reacts to a tracking-area-code change in SIB1. TS 24.501
/// mandates an immediate registration update; handsets in the field defer
/// it until they have traffic to send, which is why TAC cycling fails to
/// generate the expected signaling storm against real devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegistrationPolicy {
    Eager,
    #[default]
    Deferred,
}

/// When the UE trusts its cached si-WindowLength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SiCachePolicy {
    /// Re-read the scheduling fields right before each on-demand SI
    /// occasion. Matches observed handset behavior and defeats the
    /// silent-window-change starvation.
    #[default]
    RefreshBeforeUse,
    /// Trust the cache until the valueTag changes, so a silent window
    /// change leaves the UE monitoring the wrong occasions.
    StaleCache,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UePolicy {
    pub registration_policy: RegistrationPolicy,
    pub si_cache_policy: SiCachePolicy,
}

/// The UE's cached copy of the serving cell's SIB1.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedSi {
    pub sib1: Sib1Message,
    pub acquired_at_ms: u64,
}

/// Result of processing one received SIB1 broadcast.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sib1Outcome {
    /// valueTag changed: full SI cache refresh happened and its power
    /// cost was charged.
    pub reacquired: bool,
    pub tac_change: Option<TacChange>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TacChange {
    pub old: u32,
    pub new: u32,
    /// Whether the policy answers the change with a registration update.
    pub registration: bool,
}

/// Out-of-sync / in-sync counting and the T310 guard timer.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncMonitor {
    pub n310: u32,
    pub n311: u32,
    pub t310_ms: u64,
    oos_count: u32,
    is_count: u32,
    t310_started_at: Option<u64>,
    /// Cancellation token: a scheduled expiry only fires if its epoch
    /// still matches, so a stopped timer cannot kill the link later.
    pub epoch: u64,
}

impl Default for SyncMonitor {
    fn default() -> Self {
        SyncMonitor {
            n310: N310,
            n311: N311,
            t310_ms: T310_MS,
            oos_count: 0,
            is_count: 0,
            t310_started_at: None,
            epoch: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncOutcome {
    NoChange,
    T310Started { expires_at_ms: u64, epoch: u64 },
    T310Stopped,
}

impl SyncMonitor {
    pub fn t310_running(&self) -> bool {
        self.t310_started_at.is_some()
    }

    /// Feeds one periodic sync evaluation into the counters.
    pub fn on_sync_indication(&mut self, now_ms: u64, in_sync: bool) -> SyncOutcome {
        if in_sync {
            if self.t310_started_at.is_some() {
                self.is_count += 1;
                if self.is_count >= self.n311 {
                    self.stop();
                    return SyncOutcome::T310Stopped;
                }
            } else {
                self.oos_count = 0;
            }
            SyncOutcome::NoChange
        } else {
            if self.t310_started_at.is_some() {
                // Already counting down; further OOS indications are moot.
                return SyncOutcome::NoChange;
            }
            self.oos_count += 1;
            if self.oos_count >= self.n310 {
                self.t310_started_at = Some(now_ms);
                self.is_count = 0;
                SyncOutcome::T310Started { expires_at_ms: now_ms + self.t310_ms, epoch: self.epoch }
            } else {
                SyncOutcome::NoChange
            }
        }
    }

    /// True if a scheduled expiry with this epoch should declare RLF.
    pub fn expiry_fires(&self, epoch: u64) -> bool {
        self.t310_started_at.is_some() && self.epoch == epoch
    }

    fn stop(&mut self) {
        self.t310_started_at = None;
        self.oos_count = 0;
        self.is_count = 0;
        self.epoch += 1;
    }

    pub fn reset(&mut self) {
        self.stop();
    }
}

/// Receiver-activity bookkeeping: the duty-cycle power proxy.
///
/// Active time accrues from three sources: one short wake per paging
/// cycle while idle, one full SI acquisition per reacquisition, and
/// wall-clock time while connected or performing random access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerAccumulator {
    pub active_rx_ms: u64,
    pub paging_cycle_ms: u64,
    pub paging_wake_ms: u64,
    pub si_acq_active_ms: u64,
}

impl Default for PowerAccumulator {
    fn default() -> Self {
        PowerAccumulator {
            active_rx_ms: 0,
            paging_cycle_ms: PAGING_CYCLE_MS,
            paging_wake_ms: PAGING_WAKE_MS,
            si_acq_active_ms: SI_ACQ_ACTIVE_MS,
        }
    }
}

impl PowerAccumulator {
    pub fn charge(&mut self, ms: u64) {
        self.active_rx_ms += ms;
    }

    pub fn charge_paging_wake(&mut self) {
        self.active_rx_ms += self.paging_wake_ms;
    }

    pub fn charge_si_acquisition(&mut self) {
        self.active_rx_ms += self.si_acq_active_ms;
    }

    /// Duty cycle over `total_ms` of simulated time.
    pub fn duty_cycle(&self, total_ms: u64) -> Result<f64, UeError> {
        if total_ms == 0 {
            return Err(UeError::PreconditionViolated {
                op: "account_power",
                detail: "total_ms must be positive".into(),
            });
        }
        Ok(self.active_rx_ms as f64 / total_ms as f64)
    }
}

/// Everything the simulator tracks per UE.
#[derive(Debug, Clone, PartialEq)]
pub struct UeContext {
    pub id: String,
    pub pos_m: f64,
    pub policy: UePolicy,
    pub state: RrcState,
    /// Set after an RLF: the next connection attempt is a
    /// re-establishment rather than a fresh registration.
    pub reestablish_pending: bool,
    pub camped_cell: Option<String>,
    pub cached_si: Option<CachedSi>,
    pub sync: SyncMonitor,
    pub power: PowerAccumulator,
    pub ta: TaState,
    pub tc_rnti: Option<u16>,
    pub sent_rapid: Option<u8>,
    pub rach_attempt: u32,
    pub connected_since: Option<u64>,
}

impl UeContext {
    pub fn new(id: impl Into<String>, pos_m: f64) -> Self {
        UeContext {
            id: id.into(),
            pos_m,
            policy: UePolicy::default(),
            state: RrcState::Idle,
            reestablish_pending: false,
            camped_cell: None,
            cached_si: None,
            sync: SyncMonitor::default(),
            power: PowerAccumulator::default(),
            ta: TaState::default(),
            tc_rnti: None,
            sent_rapid: None,
            rach_attempt: 0,
            connected_since: None,
        }
    }

    /// Picks the strongest detectable cell. Ties break toward the
    /// lexicographically smallest id so selection is deterministic.
    pub fn select_cell(
        measurements: &BTreeMap<String, f64>,
        floor_dbm: f64,
    ) -> Result<(String, f64), UeError> {
        let mut best: Option<(&String, f64)> = None;
        for (id, &rsrp) in measurements {
            if rsrp < floor_dbm {
                continue;
            }
            match best {
                Some((_, b)) if rsrp <= b => {}
                _ => best = Some((id, rsrp)),
            }
        }
        best.map(|(id, rsrp)| (id.clone(), rsrp)).ok_or(UeError::NoCellAvailable)
    }

    /// Camps on a cell and performs the initial SI acquisition. This is
    /// part of power-on, before the log starts, so it charges nothing.
    pub fn camp_on(&mut self, cell_id: impl Into<String>, sib1: Sib1Message, now_ms: u64) {
        self.camped_cell = Some(cell_id.into());
        self.cached_si = Some(CachedSi { sib1, acquired_at_ms: now_ms });
        self.state = RrcState::Idle;
    }

    /// Processes one SIB1 broadcast heard from the camped cell while idle.
    ///
    /// The valueTag is compared on every broadcast; a change forces a full
    /// reacquisition, refreshing the whole cache and charging the active
    /// decode time. The TAC is checked independently, and the response to
    /// a change depends on policy. A changed si-WindowLength alone, with
    /// no tag bump, updates nothing: that silence is the stale-window
    /// attack surface.
    pub fn handle_sib1(&mut self, sib1: &Sib1Message, now_ms: u64) -> Result<Sib1Outcome, UeError> {
        let cached = self.cached_si.as_mut().ok_or(UeError::NotCamped)?;
        let mut outcome = Sib1Outcome::default();

        let old_tac = cached.sib1.tracking_area_code;
        if sib1.value_tag != cached.sib1.value_tag {
            *cached = CachedSi { sib1: sib1.clone(), acquired_at_ms: now_ms };
            self.power.charge_si_acquisition();
            outcome.reacquired = true;
        }
        if sib1.tracking_area_code != old_tac {
            let registration = self.policy.registration_policy == RegistrationPolicy::Eager;
            outcome.tac_change =
                Some(TacChange { old: old_tac, new: sib1.tracking_area_code, registration });
            // The observed TAC is remembered either way so each change
            // reacts once, not once per broadcast.
            self.cached_si.as_mut().unwrap().sib1.tracking_area_code = sib1.tracking_area_code;
        }
        Ok(outcome)
    }

    /// Starts random access: picks up the cached RACH config and moves to
    /// CONNECTING. The preamble index is supplied by the caller so the
    /// engine's RNG stays the only entropy source.
    pub fn rach_initiate(&mut self, rapid: u8, now_ms: u64) -> Result<u32, UeError> {
        if self.state != RrcState::Idle {
            return Err(UeError::PreconditionViolated {
                op: "rach_initiate",
                detail: format!("requires IDLE, ue is {}", self.state),
            });
        }
        if self.camped_cell.is_none() || self.cached_si.is_none() {
            return Err(UeError::NotCamped);
        }
        let _ = now_ms;
        self.state = RrcState::Connecting;
        self.sent_rapid = Some(rapid);
        self.rach_attempt += 1;
        Ok(self.rach_attempt)
    }

    /// Applies a RAR: absolute timing advance plus the temporary RNTI.
    pub fn handle_rar(&mut self, rar: &RarPdu, mu: Numerology) -> Result<(), UeError> {
        if self.state != RrcState::Connecting {
            return Err(UeError::PreconditionViolated {
                op: "handle_rar",
                detail: format!("requires CONNECTING, ue is {}", self.state),
            });
        }
        let sent = self.sent_rapid.unwrap_or(0);
        if rar.rapid != sent {
            return Err(UeError::ContentionLost { sent, got: rar.rapid });
        }
        apply_rar_ta(&mut self.ta, rar.ta_command, mu)?;
        self.tc_rnti = Some(rar.tc_rnti);
        Ok(())
    }

    /// Msg4 received: contention resolved, connection up.
    pub fn handle_contention_resolution(&mut self, now_ms: u64) -> Result<(), UeError> {
        if self.state != RrcState::Connecting {
            return Err(UeError::PreconditionViolated {
                op: "handle_contention_resolution",
                detail: format!("requires CONNECTING, ue is {}", self.state),
            });
        }
        self.state = RrcState::Connected;
        self.reestablish_pending = false;
        self.connected_since = Some(now_ms);
        self.sync.reset();
        self.rach_attempt = 0;
        Ok(())
    }

    /// A RACH attempt ran out of road (RAR window or contention timer
    /// expired); fall back to idle so the next attempt can start.
    pub fn rach_abandon(&mut self) {
        self.state = RrcState::Idle;
        self.sent_rapid = None;
        self.tc_rnti = None;
        self.ta = TaState::default();
    }

    /// Declares radio link failure: drop to idle, mark that the next
    /// connection is a re-establishment, forget the uplink timing.
    pub fn declare_rlf(&mut self, _now_ms: u64) {
        self.state = RrcState::Idle;
        self.reestablish_pending = true;
        self.connected_since = None;
        self.sent_rapid = None;
        self.tc_rnti = None;
        self.ta = TaState::default();
        self.sync.reset();
        self.rach_attempt = 0;
    }
}

/// On-demand SI window `index` under window length `w`: the half-open
/// millisecond interval `[index*w, (index+1)*w)` within the SI period.
pub fn si_window_interval(w: SiWindowLength, index: u64) -> (u64, u64) {
    let ms = w.millis();
    (index * ms, (index + 1) * ms)
}

/// The first `count` monitoring windows a UE derives from its cached
/// si-WindowLength: consecutive, disjoint, `[start + k*W, start + (k+1)*W)`.
/// This is the simplified occasion formula; its attack-relevant property
/// is that a stale W yields wrong windows, and that survives any amount
/// of formula fidelity.
pub fn compute_si_monitoring_occasions(
    cached: &CachedSi,
    period_start_ms: u64,
    count: u64,
) -> Vec<(u64, u64)> {
    let w = cached.sib1.si_window_length.millis();
    (0..count)
        .map(|k| (period_start_ms + k * w, period_start_ms + (k + 1) * w))
        .collect()
}

/// Index of the on-demand SI message within its period. Index 1 makes
/// every distinct pair drawn from {ms5, ms10, ms20} land in disjoint
/// intervals, which is what lets a silent window change starve the UE.
pub const ON_DEMAND_SI_WINDOW_INDEX: u64 = 1;

/// Whether a UE monitoring with `cached` window length still hears an SI
/// message the cell schedules with `actual`. Any overlap counts as heard.
pub fn si_occasion_heard(cached: SiWindowLength, actual: SiWindowLength) -> bool {
    let (ue_start, ue_end) = si_window_interval(cached, ON_DEMAND_SI_WINDOW_INDEX);
    let (tx_start, tx_end) = si_window_interval(actual, ON_DEMAND_SI_WINDOW_INDEX);
    ue_start.max(tx_start) < ue_end.min(tx_end)
}
