//! Scenario files: what to simulate, described as flat key/value sections.
//!
//! The format is line-oriented. `[section]` opens a section, `key = value`
//! sets a field, `#` starts a comment line. `[scenario]`, `[timing]`,
//! `[env]`, and `[detectors]` may appear once; `[cell]` and `[ue]` repeat.
//! An `[attack]` section attaches to the most recent `[cell]`.
//!
//! ```text
//! [scenario]
//! name = ta_delta_30
//! duration_ms = 600000
//! seed = 1
//!
//! [cell]
//! id = cell1
//! pos_m = 0
//! tx_power_dbm = 30
//!
//! [cell]
//! id = rogue1
//! pos_m = 200
//! tx_power_dbm = 35
//! clone_of = cell1
//!
//! [attack]
//! kind = ta_delta
//! delta_units = 30
//!
//! [ue]
//! id = ue0
//! pos_m = 100
//! connect_at_ms = 1000
//! ```
//!
//! Parsing and validation are separate failure classes: syntax problems
//! report a line number, semantic problems report a field path like
//! `cells[1].attack.delta_units`.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::codec::{PlmnId, Sib1Message, SiWindowLength};
use crate::defaults::{
    DETECT_TA_RSRP_TOL_FACTOR, DETECT_VALUETAG_MAX_UPDATES, DETECT_VALUETAG_WINDOW_MS,
    PAGING_CYCLE_MS, PAGING_WAKE_MS, SI_ACQ_ACTIVE_MS, SYNC_EVAL_MS,
};
use crate::detect::DetectorConfig;
use crate::gnb::{default_attack_period_ms, AttackProfile, CellConfig};
use crate::sim::env::RadioEnvironment;
use crate::timing::{CpTolerance, Numerology};
use crate::ue::{RegistrationPolicy, SiCachePolicy, SyncMonitor, UePolicy};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ScenarioError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Invalid { path: path.into(), message: message.into() }
    }
}

/// Physical-layer knobs shared by every cell and UE in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingSection {
    pub mu: u8,
    pub base_quantum_us: f64,
    pub cp_tolerance_units: f64,
}

impl Default for TimingSection {
    fn default() -> Self {
        TimingSection {
            mu: 0,
            base_quantum_us: crate::defaults::BASE_QUANTUM_US,
            cp_tolerance_units: crate::defaults::CP_TOLERANCE_UNITS,
        }
    }
}

/// One UE to simulate. Without `connect_at_ms` the UE camps and stays
/// idle for the whole run, which is the power-measurement posture.
#[derive(Debug, Clone, PartialEq)]
pub struct UeSpec {
    pub id: String,
    pub pos_m: f64,
    pub connect_at_ms: Option<u64>,
    pub policy: UePolicy,
    pub n310: u32,
    pub n311: u32,
    pub t310_ms: u64,
    pub sync_eval_ms: u64,
    pub paging_cycle_ms: u64,
    pub paging_wake_ms: u64,
    pub si_acq_active_ms: u64,
}

impl UeSpec {
    pub fn new(id: impl Into<String>, pos_m: f64) -> Self {
        let sync = SyncMonitor::default();
        UeSpec {
            id: id.into(),
            pos_m,
            connect_at_ms: None,
            policy: UePolicy::default(),
            n310: sync.n310,
            n311: sync.n311,
            t310_ms: sync.t310_ms,
            sync_eval_ms: SYNC_EVAL_MS,
            paging_cycle_ms: PAGING_CYCLE_MS,
            paging_wake_ms: PAGING_WAKE_MS,
            si_acq_active_ms: SI_ACQ_ACTIVE_MS,
        }
    }
}

/// A fully validated simulation input.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub duration_ms: u64,
    pub seed: u64,
    pub timing: TimingSection,
    pub env: RadioEnvironment,
    pub cells: Vec<CellConfig>,
    pub ues: Vec<UeSpec>,
    pub detectors: DetectorConfig,
}

impl Scenario {
    pub fn numerology(&self) -> Numerology {
        Numerology::with_base(self.timing.mu, self.timing.base_quantum_us)
    }

    pub fn cp_tolerance(&self) -> CpTolerance {
        CpTolerance { units: self.timing.cp_tolerance_units }
    }

    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let sections = lex(text)?;
        assemble(sections)
    }
}

/// One `[section]` occurrence with its key/value lines.
struct RawSection {
    name: String,
    line: usize,
    entries: Vec<(String, String, usize)>,
}

impl RawSection {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _, _)| k == key).map(|(_, v, _)| v.as_str())
    }

    fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }
}

const SECTION_NAMES: [&str; 7] = ["scenario", "timing", "env", "cell", "attack", "ue", "detectors"];

fn lex(text: &str) -> Result<Vec<RawSection>, ScenarioError> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                return Err(ScenarioError::Parse {
                    line: line_no,
                    message: format!("unterminated section header {line:?}"),
                });
            };
            let name = name.trim().to_string();
            if !SECTION_NAMES.contains(&name.as_str()) {
                return Err(ScenarioError::Parse {
                    line: line_no,
                    message: format!("unknown section [{name}]"),
                });
            }
            sections.push(RawSection { name, line: line_no, entries: Vec::new() });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ScenarioError::Parse {
                line: line_no,
                message: format!("expected `key = value`, got {line:?}"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ScenarioError::Parse {
                line: line_no,
                message: "empty key or value".into(),
            });
        }
        let Some(section) = sections.last_mut() else {
            return Err(ScenarioError::Parse {
                line: line_no,
                message: format!("key {key:?} appears before any [section]"),
            });
        };
        if section.entries.iter().any(|(k, _, _)| *k == key) {
            return Err(ScenarioError::Parse {
                line: line_no,
                message: format!("duplicate key {key:?} in [{}]", section.name),
            });
        }
        section.entries.push((key, value, line_no));
    }
    Ok(sections)
}

fn parse_u64(path: &str, v: &str) -> Result<u64, ScenarioError> {
    let (radix, digits) = match v.strip_prefix("0x") {
        Some(hex) => (16, hex),
        None => (10, v),
    };
    u64::from_str_radix(digits, radix)
        .map_err(|_| ScenarioError::invalid(path, format!("expected unsigned integer, got {v:?}")))
}

fn parse_u32(path: &str, v: &str) -> Result<u32, ScenarioError> {
    let n = parse_u64(path, v)?;
    u32::try_from(n).map_err(|_| ScenarioError::invalid(path, format!("{n} does not fit in 32 bits")))
}

fn parse_i32(path: &str, v: &str) -> Result<i32, ScenarioError> {
    v.parse::<i32>()
        .map_err(|_| ScenarioError::invalid(path, format!("expected integer, got {v:?}")))
}

fn parse_f64(path: &str, v: &str) -> Result<f64, ScenarioError> {
    let x = v
        .parse::<f64>()
        .map_err(|_| ScenarioError::invalid(path, format!("expected number, got {v:?}")))?;
    if !x.is_finite() {
        return Err(ScenarioError::invalid(path, "value must be finite"));
    }
    Ok(x)
}

fn parse_bool(path: &str, v: &str) -> Result<bool, ScenarioError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ScenarioError::invalid(path, format!("expected true or false, got {v:?}"))),
    }
}

fn parse_window(path: &str, v: &str) -> Result<SiWindowLength, ScenarioError> {
    match v.trim_start_matches("ms") {
        "5" => Ok(SiWindowLength::Ms5),
        "10" => Ok(SiWindowLength::Ms10),
        "15" => Ok(SiWindowLength::Ms15),
        "20" => Ok(SiWindowLength::Ms20),
        _ => Err(ScenarioError::invalid(path, format!("expected one of 5/10/15/20 ms, got {v:?}"))),
    }
}

fn parse_plmn(path: &str, v: &str) -> Result<PlmnId, ScenarioError> {
    let err = || ScenarioError::invalid(path, format!("expected MCC/MNC like 001/01, got {v:?}"));
    let (mcc, mnc) = v.split_once('/').ok_or_else(err)?;
    if mcc.len() != 3 || !(mnc.len() == 2 || mnc.len() == 3) {
        return Err(err());
    }
    let mcc_n = mcc.parse::<u16>().map_err(|_| err())?;
    let mnc_n = mnc.parse::<u16>().map_err(|_| err())?;
    PlmnId::new(mcc_n, mnc_n, mnc.len() as u8)
        .map_err(|e| ScenarioError::invalid(path, e.to_string()))
}

fn reject_unknown_keys(
    section: &RawSection,
    path_prefix: &str,
    allowed: &[&str],
) -> Result<(), ScenarioError> {
    for (key, _, _) in &section.entries {
        if !allowed.contains(&key.as_str()) {
            return Err(ScenarioError::invalid(
                format!("{path_prefix}.{key}"),
                format!("unknown key in [{}]", section.name),
            ));
        }
    }
    Ok(())
}

/// Keys in `[cell]` that describe broadcast content and therefore clash
/// with `clone_of`, which copies the whole SIB1 from the target.
const SIB1_CONTENT_KEYS: [&str; 7] =
    ["value_tag", "tac", "si_window_ms", "cell_identity", "plmn", "cell_barred", "sib1_periodicity_ms"];

fn build_cell(section: &RawSection, index: usize, earlier: &[CellConfig]) -> Result<CellConfig, ScenarioError> {
    let path = |key: &str| format!("cells[{index}].{key}");
    reject_unknown_keys(
        section,
        &format!("cells[{index}]"),
        &["id", "pos_m", "tx_power_dbm", "clone_of", "value_tag", "tac", "si_window_ms",
          "cell_identity", "plmn", "cell_barred", "sib1_periodicity_ms"],
    )?;
    let id = section
        .get("id")
        .ok_or_else(|| ScenarioError::invalid(path("id"), "missing"))?
        .to_string();
    let pos_m = parse_f64(&path("pos_m"), section.get("pos_m").ok_or_else(|| ScenarioError::invalid(path("pos_m"), "missing"))?)?;
    let tx_power_dbm = parse_f64(
        &path("tx_power_dbm"),
        section.get("tx_power_dbm").ok_or_else(|| ScenarioError::invalid(path("tx_power_dbm"), "missing"))?,
    )?;

    let sib1 = if let Some(target_id) = section.get("clone_of") {
        for key in SIB1_CONTENT_KEYS {
            if section.has(key) {
                return Err(ScenarioError::invalid(
                    path(key),
                    format!("conflicts with clone_of = {target_id}: the clone copies the target's broadcast"),
                ));
            }
        }
        let target = earlier.iter().find(|c| c.id == target_id).ok_or_else(|| {
            ScenarioError::invalid(path("clone_of"), format!("no earlier cell named {target_id:?}"))
        })?;
        target.base_sib1.clone()
    } else {
        let mut sib1 = Sib1Message::default();
        if let Some(v) = section.get("value_tag") {
            sib1.value_tag = parse_u64(&path("value_tag"), v)? as u8;
        }
        if let Some(v) = section.get("tac") {
            sib1.tracking_area_code = parse_u32(&path("tac"), v)?;
        }
        if let Some(v) = section.get("si_window_ms") {
            sib1.si_window_length = parse_window(&path("si_window_ms"), v)?;
        }
        if let Some(v) = section.get("cell_identity") {
            sib1.cell_identity = parse_u64(&path("cell_identity"), v)?;
        }
        if let Some(v) = section.get("plmn") {
            let mut list = Vec::new();
            for part in v.split(',') {
                list.push(parse_plmn(&path("plmn"), part.trim())?);
            }
            sib1.plmn_list = list;
        }
        if let Some(v) = section.get("cell_barred") {
            sib1.cell_barred = parse_bool(&path("cell_barred"), v)?;
        }
        if let Some(v) = section.get("sib1_periodicity_ms") {
            sib1.sib1_periodicity_ms = parse_u64(&path("sib1_periodicity_ms"), v)?;
        }
        sib1
    };
    // Wire-level sanity on the assembled broadcast, reported against the
    // offending scenario field. The codec names its fields the same way
    // the scenario file does, apart from the tac/si_window_ms aliases.
    if let Err(e) = sib1.validate() {
        let field = match &e {
            crate::codec::CodecError::InvariantViolation { field, .. } => match *field {
                "tracking_area_code" => "tac",
                other => other,
            },
            _ => "sib1",
        };
        return Err(ScenarioError::invalid(path(field), e.to_string()));
    }

    let rogue = section.has("clone_of");
    Ok(CellConfig { id, pos_m, tx_power_dbm, base_sib1: sib1, attack: AttackProfile::None, rogue })
}

fn build_attack(section: &RawSection, cell_index: usize) -> Result<AttackProfile, ScenarioError> {
    let prefix = format!("cells[{cell_index}].attack");
    let path = |key: &str| format!("{prefix}.{key}");
    reject_unknown_keys(section, &prefix, &["kind", "delta_units", "period_ms", "tac_list", "window_seq"])?;
    let kind = section
        .get("kind")
        .ok_or_else(|| ScenarioError::invalid(path("kind"), "missing"))?;

    let reject_foreign = |allowed: &[&str]| -> Result<(), ScenarioError> {
        for key in ["delta_units", "period_ms", "tac_list", "window_seq"] {
            if section.has(key) && !allowed.contains(&key) {
                return Err(ScenarioError::invalid(
                    path(key),
                    format!("not a parameter of attack kind {kind:?}"),
                ));
            }
        }
        Ok(())
    };

    let period = |default: u64| -> Result<u64, ScenarioError> {
        match section.get("period_ms") {
            Some(v) => {
                let p = parse_u64(&path("period_ms"), v)?;
                if p == 0 {
                    return Err(ScenarioError::invalid(path("period_ms"), "must be positive"));
                }
                Ok(p)
            }
            None => Ok(default),
        }
    };

    match kind {
        "value_tag_increment" => {
            reject_foreign(&["period_ms"])?;
            Ok(AttackProfile::ValueTagIncrement { period_ms: period(default_attack_period_ms(kind))? })
        }
        "tac_cycle" => {
            reject_foreign(&["period_ms", "tac_list"])?;
            let raw = section
                .get("tac_list")
                .ok_or_else(|| ScenarioError::invalid(path("tac_list"), "missing"))?;
            let mut tac_list = Vec::new();
            for part in raw.split(',') {
                tac_list.push(parse_u32(&path("tac_list"), part.trim())?);
            }
            Ok(AttackProfile::TacCycle { period_ms: period(default_attack_period_ms(kind))?, tac_list })
        }
        "si_window_toggle" => {
            reject_foreign(&["window_seq"])?;
            let raw = section
                .get("window_seq")
                .ok_or_else(|| ScenarioError::invalid(path("window_seq"), "missing"))?;
            let mut seq = Vec::new();
            for part in raw.split(',') {
                seq.push(parse_window(&path("window_seq"), part.trim())?);
            }
            Ok(AttackProfile::SiWindowToggle { seq })
        }
        "ta_delta" => {
            reject_foreign(&["delta_units"])?;
            let raw = section
                .get("delta_units")
                .ok_or_else(|| ScenarioError::invalid(path("delta_units"), "missing"))?;
            Ok(AttackProfile::TaDelta { delta_units: parse_i32(&path("delta_units"), raw)? })
        }
        other => Err(ScenarioError::invalid(path("kind"), format!("unknown attack kind {other:?}"))),
    }
}

fn build_ue(section: &RawSection, index: usize) -> Result<UeSpec, ScenarioError> {
    let path = |key: &str| format!("ues[{index}].{key}");
    reject_unknown_keys(
        section,
        &format!("ues[{index}]"),
        &["id", "pos_m", "connect_at_ms", "registration_policy", "si_cache_policy",
          "n310", "n311", "t310_ms", "sync_eval_ms", "paging_cycle_ms", "paging_wake_ms",
          "si_acq_active_ms"],
    )?;
    let id = section
        .get("id")
        .ok_or_else(|| ScenarioError::invalid(path("id"), "missing"))?
        .to_string();
    let pos_m = parse_f64(&path("pos_m"), section.get("pos_m").ok_or_else(|| ScenarioError::invalid(path("pos_m"), "missing"))?)?;
    let mut spec = UeSpec::new(id, pos_m);

    if let Some(v) = section.get("connect_at_ms") {
        spec.connect_at_ms = Some(parse_u64(&path("connect_at_ms"), v)?);
    }
    if let Some(v) = section.get("registration_policy") {
        spec.policy.registration_policy = match v {
            "eager" => RegistrationPolicy::Eager,
            "deferred" => RegistrationPolicy::Deferred,
            _ => {
                return Err(ScenarioError::invalid(
                    path("registration_policy"),
                    format!("expected eager or deferred, got {v:?}"),
                ))
            }
        };
    }
    if let Some(v) = section.get("si_cache_policy") {
        spec.policy.si_cache_policy = match v {
            "refresh_before_use" => SiCachePolicy::RefreshBeforeUse,
            "stale_cache" => SiCachePolicy::StaleCache,
            _ => {
                return Err(ScenarioError::invalid(
                    path("si_cache_policy"),
                    format!("expected refresh_before_use or stale_cache, got {v:?}"),
                ))
            }
        };
    }
    if let Some(v) = section.get("n310") {
        spec.n310 = parse_u32(&path("n310"), v)?;
        if spec.n310 == 0 {
            return Err(ScenarioError::invalid(path("n310"), "must be positive"));
        }
    }
    if let Some(v) = section.get("n311") {
        spec.n311 = parse_u32(&path("n311"), v)?;
        if spec.n311 == 0 {
            return Err(ScenarioError::invalid(path("n311"), "must be positive"));
        }
    }
    let positive_ms = |key: &str| -> Result<Option<u64>, ScenarioError> {
        match section.get(key) {
            None => Ok(None),
            Some(v) => {
                let n = parse_u64(&path(key), v)?;
                if n == 0 {
                    return Err(ScenarioError::invalid(path(key), "must be positive"));
                }
                Ok(Some(n))
            }
        }
    };
    spec.t310_ms = positive_ms("t310_ms")?.unwrap_or(spec.t310_ms);
    spec.sync_eval_ms = positive_ms("sync_eval_ms")?.unwrap_or(spec.sync_eval_ms);
    spec.paging_cycle_ms = positive_ms("paging_cycle_ms")?.unwrap_or(spec.paging_cycle_ms);
    if let Some(v) = section.get("paging_wake_ms") {
        spec.paging_wake_ms = parse_u64(&path("paging_wake_ms"), v)?;
    }
    if let Some(v) = section.get("si_acq_active_ms") {
        spec.si_acq_active_ms = parse_u64(&path("si_acq_active_ms"), v)?;
    }
    Ok(spec)
}

fn assemble(sections: Vec<RawSection>) -> Result<Scenario, ScenarioError> {
    let mut name = "unnamed".to_string();
    let mut duration_ms: Option<u64> = None;
    let mut seed = 1u64;
    let mut timing = TimingSection::default();
    let mut env = RadioEnvironment::default();
    let mut cells: Vec<CellConfig> = Vec::new();
    let mut ues: Vec<UeSpec> = Vec::new();
    let mut seen_singletons: BTreeSet<&'static str> = BTreeSet::new();
    let mut detectors_enabled = true;
    let mut detectors_tx: Option<f64> = None;
    let mut detectors_tol = DETECT_TA_RSRP_TOL_FACTOR;
    let mut detectors_window = DETECT_VALUETAG_WINDOW_MS;
    let mut detectors_max = DETECT_VALUETAG_MAX_UPDATES;

    let mut singleton = |key: &'static str, line: usize| -> Result<(), ScenarioError> {
        if !seen_singletons.insert(key) {
            return Err(ScenarioError::Parse {
                line,
                message: format!("section [{key}] appears more than once"),
            });
        }
        Ok(())
    };

    for section in &sections {
        match section.name.as_str() {
            "scenario" => {
                singleton("scenario", section.line)?;
                reject_unknown_keys(section, "scenario", &["name", "duration_ms", "seed"])?;
                if let Some(v) = section.get("name") {
                    if v.contains(char::is_whitespace) {
                        return Err(ScenarioError::invalid("scenario.name", "must not contain whitespace"));
                    }
                    name = v.to_string();
                }
                if let Some(v) = section.get("duration_ms") {
                    duration_ms = Some(parse_u64("scenario.duration_ms", v)?);
                }
                if let Some(v) = section.get("seed") {
                    seed = parse_u64("scenario.seed", v)?;
                }
            }
            "timing" => {
                singleton("timing", section.line)?;
                reject_unknown_keys(section, "timing", &["mu", "base_quantum_us", "cp_tolerance_units"])?;
                if let Some(v) = section.get("mu") {
                    let mu = parse_u64("timing.mu", v)?;
                    if mu > 4 {
                        return Err(ScenarioError::invalid("timing.mu", "must be 0..=4"));
                    }
                    timing.mu = mu as u8;
                }
                if let Some(v) = section.get("base_quantum_us") {
                    timing.base_quantum_us = parse_f64("timing.base_quantum_us", v)?;
                    if timing.base_quantum_us <= 0.0 {
                        return Err(ScenarioError::invalid("timing.base_quantum_us", "must be positive"));
                    }
                }
                if let Some(v) = section.get("cp_tolerance_units") {
                    timing.cp_tolerance_units = parse_f64("timing.cp_tolerance_units", v)?;
                    if timing.cp_tolerance_units < 0.0 {
                        return Err(ScenarioError::invalid("timing.cp_tolerance_units", "must not be negative"));
                    }
                }
            }
            "env" => {
                singleton("env", section.line)?;
                reject_unknown_keys(section, "env", &["pathloss_exponent", "pathloss_ref_db", "rsrp_floor_dbm"])?;
                if let Some(v) = section.get("pathloss_exponent") {
                    env.pathloss_exponent = parse_f64("env.pathloss_exponent", v)?;
                    if env.pathloss_exponent <= 0.0 {
                        return Err(ScenarioError::invalid("env.pathloss_exponent", "must be positive"));
                    }
                }
                if let Some(v) = section.get("pathloss_ref_db") {
                    env.pathloss_ref_db = parse_f64("env.pathloss_ref_db", v)?;
                }
                if let Some(v) = section.get("rsrp_floor_dbm") {
                    env.rsrp_floor_dbm = parse_f64("env.rsrp_floor_dbm", v)?;
                }
            }
            "cell" => {
                let cell = build_cell(section, cells.len(), &cells)?;
                cells.push(cell);
            }
            "attack" => {
                let Some(index) = cells.len().checked_sub(1) else {
                    return Err(ScenarioError::Parse {
                        line: section.line,
                        message: "[attack] must follow the [cell] it applies to".into(),
                    });
                };
                if !cells[index].attack.is_none() {
                    return Err(ScenarioError::invalid(
                        format!("cells[{index}].attack"),
                        "cell already has an attack",
                    ));
                }
                cells[index].attack = build_attack(section, index)?;
                cells[index].rogue = true;
            }
            "ue" => {
                let ue = build_ue(section, ues.len())?;
                ues.push(ue);
            }
            "detectors" => {
                singleton("detectors", section.line)?;
                reject_unknown_keys(
                    section,
                    "detectors",
                    &["enabled", "assumed_tx_power_dbm", "ta_rsrp_tol_factor", "valuetag_window_ms", "valuetag_max_updates"],
                )?;
                if let Some(v) = section.get("enabled") {
                    detectors_enabled = parse_bool("detectors.enabled", v)?;
                }
                if let Some(v) = section.get("assumed_tx_power_dbm") {
                    detectors_tx = Some(parse_f64("detectors.assumed_tx_power_dbm", v)?);
                }
                if let Some(v) = section.get("ta_rsrp_tol_factor") {
                    detectors_tol = parse_f64("detectors.ta_rsrp_tol_factor", v)?;
                    if detectors_tol < 1.0 {
                        return Err(ScenarioError::invalid("detectors.ta_rsrp_tol_factor", "must be at least 1"));
                    }
                }
                if let Some(v) = section.get("valuetag_window_ms") {
                    detectors_window = parse_u64("detectors.valuetag_window_ms", v)?;
                    if detectors_window == 0 {
                        return Err(ScenarioError::invalid("detectors.valuetag_window_ms", "must be positive"));
                    }
                }
                if let Some(v) = section.get("valuetag_max_updates") {
                    detectors_max = parse_u32("detectors.valuetag_max_updates", v)?;
                }
            }
            other => unreachable!("lex admitted section {other}"),
        }
    }

    let Some(duration_ms) = duration_ms else {
        return Err(ScenarioError::invalid("scenario.duration_ms", "missing"));
    };
    if duration_ms == 0 {
        return Err(ScenarioError::invalid("scenario.duration_ms", "must be positive"));
    }
    if cells.is_empty() {
        return Err(ScenarioError::invalid("cells", "at least one cell is required"));
    }
    if ues.is_empty() {
        return Err(ScenarioError::invalid("ues", "at least one ue is required"));
    }
    let mut ids = BTreeSet::new();
    for (i, cell) in cells.iter().enumerate() {
        if !ids.insert(cell.id.clone()) {
            return Err(ScenarioError::invalid(format!("cells[{i}].id"), format!("duplicate id {:?}", cell.id)));
        }
        if cell.id.contains(char::is_whitespace) || cell.id.contains('=') {
            return Err(ScenarioError::invalid(format!("cells[{i}].id"), "must not contain whitespace or '='"));
        }
    }
    for (i, ue) in ues.iter().enumerate() {
        if !ids.insert(ue.id.clone()) {
            return Err(ScenarioError::invalid(format!("ues[{i}].id"), format!("duplicate id {:?}", ue.id)));
        }
        if ue.id.contains(char::is_whitespace) || ue.id.contains('=') {
            return Err(ScenarioError::invalid(format!("ues[{i}].id"), "must not contain whitespace or '='"));
        }
    }

    // The network-assumed transmit power defaults to what the legitimate
    // infrastructure actually radiates; a rogue's amplifier setting is
    // exactly what the defense cannot know.
    let assumed_tx = detectors_tx
        .or_else(|| cells.iter().find(|c| !c.rogue).map(|c| c.tx_power_dbm))
        .unwrap_or(30.0);
    let detectors = DetectorConfig {
        enabled: detectors_enabled,
        assumed_tx_power_dbm: assumed_tx,
        env,
        mu: Numerology::with_base(timing.mu, timing.base_quantum_us),
        ta_rsrp_tol_factor: detectors_tol,
        valuetag_window_ms: detectors_window,
        valuetag_max_updates: detectors_max,
    };

    Ok(Scenario { name, duration_ms, seed, timing, env, cells, ues, detectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[scenario]
duration_ms = 1000

[cell]
id = cell1
pos_m = 0
tx_power_dbm = 30

[ue]
id = ue0
pos_m = 100
";

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let sc = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(sc.name, "unnamed");
        assert_eq!(sc.seed, 1);
        assert_eq!(sc.duration_ms, 1000);
        assert_eq!(sc.cells.len(), 1);
        assert!(!sc.cells[0].rogue);
        assert_eq!(sc.ues[0].paging_cycle_ms, PAGING_CYCLE_MS);
        assert_eq!(sc.ues[0].connect_at_ms, None);
        assert!(sc.detectors.enabled);
        assert_eq!(sc.detectors.assumed_tx_power_dbm, 30.0);
    }

    fn two_cell_text(attack: &str) -> String {
        format!(
            "[scenario]\nname = t\nduration_ms = 600000\nseed = 7\n\n\
             [cell]\nid = cell1\npos_m = 0\ntx_power_dbm = 30\nvalue_tag = 7\ntac = 0x1000\n\n\
             [cell]\nid = rogue1\npos_m = 200\ntx_power_dbm = 35\nclone_of = cell1\n\n\
             [attack]\n{attack}\n\n\
             [ue]\nid = ue0\npos_m = 100\nconnect_at_ms = 1000\n"
        )
    }

    #[test]
    fn clone_cell_copies_broadcast_and_marks_rogue() {
        let sc = Scenario::parse(&two_cell_text("kind = ta_delta\ndelta_units = 30")).unwrap();
        assert_eq!(sc.cells[1].base_sib1, sc.cells[0].base_sib1);
        assert!(sc.cells[1].rogue);
        assert!(!sc.cells[0].rogue);
        assert_eq!(sc.cells[1].attack, AttackProfile::TaDelta { delta_units: 30 });
        // Detector assumes the legit cell's power, not the rogue's.
        assert_eq!(sc.detectors.assumed_tx_power_dbm, 30.0);
    }

    #[test]
    fn attack_value_errors_carry_a_field_path() {
        let err = Scenario::parse(&two_cell_text("kind = ta_delta\ndelta_units = banana")).unwrap_err();
        assert_eq!(
            err,
            ScenarioError::Invalid {
                path: "cells[1].attack.delta_units".into(),
                message: "expected integer, got \"banana\"".into(),
            }
        );
    }

    #[test]
    fn attack_kind_rejects_foreign_keys() {
        let err =
            Scenario::parse(&two_cell_text("kind = value_tag_increment\ndelta_units = 3")).unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { path, .. } if path == "cells[1].attack.delta_units"));
    }

    #[test]
    fn tac_cycle_parses_hex_list_and_default_period() {
        let sc = Scenario::parse(&two_cell_text("kind = tac_cycle\ntac_list = 0x1000, 0x2000, 0x3000")).unwrap();
        assert_eq!(
            sc.cells[1].attack,
            AttackProfile::TacCycle { period_ms: 30_000, tac_list: vec![0x1000, 0x2000, 0x3000] }
        );
    }

    #[test]
    fn window_toggle_parses_sequence() {
        let sc = Scenario::parse(&two_cell_text("kind = si_window_toggle\nwindow_seq = ms5, ms10, ms20")).unwrap();
        assert_eq!(
            sc.cells[1].attack,
            AttackProfile::SiWindowToggle {
                seq: vec![SiWindowLength::Ms5, SiWindowLength::Ms10, SiWindowLength::Ms20]
            }
        );
    }

    #[test]
    fn clone_of_conflicts_with_explicit_broadcast_fields() {
        let text = "[scenario]\nduration_ms = 1000\n\n[cell]\nid = a\npos_m = 0\ntx_power_dbm = 30\n\n\
                    [cell]\nid = b\npos_m = 1\ntx_power_dbm = 30\nclone_of = a\nvalue_tag = 3\n\n\
                    [ue]\nid = u\npos_m = 0\n";
        let err = Scenario::parse(text).unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { path, .. } if path == "cells[1].value_tag"));
    }

    #[test]
    fn attack_without_cell_is_a_parse_error() {
        let text = "[scenario]\nduration_ms = 1000\n\n[attack]\nkind = ta_delta\ndelta_units = 1\n";
        assert!(matches!(Scenario::parse(text).unwrap_err(), ScenarioError::Parse { line: 4, .. }));
    }

    #[test]
    fn duplicate_ids_are_rejected_across_cells_and_ues() {
        let text = "[scenario]\nduration_ms = 1000\n\n[cell]\nid = x\npos_m = 0\ntx_power_dbm = 30\n\n\
                    [ue]\nid = x\npos_m = 0\n";
        let err = Scenario::parse(text).unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { path, .. } if path == "ues[0].id"));
    }

    #[test]
    fn missing_duration_is_reported_at_its_path() {
        let text = "[scenario]\nname = x\n\n[cell]\nid = c\npos_m = 0\ntx_power_dbm = 30\n\n[ue]\nid = u\npos_m = 0\n";
        assert_eq!(
            Scenario::parse(text).unwrap_err(),
            ScenarioError::invalid("scenario.duration_ms", "missing")
        );
    }

    #[test]
    fn value_tag_out_of_range_maps_to_codec_bounds() {
        let text = "[scenario]\nduration_ms = 1000\n\n[cell]\nid = c\npos_m = 0\ntx_power_dbm = 30\nvalue_tag = 32\n\n[ue]\nid = u\npos_m = 0\n";
        let err = Scenario::parse(text).unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { path, .. } if path == "cells[0].value_tag"));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = Scenario::parse("[scenario]\nduration_ms 1000\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 2, .. }));
        let err = Scenario::parse("[scenario\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 1, .. }));
        let err = Scenario::parse("duration_ms = 1\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 1, .. }));
        let err = Scenario::parse("[scenario]\nseed = 1\nseed = 2\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 3, .. }));
    }

    #[test]
    fn ue_policies_parse() {
        let text = "[scenario]\nduration_ms = 1000\n\n[cell]\nid = c\npos_m = 0\ntx_power_dbm = 30\n\n\
                    [ue]\nid = u\npos_m = 0\nregistration_policy = eager\nsi_cache_policy = stale_cache\n";
        let sc = Scenario::parse(text).unwrap();
        assert_eq!(sc.ues[0].policy.registration_policy, RegistrationPolicy::Eager);
        assert_eq!(sc.ues[0].policy.si_cache_policy, SiCachePolicy::StaleCache);
    }

    #[test]
    fn timing_overrides_flow_into_numerology() {
        let text = "[scenario]\nduration_ms = 1000\n\n[timing]\nmu = 1\nbase_quantum_us = 0.6\ncp_tolerance_units = 10\n\n\
                    [cell]\nid = c\npos_m = 0\ntx_power_dbm = 30\n\n[ue]\nid = u\npos_m = 0\n";
        let sc = Scenario::parse(text).unwrap();
        assert_eq!(sc.numerology().ta_unit_us(), 0.3);
        assert_eq!(sc.cp_tolerance().units, 10.0);
        assert_eq!(sc.detectors.mu, sc.numerology());
    }
}
