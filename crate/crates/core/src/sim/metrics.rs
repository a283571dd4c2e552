//! Run metrics, derived entirely from the event log.
//!
//! There is deliberately no second bookkeeping path: the engine emits a
//! log, and every number below is a pure function of that log plus the
//! run parameters recorded in its header. Recomputing metrics from a
//! written log therefore reproduces the shipped metrics exactly.

use std::collections::BTreeMap;

use thiserror::Error;

use super::event::{EventKind, EventLog};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("log header is missing {key}")]
    MissingHeader { key: String },
    #[error("bad header value for {key}: {value:?}")]
    BadHeader { key: String, value: String },
    #[error("metrics csv: {message}")]
    Csv { message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub rlf_count: u64,
    pub reestablish_attempts: u64,
    pub si_reacquisitions: u64,
    pub registration_requests: u64,
    pub missed_si_windows: u64,
    /// Mean CONNECTION_ESTABLISHED to RLF gap; absent when nothing failed.
    pub mean_time_to_rlf_ms: Option<f64>,
    /// Receiver-active fraction, averaged over UEs. Active time is the
    /// union of connection activity (first RACH preamble to RLF or run
    /// end), one wake per paging cycle while idle, and one SI acquisition
    /// charge per reacquisition.
    pub duty_cycle: f64,
    /// Fraction of the run each UE spent connected with a clean uplink:
    /// a connection stops counting at its first failed uplink decode.
    pub connected_uptime_fraction: f64,
}

pub const CSV_HEADER: &str = "rlf_count,reestablish_attempts,si_reacquisitions,\
registration_requests,missed_si_windows,mean_time_to_rlf_ms,duty_cycle,connected_uptime_fraction";

/// Per-UE parameters recorded in the log header, one line per UE.
struct UeAcc {
    paging_cycle_ms: u64,
    paging_wake_ms: u64,
    si_acq_active_ms: u64,
    spans: Vec<(u64, u64)>,
    open: Option<u64>,
    conn_start: Option<u64>,
    clean_end: Option<u64>,
    clean_ms: u64,
    reacquisitions: u64,
}

impl UeAcc {
    fn active_ms(&self, duration_ms: u64) -> u64 {
        let span_ms: u64 = self.spans.iter().map(|&(s, e)| e - s).sum();
        let mut paging = 0u64;
        let mut k = 1u64;
        while k * self.paging_cycle_ms < duration_ms {
            let t = k * self.paging_cycle_ms;
            if !self.spans.iter().any(|&(s, e)| s <= t && t < e) {
                paging += 1;
            }
            k += 1;
        }
        span_ms + self.reacquisitions * self.si_acq_active_ms + paging * self.paging_wake_ms
    }
}

fn header_u64(params: &BTreeMap<String, String>, key: &str) -> Result<u64, MetricsError> {
    let raw = params
        .get(key)
        .ok_or_else(|| MetricsError::MissingHeader { key: key.to_string() })?;
    raw.parse::<u64>()
        .map_err(|_| MetricsError::BadHeader { key: key.to_string(), value: raw.clone() })
}

/// Parses the `ue=<id> k=v ...` header lines.
fn ue_params(log: &EventLog) -> Result<Vec<(String, UeAcc)>, MetricsError> {
    let mut out = Vec::new();
    for line in &log.header {
        let mut tokens = line.split(' ');
        let Some(id) = tokens.next().and_then(|t| t.strip_prefix("ue=")) else {
            continue;
        };
        let mut map = BTreeMap::new();
        for tok in tokens {
            if let Some((k, v)) = tok.split_once('=') {
                map.insert(k.to_string(), v.to_string());
            }
        }
        let get = |key: &str| -> Result<u64, MetricsError> {
            let raw = map.get(key).ok_or_else(|| MetricsError::MissingHeader {
                key: format!("ue {id} {key}"),
            })?;
            raw.parse::<u64>().map_err(|_| MetricsError::BadHeader {
                key: format!("ue {id} {key}"),
                value: raw.clone(),
            })
        };
        out.push((
            id.to_string(),
            UeAcc {
                paging_cycle_ms: get("paging_cycle_ms")?,
                paging_wake_ms: get("paging_wake_ms")?,
                si_acq_active_ms: get("si_acq_active_ms")?,
                spans: Vec::new(),
                open: None,
                conn_start: None,
                clean_end: None,
                clean_ms: 0,
                reacquisitions: 0,
            },
        ))
    }
    if out.is_empty() {
        return Err(MetricsError::MissingHeader { key: "ue".into() });
    }
    Ok(out)
}

impl Metrics {
    /// Recomputes the metrics of a run from its log.
    pub fn derive(log: &EventLog) -> Result<Metrics, MetricsError> {
        let params = log.header_params();
        let duration_ms = header_u64(&params, "duration_ms")?;
        let mut ues = ue_params(log)?;
        let index: BTreeMap<String, usize> =
            ues.iter().enumerate().map(|(i, (id, _))| (id.clone(), i)).collect();

        let mut rlf_count = 0u64;
        let mut reestablish_attempts = 0u64;
        let mut si_reacquisitions = 0u64;
        let mut registration_requests = 0u64;
        let mut missed_si_windows = 0u64;
        let mut ttr_sum = 0f64;
        let mut ttr_n = 0u64;

        for ev in &log.events {
            let t = ev.time_ms;
            match ev.kind {
                EventKind::RachAttempt => {
                    if let Some(&i) = index.get(&ev.subject) {
                        if ues[i].1.open.is_none() {
                            ues[i].1.open = Some(t);
                        }
                    }
                }
                EventKind::ConnectionEstablished => {
                    if let Some(&i) = index.get(&ev.subject) {
                        ues[i].1.conn_start = Some(t);
                        ues[i].1.clean_end = None;
                    }
                }
                EventKind::UlDecode => {
                    if ev.get("ok") == Some("false") {
                        if let Some(&i) = ev.get("ue").and_then(|u| index.get(u)) {
                            let acc = &mut ues[i].1;
                            if acc.conn_start.is_some() && acc.clean_end.is_none() {
                                acc.clean_end = Some(t);
                            }
                        }
                    }
                }
                EventKind::Rlf => {
                    rlf_count += 1;
                    if let Some(&i) = index.get(&ev.subject) {
                        let acc = &mut ues[i].1;
                        if let Some(open) = acc.open.take() {
                            acc.spans.push((open, t));
                        }
                        if let Some(c) = acc.conn_start.take() {
                            ttr_sum += (t - c) as f64;
                            ttr_n += 1;
                            acc.clean_ms += acc.clean_end.take().unwrap_or(t) - c;
                        }
                    }
                }
                EventKind::ReestablishReq => reestablish_attempts += 1,
                EventKind::SiReacquisition => {
                    si_reacquisitions += 1;
                    if let Some(&i) = index.get(&ev.subject) {
                        ues[i].1.reacquisitions += 1;
                    }
                }
                EventKind::RegistrationRequest => registration_requests += 1,
                EventKind::MissedSi => missed_si_windows += 1,
                _ => {}
            }
        }

        let mut active_total = 0u64;
        let mut clean_total = 0u64;
        for (_, acc) in &mut ues {
            if let Some(open) = acc.open.take() {
                acc.spans.push((open, duration_ms));
            }
            if let Some(c) = acc.conn_start.take() {
                acc.clean_ms += acc.clean_end.take().unwrap_or(duration_ms) - c;
            }
            active_total += acc.active_ms(duration_ms);
            clean_total += acc.clean_ms;
        }
        let denom = (duration_ms * ues.len() as u64) as f64;
        Ok(Metrics {
            rlf_count,
            reestablish_attempts,
            si_reacquisitions,
            registration_requests,
            missed_si_windows,
            mean_time_to_rlf_ms: (ttr_n > 0).then(|| ttr_sum / ttr_n as f64),
            duty_cycle: active_total as f64 / denom,
            connected_uptime_fraction: clean_total as f64 / denom,
        })
    }

    pub fn to_csv(&self) -> String {
        let mean = self.mean_time_to_rlf_ms.map(|v| format!("{v:.3}")).unwrap_or_default();
        format!(
            "{CSV_HEADER}\n{},{},{},{},{},{mean},{:.6},{:.6}\n",
            self.rlf_count,
            self.reestablish_attempts,
            self.si_reacquisitions,
            self.registration_requests,
            self.missed_si_windows,
            self.duty_cycle,
            self.connected_uptime_fraction,
        )
    }

    pub fn from_csv(text: &str) -> Result<Metrics, MetricsError> {
        let err = |message: String| MetricsError::Csv { message };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err("empty file".into()))?;
        if header != CSV_HEADER {
            return Err(err(format!("unexpected header {header:?}")));
        }
        let row = lines.next().ok_or_else(|| err("missing data row".into()))?;
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 8 {
            return Err(err(format!("expected 8 fields, got {}", fields.len())));
        }
        let int = |i: usize| -> Result<u64, MetricsError> {
            fields[i].parse::<u64>().map_err(|_| err(format!("bad integer {:?}", fields[i])))
        };
        let float = |i: usize| -> Result<f64, MetricsError> {
            fields[i].parse::<f64>().map_err(|_| err(format!("bad number {:?}", fields[i])))
        };
        Ok(Metrics {
            rlf_count: int(0)?,
            reestablish_attempts: int(1)?,
            si_reacquisitions: int(2)?,
            registration_requests: int(3)?,
            missed_si_windows: int(4)?,
            mean_time_to_rlf_ms: if fields[5].is_empty() { None } else { Some(float(5)?) },
            duty_cycle: float(6)?,
            connected_uptime_fraction: float(7)?,
        })
    }
}
