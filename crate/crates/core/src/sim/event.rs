//! Event log: the simulator's single observable output.
//!
//! Every behavioral claim in the test suite is a claim about this log.
//! The serialized form is line-oriented text: comment lines carry run
//! parameters, event lines are `time_ms KIND subject key=value ...` with
//! single spaces. Two runs with the same scenario and seed must produce
//! byte-identical text, so field order is fixed at emission and nothing
//! here iterates a hash map.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EventParseError {
    #[error("line {line_no}: {reason}")]
    BadLine { line_no: usize, reason: String },
}

/// Closed vocabulary of observable event kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Broadcast,
    SiReacquisition,
    TacMismatchObserved,
    RegistrationRequest,
    MissedSi,
    RachAttempt,
    RarSent,
    Msg3Sent,
    UlDecode,
    T310Started,
    Rlf,
    ReestablishReq,
    ConnectionEstablished,
    DetectorAlert,
}

impl EventKind {
    pub const ALL: [EventKind; 14] = [
        EventKind::Broadcast,
        EventKind::SiReacquisition,
        EventKind::TacMismatchObserved,
        EventKind::RegistrationRequest,
        EventKind::MissedSi,
        EventKind::RachAttempt,
        EventKind::RarSent,
        EventKind::Msg3Sent,
        EventKind::UlDecode,
        EventKind::T310Started,
        EventKind::Rlf,
        EventKind::ReestablishReq,
        EventKind::ConnectionEstablished,
        EventKind::DetectorAlert,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Broadcast => "BROADCAST",
            EventKind::SiReacquisition => "SI_REACQUISITION",
            EventKind::TacMismatchObserved => "TAC_MISMATCH_OBSERVED",
            EventKind::RegistrationRequest => "REGISTRATION_REQUEST",
            EventKind::MissedSi => "MISSED_SI",
            EventKind::RachAttempt => "RACH_ATTEMPT",
            EventKind::RarSent => "RAR_SENT",
            EventKind::Msg3Sent => "MSG3_SENT",
            EventKind::UlDecode => "UL_DECODE",
            EventKind::T310Started => "T310_STARTED",
            EventKind::Rlf => "RLF",
            EventKind::ReestablishReq => "REESTABLISH_REQ",
            EventKind::ConnectionEstablished => "CONNECTION_ESTABLISHED",
            EventKind::DetectorAlert => "DETECTOR_ALERT",
        }
    }

    pub fn parse(s: &str) -> Option<EventKind> {
        EventKind::ALL.iter().copied().find(|k| k.as_str() == s)
    }
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One observable event. `subject` names the acting entity (a UE or cell
/// id); `fields` keep their emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub time_ms: u64,
    pub kind: EventKind,
    pub subject: String,
    pub fields: Vec<(String, String)>,
}

fn token_ok(s: &str) -> bool {
    !s.is_empty() && !s.contains(char::is_whitespace) && !s.contains('=')
}

impl SimEvent {
    pub fn new(time_ms: u64, kind: EventKind, subject: impl Into<String>) -> Self {
        let subject = subject.into();
        debug_assert!(token_ok(&subject), "bad subject {subject:?}");
        SimEvent { time_ms, kind, subject, fields: Vec::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        let value = value.to_string();
        debug_assert!(token_ok(key), "bad field key {key:?}");
        debug_assert!(
            !value.is_empty() && !value.contains(char::is_whitespace),
            "bad field value {value:?} for key {key:?}"
        );
        self.fields.push((key.to_string(), value));
        self
    }

    /// First value for `key`, if present.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn line(&self) -> String {
        let mut s = format!("{} {} {}", self.time_ms, self.kind, self.subject);
        for (k, v) in &self.fields {
            let _ = write!(s, " {k}={v}");
        }
        s
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<SimEvent, EventParseError> {
        let bad = |reason: String| EventParseError::BadLine { line_no, reason };
        let mut parts = line.split(' ');
        let time_ms = parts
            .next()
            .ok_or_else(|| bad("empty line".into()))?
            .parse::<u64>()
            .map_err(|e| bad(format!("bad timestamp: {e}")))?;
        let kind_str = parts.next().ok_or_else(|| bad("missing event kind".into()))?;
        let kind = EventKind::parse(kind_str)
            .ok_or_else(|| bad(format!("unknown event kind {kind_str:?}")))?;
        let subject = parts.next().ok_or_else(|| bad("missing subject".into()))?.to_string();
        if !token_ok(&subject) {
            return Err(bad(format!("bad subject {subject:?}")));
        }
        let mut fields = Vec::new();
        for tok in parts {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| bad(format!("field {tok:?} is not key=value")))?;
            if k.is_empty() || v.is_empty() {
                return Err(bad(format!("field {tok:?} has an empty side")));
            }
            fields.push((k.to_string(), v.to_string()));
        }
        Ok(SimEvent { time_ms, kind, subject, fields })
    }
}

/// Append-only event log plus run-parameter header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    /// Header lines, stored without the leading `# `.
    pub header: Vec<String>,
    pub events: Vec<SimEvent>,
}

impl EventLog {
    pub fn new() -> Self {
        EventLog::default()
    }

    pub fn add_header(&mut self, line: impl Into<String>) {
        let line = line.into();
        debug_assert!(!line.contains('\n'));
        self.header.push(line);
    }

    /// Appends an event. Time must not go backwards.
    pub fn push(&mut self, ev: SimEvent) {
        if let Some(last) = self.events.last() {
            debug_assert!(ev.time_ms >= last.time_ms, "time went backwards: {ev:?}");
        }
        self.events.push(ev);
    }

    /// All `key=value` pairs found on header lines, later lines winning.
    pub fn header_params(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        for line in &self.header {
            for tok in line.split(' ') {
                if let Some((k, v)) = tok.split_once('=') {
                    if !k.is_empty() && !v.is_empty() {
                        map.insert(k.to_string(), v.to_string());
                    }
                }
            }
        }
        map
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for line in &self.header {
            let _ = writeln!(s, "# {line}");
        }
        for ev in &self.events {
            let _ = writeln!(s, "{}", ev.line());
        }
        s
    }

    pub fn parse(text: &str) -> Result<EventLog, EventParseError> {
        let mut log = EventLog::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                log.header.push(rest.strip_prefix(' ').unwrap_or(rest).to_string());
                continue;
            }
            let ev = SimEvent::parse_line(line, line_no)?;
            if let Some(last) = log.events.last() {
                if ev.time_ms < last.time_ms {
                    return Err(EventParseError::BadLine {
                        line_no,
                        reason: format!(
                            "timestamp {} precedes previous event at {}",
                            ev.time_ms, last.time_ms
                        ),
                    });
                }
            }
            log.events.push(ev);
        }
        Ok(log)
    }

    pub fn iter_kind(&self, kind: EventKind) -> impl Iterator<Item = &SimEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format_is_space_separated_key_values() {
        let ev = SimEvent::new(1010, EventKind::RarSent, "cell1")
            .with("rapid", 23)
            .with("ta", 31);
        assert_eq!(ev.line(), "1010 RAR_SENT cell1 rapid=23 ta=31");
    }

    #[test]
    fn parse_inverts_line() {
        let ev = SimEvent::new(41020, EventKind::Rlf, "ue0").with("cause", "t310_expiry");
        let parsed = SimEvent::parse_line(&ev.line(), 1).unwrap();
        assert_eq!(parsed, ev);
    }

    #[test]
    fn log_text_roundtrip_with_header() {
        let mut log = EventLog::new();
        log.add_header("nrsim events v1");
        log.add_header("scenario=baseline seed=42 duration_ms=600000");
        log.push(SimEvent::new(0, EventKind::Broadcast, "cell1").with("value_tag", 0));
        log.push(SimEvent::new(160, EventKind::Broadcast, "cell1").with("value_tag", 0));
        let text = log.to_text();
        assert!(text.starts_with("# nrsim events v1\n"));
        assert_eq!(EventLog::parse(&text).unwrap(), log);
    }

    #[test]
    fn header_params_collects_pairs() {
        let mut log = EventLog::new();
        log.add_header("nrsim events v1");
        log.add_header("scenario=baseline seed=42 duration_ms=600000");
        let params = log.header_params();
        assert_eq!(params.get("seed").map(String::as_str), Some("42"));
        assert_eq!(params.get("duration_ms").map(String::as_str), Some("600000"));
        assert!(!params.contains_key("nrsim"));
    }

    #[test]
    fn parse_rejects_unknown_kind() {
        let err = EventLog::parse("5 NOT_A_KIND ue0\n").unwrap_err();
        assert!(matches!(err, EventParseError::BadLine { line_no: 1, .. }));
    }

    #[test]
    fn parse_rejects_time_regression() {
        let text = "10 RLF ue0\n5 RLF ue0\n";
        assert!(EventLog::parse(text).is_err());
    }

    #[test]
    fn every_kind_name_roundtrips() {
        for kind in EventKind::ALL {
            assert_eq!(EventKind::parse(kind.as_str()), Some(kind));
        }
    }
}
