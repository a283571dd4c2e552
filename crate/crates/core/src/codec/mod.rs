//! Bit-exact codecs for the two unprotected message families the attacks
//! manipulate: SIB1 and the RAR MAC PDU, plus RA-RNTI derivation.
//!
//! Neither message carries integrity protection on the air; everything here
//! is plaintext structure. The wire layout is a fixed big-endian packed
//! format: a 1-octet message-type tag, a 2-octet payload length in bits,
//! then the payload fields MSB-first, zero-padded to the octet boundary.

mod bits;
mod rar;
mod rnti;
mod sib1;

pub use bits::{BitReader, BitWriter};
pub use rar::{decode_rar, encode_rar};
pub use rnti::compute_ra_rnti;
pub use sib1::{decode_sib1, encode_sib1};

use thiserror::Error;

use crate::defaults::TA_COMMAND_MAX;

/// Message-type tag for an encoded SIB1.
pub const MSG_TYPE_SIB1: u8 = 0x01;
/// Message-type tag for an encoded RAR MAC PDU.
pub const MSG_TYPE_RAR: u8 = 0x02;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    /// Input bytes do not form a well-shaped message.
    #[error("malformed message: {reason}")]
    Malformed { reason: String },
    /// A field value violates its declared range.
    #[error("invariant violation: {field} = {value} outside 0..={max}")]
    InvariantViolation { field: &'static str, value: u64, max: u64 },
}

impl CodecError {
    pub(crate) fn range(field: &'static str, value: u64, max: u64) -> Self {
        CodecError::InvariantViolation { field, value, max }
    }
}

/// PLMN identity: 3-digit MCC plus a 2- or 3-digit MNC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlmnId {
    pub mcc: u16,
    pub mnc: u16,
    pub mnc_length: u8,
}

impl PlmnId {
    pub fn new(mcc: u16, mnc: u16, mnc_length: u8) -> Result<Self, CodecError> {
        let id = PlmnId { mcc, mnc, mnc_length };
        id.validate()?;
        Ok(id)
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if self.mcc > 999 {
            return Err(CodecError::range("plmn.mcc", self.mcc as u64, 999));
        }
        match self.mnc_length {
            2 => {
                if self.mnc > 99 {
                    return Err(CodecError::range("plmn.mnc", self.mnc as u64, 99));
                }
            }
            3 => {
                if self.mnc > 999 {
                    return Err(CodecError::range("plmn.mnc", self.mnc as u64, 999));
                }
            }
            other => {
                return Err(CodecError::range("plmn.mnc_length", other as u64, 3));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for PlmnId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:03}/{:0width$}", self.mcc, self.mnc, width = self.mnc_length as usize)
    }
}

/// si-WindowLength: duration of the on-demand SI scheduling window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SiWindowLength {
    Ms5,
    Ms10,
    Ms15,
    Ms20,
}

impl SiWindowLength {
    pub fn millis(self) -> u64 {
        match self {
            SiWindowLength::Ms5 => 5,
            SiWindowLength::Ms10 => 10,
            SiWindowLength::Ms15 => 15,
            SiWindowLength::Ms20 => 20,
        }
    }

    pub(crate) fn wire(self) -> u64 {
        match self {
            SiWindowLength::Ms5 => 0,
            SiWindowLength::Ms10 => 1,
            SiWindowLength::Ms15 => 2,
            SiWindowLength::Ms20 => 3,
        }
    }

    pub(crate) fn from_wire(v: u64) -> Self {
        // 2-bit field, all four values are valid
        match v {
            0 => SiWindowLength::Ms5,
            1 => SiWindowLength::Ms10,
            2 => SiWindowLength::Ms15,
            _ => SiWindowLength::Ms20,
        }
    }
}

impl std::fmt::Display for SiWindowLength {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ms{}", self.millis())
    }
}

/// RACH-ConfigCommon subset carried in SIB1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RachConfigCommon {
    pub preamble_format_id: u8,
    pub ra_response_window_ms: u16,
    pub power_ramping_step_db: u8,
    pub preamble_target_power_dbm: i16,
    pub prach_periodicity_ms: u16,
}

impl RachConfigCommon {
    pub fn validate(&self) -> Result<(), CodecError> {
        if self.preamble_format_id > 15 {
            return Err(CodecError::range("rach.preamble_format_id", self.preamble_format_id as u64, 15));
        }
        if self.ra_response_window_ms == 0 {
            return Err(CodecError::range("rach.ra_response_window_ms", 0, u16::MAX as u64));
        }
        if self.power_ramping_step_db > 15 {
            return Err(CodecError::range("rach.power_ramping_step_db", self.power_ramping_step_db as u64, 15));
        }
        if self.prach_periodicity_ms == 0 {
            return Err(CodecError::range("rach.prach_periodicity_ms", 0, u16::MAX as u64));
        }
        Ok(())
    }
}

impl Default for RachConfigCommon {
    fn default() -> Self {
        RachConfigCommon {
            preamble_format_id: 0,
            ra_response_window_ms: crate::defaults::RA_RESPONSE_WINDOW_MS as u16,
            power_ramping_step_db: 2,
            preamble_target_power_dbm: -110,
            prach_periodicity_ms: 10,
        }
    }
}

/// System Information Block 1: the broadcast container for the unprotected
/// access parameters (valueTag, TAC, si-WindowLength, RACH config).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sib1Message {
    /// 5-bit SI version counter, 0..=31, incremented modulo 32 on change.
    pub value_tag: u8,
    /// 24-bit tracking area code.
    pub tracking_area_code: u32,
    pub si_window_length: SiWindowLength,
    /// Non-empty, at most 15 entries (4-bit count on the wire).
    pub plmn_list: Vec<PlmnId>,
    /// 36-bit NR cell identity.
    pub cell_identity: u64,
    pub cell_barred: bool,
    pub rach_config: RachConfigCommon,
    pub sib1_periodicity_ms: u64,
}

pub const VALUE_TAG_MAX: u8 = 31;
pub const TAC_MAX: u32 = (1 << 24) - 1;
pub const CELL_IDENTITY_MAX: u64 = (1u64 << 36) - 1;
pub const PLMN_LIST_MAX: usize = 15;

impl Sib1Message {
    pub fn validate(&self) -> Result<(), CodecError> {
        if self.value_tag > VALUE_TAG_MAX {
            return Err(CodecError::range("value_tag", self.value_tag as u64, VALUE_TAG_MAX as u64));
        }
        if self.tracking_area_code > TAC_MAX {
            return Err(CodecError::range("tracking_area_code", self.tracking_area_code as u64, TAC_MAX as u64));
        }
        if self.plmn_list.is_empty() || self.plmn_list.len() > PLMN_LIST_MAX {
            return Err(CodecError::range("plmn_list.len", self.plmn_list.len() as u64, PLMN_LIST_MAX as u64));
        }
        for plmn in &self.plmn_list {
            plmn.validate()?;
        }
        if self.cell_identity > CELL_IDENTITY_MAX {
            return Err(CodecError::range("cell_identity", self.cell_identity, CELL_IDENTITY_MAX));
        }
        if self.sib1_periodicity_ms == 0 || self.sib1_periodicity_ms > u16::MAX as u64 {
            return Err(CodecError::range("sib1_periodicity_ms", self.sib1_periodicity_ms, u16::MAX as u64));
        }
        self.rach_config.validate()
    }

    /// One `field=value` line per field, for logs.
    pub fn debug_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("value_tag={}\n", self.value_tag));
        s.push_str(&format!("tracking_area_code=0x{:06x}\n", self.tracking_area_code));
        s.push_str(&format!("si_window_length={}\n", self.si_window_length));
        s.push_str(&format!(
            "plmn_list={}\n",
            self.plmn_list.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
        ));
        s.push_str(&format!("cell_identity=0x{:09x}\n", self.cell_identity));
        s.push_str(&format!("cell_barred={}\n", self.cell_barred));
        s.push_str(&format!("rach.preamble_format_id={}\n", self.rach_config.preamble_format_id));
        s.push_str(&format!("rach.ra_response_window_ms={}\n", self.rach_config.ra_response_window_ms));
        s.push_str(&format!("rach.power_ramping_step_db={}\n", self.rach_config.power_ramping_step_db));
        s.push_str(&format!("rach.preamble_target_power_dbm={}\n", self.rach_config.preamble_target_power_dbm));
        s.push_str(&format!("rach.prach_periodicity_ms={}\n", self.rach_config.prach_periodicity_ms));
        s.push_str(&format!("sib1_periodicity_ms={}\n", self.sib1_periodicity_ms));
        s
    }
}

impl Default for Sib1Message {
    fn default() -> Self {
        Sib1Message {
            value_tag: 0,
            tracking_area_code: 1,
            si_window_length: SiWindowLength::Ms10,
            plmn_list: vec![PlmnId { mcc: 1, mnc: 1, mnc_length: 2 }],
            cell_identity: 0x1,
            cell_barred: false,
            rach_config: RachConfigCommon::default(),
            sib1_periodicity_ms: crate::defaults::SIB1_PERIODICITY_MS,
        }
    }
}

/// PRACH transmission occasion, the inputs to RA-RNTI derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RachOccasion {
    pub slot_index: u32,
    pub freq_index: u32,
    pub frame_number: u32,
}

/// Msg3 uplink grant carried in the RAR payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Msg3Grant {
    /// 14-bit frequency domain resource assignment.
    pub freq_assign: u16,
    /// 4-bit time domain resource assignment (ms offset for Msg3).
    pub time_assign: u8,
    /// 4-bit MCS index.
    pub mcs: u8,
}

impl Msg3Grant {
    pub fn validate(&self) -> Result<(), CodecError> {
        if self.freq_assign > 0x3FFF {
            return Err(CodecError::range("msg3_grant.freq_assign", self.freq_assign as u64, 0x3FFF));
        }
        if self.time_assign > 15 {
            return Err(CodecError::range("msg3_grant.time_assign", self.time_assign as u64, 15));
        }
        if self.mcs > 15 {
            return Err(CodecError::range("msg3_grant.mcs", self.mcs as u64, 15));
        }
        Ok(())
    }
}

/// Random Access Response MAC PDU: subheader (RAPID) plus payload carrying
/// the 12-bit Timing Advance Command, the Msg3 grant, and the TC-RNTI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RarPdu {
    /// 6-bit random access preamble index echoed from Msg1.
    pub rapid: u8,
    /// Valid range 0..=3846 even though the 12-bit field admits 4095.
    pub ta_command: u16,
    pub msg3_grant: Msg3Grant,
    pub tc_rnti: u16,
}

impl RarPdu {
    pub fn validate(&self) -> Result<(), CodecError> {
        if self.rapid > 63 {
            return Err(CodecError::range("rapid", self.rapid as u64, 63));
        }
        if self.ta_command > TA_COMMAND_MAX {
            return Err(CodecError::range("ta_command", self.ta_command as u64, TA_COMMAND_MAX as u64));
        }
        self.msg3_grant.validate()
    }

    pub fn debug_text(&self) -> String {
        format!(
            "rapid={}\nta_command={}\nmsg3_grant.freq_assign={}\nmsg3_grant.time_assign={}\nmsg3_grant.mcs={}\ntc_rnti=0x{:04x}\n",
            self.rapid,
            self.ta_command,
            self.msg3_grant.freq_assign,
            self.msg3_grant.time_assign,
            self.msg3_grant.mcs,
            self.tc_rnti
        )
    }
}

/// Splits an encoded message into (type tag, payload bytes, payload bit length).
pub(crate) fn read_frame(bytes: &[u8]) -> Result<(u8, &[u8], usize), CodecError> {
    if bytes.len() < 3 {
        return Err(CodecError::Malformed {
            reason: format!("message header needs 3 octets, got {}", bytes.len()),
        });
    }
    let msg_type = bytes[0];
    let len_bits = u16::from_be_bytes([bytes[1], bytes[2]]) as usize;
    let payload = &bytes[3..];
    let expect_octets = len_bits.div_ceil(8);
    if payload.len() != expect_octets {
        return Err(CodecError::Malformed {
            reason: format!(
                "length field says {} bits ({} octets) but payload has {} octets",
                len_bits,
                expect_octets,
                payload.len()
            ),
        });
    }
    // Padding bits in the final octet must be zero.
    let pad_bits = expect_octets * 8 - len_bits;
    if pad_bits > 0 {
        let last = payload[payload.len() - 1];
        if last & ((1u8 << pad_bits) - 1) != 0 {
            return Err(CodecError::Malformed {
                reason: "nonzero padding bits".into(),
            });
        }
    }
    Ok((msg_type, payload, len_bits))
}

/// Frames a payload with the type tag and bit-length header.
pub(crate) fn write_frame(msg_type: u8, payload: Vec<u8>, len_bits: usize) -> Vec<u8> {
    debug_assert!(len_bits <= u16::MAX as usize);
    let mut out = Vec::with_capacity(3 + payload.len());
    out.push(msg_type);
    out.extend_from_slice(&(len_bits as u16).to_be_bytes());
    out.extend_from_slice(&payload);
    out
}
