//! RAR MAC PDU wire codec.
//!
//! Payload layout, MSB-first, 56 bits total:
//!
//! ```text
//! rapid                    6 bits
//! ta_command              12 bits   (valid 0..=3846)
//! msg3_grant.freq_assign  14 bits
//! msg3_grant.time_assign   4 bits
//! msg3_grant.mcs           4 bits
//! tc_rnti                 16 bits
//! ```
//!
//! The TA command range check runs on both encode and decode: a received
//! value above 3846 is rejected rather than clamped, mirroring how a UE
//! treats reserved codepoints.

use super::bits::{BitReader, BitWriter};
use super::{read_frame, write_frame, CodecError, Msg3Grant, RarPdu, MSG_TYPE_RAR};

const RAR_BITS: usize = 56;

pub fn encode_rar(pdu: &RarPdu) -> Result<Vec<u8>, CodecError> {
    pdu.validate()?;
    let mut w = BitWriter::new();
    w.put(pdu.rapid as u64, 6);
    w.put(pdu.ta_command as u64, 12);
    w.put(pdu.msg3_grant.freq_assign as u64, 14);
    w.put(pdu.msg3_grant.time_assign as u64, 4);
    w.put(pdu.msg3_grant.mcs as u64, 4);
    w.put(pdu.tc_rnti as u64, 16);
    debug_assert_eq!(w.len_bits(), RAR_BITS);
    Ok(write_frame(MSG_TYPE_RAR, w.into_bytes(), RAR_BITS))
}

pub fn decode_rar(bytes: &[u8]) -> Result<RarPdu, CodecError> {
    let (msg_type, payload, len_bits) = read_frame(bytes)?;
    if msg_type != MSG_TYPE_RAR {
        return Err(CodecError::Malformed {
            reason: format!("expected RAR type tag 0x{MSG_TYPE_RAR:02x}, got 0x{msg_type:02x}"),
        });
    }
    if len_bits != RAR_BITS {
        return Err(CodecError::Malformed {
            reason: format!("RAR payload must be {RAR_BITS} bits, got {len_bits}"),
        });
    }
    let mut r = BitReader::new(payload, len_bits);
    let pdu = RarPdu {
        rapid: r.get(6)? as u8,
        ta_command: r.get(12)? as u16,
        msg3_grant: Msg3Grant {
            freq_assign: r.get(14)? as u16,
            time_assign: r.get(4)? as u8,
            mcs: r.get(4)? as u8,
        },
        tc_rnti: r.get(16)? as u16,
    };
    debug_assert_eq!(r.bits_remaining(), 0);
    pdu.validate()?;
    Ok(pdu)
}
