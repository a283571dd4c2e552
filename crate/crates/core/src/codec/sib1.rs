//! SIB1 wire codec.
//!
//! Payload layout, MSB-first:
//!
//! ```text
//! value_tag                        5 bits
//! tracking_area_code              24 bits
//! si_window_length                 2 bits   (00=ms5 01=ms10 10=ms15 11=ms20)
//! cell_barred                      1 bit
//! cell_identity                   36 bits
//! sib1_periodicity_ms             16 bits
//! rach.preamble_format_id          4 bits
//! rach.ra_response_window_ms      16 bits
//! rach.power_ramping_step_db       4 bits
//! rach.preamble_target_power_dbm  16 bits   (two's complement)
//! rach.prach_periodicity_ms       16 bits
//! plmn_count                       4 bits   (1..=15)
//! per PLMN: mcc 10, mnc_length flag 1 (0=2-digit 1=3-digit), mnc 10
//! ```
//!
//! Fixed part is 144 bits; each PLMN adds 21, so a valid payload is
//! exactly `144 + 21 * plmn_count` bits.

use super::bits::{BitReader, BitWriter};
use super::{
    read_frame, write_frame, CodecError, PlmnId, RachConfigCommon, Sib1Message, SiWindowLength,
    MSG_TYPE_SIB1,
};

const FIXED_BITS: usize = 144;
const PLMN_BITS: usize = 21;

pub fn encode_sib1(msg: &Sib1Message) -> Result<Vec<u8>, CodecError> {
    msg.validate()?;
    let mut w = BitWriter::new();
    w.put(msg.value_tag as u64, 5);
    w.put(msg.tracking_area_code as u64, 24);
    w.put(msg.si_window_length.wire(), 2);
    w.put(msg.cell_barred as u64, 1);
    w.put(msg.cell_identity, 36);
    w.put(msg.sib1_periodicity_ms, 16);
    w.put(msg.rach_config.preamble_format_id as u64, 4);
    w.put(msg.rach_config.ra_response_window_ms as u64, 16);
    w.put(msg.rach_config.power_ramping_step_db as u64, 4);
    w.put(msg.rach_config.preamble_target_power_dbm as u16 as u64, 16);
    w.put(msg.rach_config.prach_periodicity_ms as u64, 16);
    w.put(msg.plmn_list.len() as u64, 4);
    for plmn in &msg.plmn_list {
        w.put(plmn.mcc as u64, 10);
        w.put((plmn.mnc_length == 3) as u64, 1);
        w.put(plmn.mnc as u64, 10);
    }
    let len_bits = w.len_bits();
    debug_assert_eq!(len_bits, FIXED_BITS + PLMN_BITS * msg.plmn_list.len());
    Ok(write_frame(MSG_TYPE_SIB1, w.into_bytes(), len_bits))
}

pub fn decode_sib1(bytes: &[u8]) -> Result<Sib1Message, CodecError> {
    let (msg_type, payload, len_bits) = read_frame(bytes)?;
    if msg_type != MSG_TYPE_SIB1 {
        return Err(CodecError::Malformed {
            reason: format!("expected SIB1 type tag 0x{MSG_TYPE_SIB1:02x}, got 0x{msg_type:02x}"),
        });
    }
    if len_bits < FIXED_BITS || !(len_bits - FIXED_BITS).is_multiple_of(PLMN_BITS) {
        return Err(CodecError::Malformed {
            reason: format!("SIB1 payload of {len_bits} bits does not match 144 + 21*n"),
        });
    }
    let plmn_count_from_len = (len_bits - FIXED_BITS) / PLMN_BITS;

    let mut r = BitReader::new(payload, len_bits);
    let value_tag = r.get(5)? as u8;
    let tracking_area_code = r.get(24)? as u32;
    let si_window_length = SiWindowLength::from_wire(r.get(2)?);
    let cell_barred = r.get(1)? == 1;
    let cell_identity = r.get(36)?;
    let sib1_periodicity_ms = r.get(16)?;
    let rach_config = RachConfigCommon {
        preamble_format_id: r.get(4)? as u8,
        ra_response_window_ms: r.get(16)? as u16,
        power_ramping_step_db: r.get(4)? as u8,
        preamble_target_power_dbm: r.get(16)? as u16 as i16,
        prach_periodicity_ms: r.get(16)? as u16,
    };
    let plmn_count = r.get(4)? as usize;
    if plmn_count != plmn_count_from_len {
        return Err(CodecError::Malformed {
            reason: format!(
                "plmn count field says {plmn_count} but payload length implies {plmn_count_from_len}"
            ),
        });
    }
    let mut plmn_list = Vec::with_capacity(plmn_count);
    for _ in 0..plmn_count {
        let mcc = r.get(10)? as u16;
        let mnc_length = if r.get(1)? == 1 { 3 } else { 2 };
        let mnc = r.get(10)? as u16;
        plmn_list.push(PlmnId { mcc, mnc, mnc_length });
    }
    debug_assert_eq!(r.bits_remaining(), 0);

    let msg = Sib1Message {
        value_tag,
        tracking_area_code,
        si_window_length,
        plmn_list,
        cell_identity,
        cell_barred,
        rach_config,
        sib1_periodicity_ms,
    };
    msg.validate()?;
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Sib1Message {
        Sib1Message {
            value_tag: 17,
            tracking_area_code: 0x00_2A_F1,
            si_window_length: SiWindowLength::Ms20,
            plmn_list: vec![
                PlmnId { mcc: 262, mnc: 1, mnc_length: 2 },
                PlmnId { mcc: 310, mnc: 410, mnc_length: 3 },
            ],
            cell_identity: 0x9_ABCD_EF01,
            cell_barred: false,
            rach_config: RachConfigCommon {
                preamble_format_id: 3,
                ra_response_window_ms: 20,
                power_ramping_step_db: 4,
                preamble_target_power_dbm: -104,
                prach_periodicity_ms: 10,
            },
            sib1_periodicity_ms: 160,
        }
    }

    #[test]
    fn roundtrip_preserves_all_fields() {
        let msg = sample();
        let bytes = encode_sib1(&msg).unwrap();
        assert_eq!(decode_sib1(&bytes).unwrap(), msg);
    }

    #[test]
    fn encoded_length_matches_layout() {
        let bytes = encode_sib1(&sample()).unwrap();
        // 2 PLMNs: 144 + 42 = 186 bits -> 24 payload octets + 3 header octets
        assert_eq!(u16::from_be_bytes([bytes[1], bytes[2]]), 186);
        assert_eq!(bytes.len(), 3 + 24);
        assert_eq!(bytes[0], MSG_TYPE_SIB1);
    }

    #[test]
    fn value_tag_occupies_leading_five_bits() {
        let mut msg = sample();
        msg.value_tag = 0b10110;
        let bytes = encode_sib1(&msg).unwrap();
        assert_eq!(bytes[3] >> 3, 0b10110);
    }

    #[test]
    fn negative_target_power_survives_roundtrip() {
        let mut msg = sample();
        msg.rach_config.preamble_target_power_dbm = -120;
        let bytes = encode_sib1(&msg).unwrap();
        assert_eq!(decode_sib1(&bytes).unwrap().rach_config.preamble_target_power_dbm, -120);
    }

    #[test]
    fn rejects_out_of_range_value_tag() {
        let mut msg = sample();
        msg.value_tag = 32;
        assert!(matches!(
            encode_sib1(&msg),
            Err(CodecError::InvariantViolation { field: "value_tag", .. })
        ));
    }

    #[test]
    fn rejects_empty_plmn_list() {
        let mut msg = sample();
        msg.plmn_list.clear();
        assert!(encode_sib1(&msg).is_err());
    }

    #[test]
    fn rejects_wrong_type_tag() {
        let mut bytes = encode_sib1(&sample()).unwrap();
        bytes[0] = 0x7F;
        assert!(matches!(decode_sib1(&bytes), Err(CodecError::Malformed { .. })));
    }

    #[test]
    fn rejects_truncated_payload() {
        let bytes = encode_sib1(&sample()).unwrap();
        assert!(decode_sib1(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn rejects_nonzero_padding() {
        let mut bytes = encode_sib1(&sample()).unwrap();
        // 186 bits leaves 6 pad bits in the last octet
        let last = bytes.len() - 1;
        bytes[last] |= 0x01;
        assert!(matches!(decode_sib1(&bytes), Err(CodecError::Malformed { .. })));
    }

    #[test]
    fn rejects_plmn_count_mismatch() {
        let msg = sample();
        let mut bytes = encode_sib1(&msg).unwrap();
        // plmn count field sits at payload bits 140..144: byte 17, low nibble
        let idx = 3 + 17;
        assert_eq!(bytes[idx] & 0x0F, 2);
        bytes[idx] = (bytes[idx] & 0xF0) | 3;
        assert!(matches!(decode_sib1(&bytes), Err(CodecError::Malformed { .. })));
    }
}
