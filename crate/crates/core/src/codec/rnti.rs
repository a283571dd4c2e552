//! RA-RNTI derivation from the PRACH occasion.

use super::RachOccasion;
use crate::defaults::SLOTS_PER_FRAME;

/// Largest RA-RNTI value; the derivation wraps modulo this.
pub const RA_RNTI_MODULUS: u32 = 65519;

/// Computes the RA-RNTI addressing the RAR for a given PRACH occasion.
///
/// `1 + (slot_index + slots_per_frame * freq_index) mod 65519`, so the
/// result is never zero and distinct occasions within one frame map to
/// distinct RNTIs as long as the slot/frequency grid stays below the
/// modulus. The frame number does not participate: the RAR window is
/// short enough that occasions from different frames never overlap.
pub fn compute_ra_rnti(occasion: RachOccasion) -> u16 {
    let raw = occasion.slot_index as u64 + SLOTS_PER_FRAME as u64 * occasion.freq_index as u64;
    (1 + (raw % RA_RNTI_MODULUS as u64)) as u16
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn occ(slot: u32, freq: u32) -> RachOccasion {
        RachOccasion { slot_index: slot, freq_index: freq, frame_number: 0 }
    }

    #[test]
    fn origin_occasion_maps_to_one() {
        assert_eq!(compute_ra_rnti(occ(0, 0)), 1);
    }

    #[test]
    fn slot_and_freq_offsets() {
        assert_eq!(compute_ra_rnti(occ(3, 0)), 4);
        assert_eq!(compute_ra_rnti(occ(0, 1)), 15);
        assert_eq!(compute_ra_rnti(occ(13, 7)), 1 + 13 + 14 * 7);
    }

    #[test]
    fn distinct_within_frame_grid() {
        let mut seen = HashSet::new();
        for slot in 0..14 {
            for freq in 0..8 {
                assert!(seen.insert(compute_ra_rnti(occ(slot, freq))));
            }
        }
        assert_eq!(seen.len(), 14 * 8);
    }

    #[test]
    fn never_zero_and_wraps_at_modulus() {
        assert_eq!(compute_ra_rnti(occ(RA_RNTI_MODULUS - 1, 0)), RA_RNTI_MODULUS as u16);
        assert_eq!(compute_ra_rnti(occ(RA_RNTI_MODULUS, 0)), 1);
    }

    #[test]
    fn frame_number_is_ignored() {
        let a = RachOccasion { slot_index: 5, freq_index: 2, frame_number: 0 };
        let b = RachOccasion { slot_index: 5, freq_index: 2, frame_number: 917 };
        assert_eq!(compute_ra_rnti(a), compute_ra_rnti(b));
    }
}
