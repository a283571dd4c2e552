//! MSB-first bit packing used by the message codecs.

use super::CodecError;

/// Accumulates fields MSB-first into an octet buffer.
pub struct BitWriter {
    bytes: Vec<u8>,
    /// Bits already written into the trailing partial octet (0..8).
    fill: u8,
    len_bits: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        BitWriter {
            bytes: Vec::new(),
            fill: 0,
            len_bits: 0,
        }
    }

    /// Appends the `width` low bits of `value`, most significant first.
    ///
    /// Callers must have range-checked `value` against `width`; this is a
    /// debug assertion, not a runtime error.
    pub fn put(&mut self, value: u64, width: u8) {
        debug_assert!((1..=64).contains(&width));
        debug_assert!(width == 64 || value < (1u64 << width), "value exceeds field width");
        for i in (0..width).rev() {
            let bit = ((value >> i) & 1) as u8;
            if self.fill == 0 {
                self.bytes.push(0);
            }
            let last = self.bytes.last_mut().unwrap();
            *last |= bit << (7 - self.fill);
            self.fill = (self.fill + 1) % 8;
        }
        self.len_bits += width as usize;
    }

    pub fn len_bits(&self) -> usize {
        self.len_bits
    }

    /// Returns the packed octets; unused bits in the final octet are zero.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

impl Default for BitWriter {
    fn default() -> Self {
        Self::new()
    }
}

/// Reads MSB-first fields back out of an octet buffer.
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos_bits: usize,
    limit_bits: usize,
}

impl<'a> BitReader<'a> {
    /// Reader over `bytes`, allowed to consume at most `limit_bits` bits.
    pub fn new(bytes: &'a [u8], limit_bits: usize) -> Self {
        debug_assert!(limit_bits <= bytes.len() * 8);
        BitReader {
            bytes,
            pos_bits: 0,
            limit_bits,
        }
    }

    /// Reads the next `width` bits as an unsigned value.
    pub fn get(&mut self, width: u8) -> Result<u64, CodecError> {
        debug_assert!((1..=64).contains(&width));
        if self.pos_bits + width as usize > self.limit_bits {
            return Err(CodecError::Malformed {
                reason: "message truncated mid-field".into(),
            });
        }
        let mut out = 0u64;
        for _ in 0..width {
            let byte = self.bytes[self.pos_bits / 8];
            let bit = (byte >> (7 - (self.pos_bits % 8))) & 1;
            out = (out << 1) | bit as u64;
            self.pos_bits += 1;
        }
        Ok(out)
    }

    pub fn bits_consumed(&self) -> usize {
        self.pos_bits
    }

    pub fn bits_remaining(&self) -> usize {
        self.limit_bits - self.pos_bits
    }
}
