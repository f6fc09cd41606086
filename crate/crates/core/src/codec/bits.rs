//! MSB-first bit buffer with Elias gamma coding.
//!
//! Gamma codes a positive integer `n` as `floor(log2 n)` zeros followed by
//! the binary digits of `n` (whose leading 1 doubles as the delimiter), so
//! the code length is `2*floor(log2 n) + 1` bits and the stream is
//! self-delimiting.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitError {
    #[error("bit stream ended inside a value ({0})")]
    UnexpectedEnd(&'static str),
    #[error("gamma code runs past 64 bits; stream is corrupt")]
    GammaOverflow,
}

/// Number of bits gamma coding spends on `n` (`n >= 1`): `2*floor(log2 n) + 1`.
pub fn elias_len(n: u64) -> u64 {
    assert!(n >= 1, "gamma codes exist for positive integers only");
    2 * (63 - n.leading_zeros() as u64) + 1
}

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    fn push_bit(&mut self, bit: bool) {
        if self.bit_len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 1 << (7 - (self.bit_len % 8));
        }
        self.bit_len += 1;
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value < (1u64 << width));
        for i in (0..width).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    /// Elias gamma code for `n >= 1`.
    pub fn write_gamma(&mut self, n: u64) {
        assert!(n >= 1);
        let width = 64 - n.leading_zeros(); // MSB position + 1
        for _ in 0..width - 1 {
            self.push_bit(false);
        }
        self.write_bits(n, width);
    }

    /// Final byte buffer (zero-padded to a byte boundary) and exact bit count.
    pub fn into_parts(self) -> (Vec<u8>, u64) {
        (self.bytes, self.bit_len)
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    /// Reader over exactly `bit_len` bits of `bytes` (padding is ignored).
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Self {
        debug_assert!(bit_len <= bytes.len() as u64 * 8);
        BitReader {
            bytes,
            bit_len,
            pos: 0,
        }
    }

    pub fn pos(&self) -> u64 {
        self.pos
    }

    /// True when every payload bit has been consumed.
    pub fn exhausted(&self) -> bool {
        self.pos >= self.bit_len
    }

    fn read_bit(&mut self, what: &'static str) -> Result<bool, BitError> {
        if self.pos >= self.bit_len {
            return Err(BitError::UnexpectedEnd(what));
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = byte >> (7 - (self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: u32, what: &'static str) -> Result<u64, BitError> {
        debug_assert!(width <= 64);
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bit(what)? as u64;
        }
        Ok(v)
    }

    pub fn read_gamma(&mut self, what: &'static str) -> Result<u64, BitError> {
        let mut zeros = 0u32;
        while !self.read_bit(what)? {
            zeros += 1;
            if zeros > 63 {
                return Err(BitError::GammaOverflow);
            }
        }
        let low = self.read_bits(zeros, what)?;
        Ok((1u64 << zeros) | low)
    }
}
