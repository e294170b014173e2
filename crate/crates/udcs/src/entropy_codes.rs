//! Bit-level containers and the universal integer codes used by every scheme.
//!
//! Codewords are sequences of bits, most-significant bit first when packed
//! into bytes; a final partial byte is zero-padded. All `floor(log2 ...)`
//! quantities are computed over exact integers via bit length, never through
//! floating point.

use crate::error::{Error, Result};
use std::fmt;

/// Leading-zero cap applied by the decoders to bound work on garbage input.
pub const DEFAULT_ZERO_CAP: u32 = 64;

/// A finite bit sequence. Bits are stored packed, MSB-first within each byte;
/// pad bits beyond `len` are kept zero so that derived equality and hashing
/// see only the logical content.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitString {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[self.len / 8] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    pub fn extend_from(&mut self, other: &BitString) {
        if self.len % 8 == 0 {
            // Aligned: bulk copy keeps the zero-pad invariant.
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
            return;
        }
        for i in 0..other.len {
            self.push(other.bytes[i / 8] & (0x80 >> (i % 8)) != 0);
        }
    }

    /// Packed bytes, MSB-first, final partial byte zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bytes.clone()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn from_str01(s: &str) -> Result<Self> {
        let mut out = BitString::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return Err(Error::domain(format!("invalid bit character {c:?}"))),
            }
        }
        Ok(out)
    }

    pub fn to_string01(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i).unwrap() { '1' } else { '0' })
            .collect()
    }

    pub fn starts_with(&self, prefix: &BitString) -> bool {
        if prefix.len > self.len {
            return false;
        }
        let full = prefix.len / 8;
        if self.bytes[..full] != prefix.bytes[..full] {
            return false;
        }
        let rem = prefix.len % 8;
        if rem == 0 {
            return true;
        }
        let mask = !0u8 << (8 - rem);
        (self.bytes[full] ^ prefix.bytes[full]) & mask == 0
    }

    /// Appends the `width` low-order bits of `value`, most significant first.
    fn push_low_bits(&mut self, value: u128, width: u32) {
        for i in (0..width).rev() {
            self.push(value >> i & 1 == 1);
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string01())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{}\")", self.to_string01())
    }
}

/// Cursor over a packed bit source. Reads past the end are errors, never
/// silent zeros.
pub struct BitReader<'a> {
    bytes: &'a [u8],
    len_bits: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn from_bytes(bytes: &'a [u8]) -> Self {
        BitReader {
            bytes,
            len_bits: bytes.len() * 8,
            pos: 0,
        }
    }

    pub fn from_bits(bits: &'a BitString) -> Self {
        BitReader {
            bytes: bits.as_bytes(),
            len_bits: bits.len(),
            pos: 0,
        }
    }

    /// Bits consumed so far.
    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.len_bits - self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.len_bits {
            return Err(Error::StreamExhausted { offset: self.pos });
        }
        let bit = self.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    /// Reads `width` bits (at most 64) as an unsigned integer, MSB first.
    pub fn read_fixed(&mut self, width: u32) -> Result<u64> {
        if width > 64 {
            return Err(Error::domain(format!("fixed-width read of {width} > 64 bits")));
        }
        let mut v = 0u64;
        for _ in 0..width {
            v = v << 1 | self.read_bit()? as u64;
        }
        Ok(v)
    }

    /// True when the remainder is shorter than a byte and all zeros — the
    /// padding produced by byte packing.
    pub fn at_padding(&self) -> bool {
        if self.remaining() >= 8 {
            return false;
        }
        (self.pos..self.len_bits).all(|i| self.bytes[i / 8] & (0x80 >> (i % 8)) == 0)
    }
}

fn push_gamma_plus(out: &mut BitString, k: u128) {
    debug_assert!(k >= 1);
    let n = k.ilog2();
    for _ in 0..n {
        out.push(false);
    }
    out.push_low_bits(k, n + 1);
}

fn push_delta_plus(out: &mut BitString, k: u128) {
    debug_assert!(k >= 1);
    let n = k.ilog2();
    push_gamma_plus(out, n as u128 + 1);
    out.push_low_bits(k, n);
}

/// Unsigned Elias gamma code: N zeros followed by the (N+1)-bit binary form
/// of `k`, N = floor(log2 k). Defined for k >= 1.
pub fn elias_gamma_plus(k: u64) -> Result<BitString> {
    if k < 1 {
        return Err(Error::domain("gamma code requires k >= 1"));
    }
    let mut out = BitString::new();
    push_gamma_plus(&mut out, k as u128);
    Ok(out)
}

/// Unsigned Elias delta code: gamma code of N+1 followed by the N low-order
/// bits of `k`. Defined for k >= 1.
pub fn elias_delta_plus(k: u64) -> Result<BitString> {
    if k < 1 {
        return Err(Error::domain("delta code requires k >= 1"));
    }
    let mut out = BitString::new();
    push_delta_plus(&mut out, k as u128);
    Ok(out)
}

/// Signed Elias delta code: the delta code of 1-2k for k <= 0, of 2k for
/// k > 0. Bijective and prefix-free over all of `i64` (the intermediate
/// value is computed in 128 bits, so the extremes are exact).
pub fn elias_delta_signed(k: i64) -> BitString {
    let m: u128 = if k <= 0 {
        1 + 2 * k.unsigned_abs() as u128
    } else {
        2 * k as u128
    };
    let mut out = BitString::new();
    push_delta_plus(&mut out, m);
    out
}

/// Closed-form length of `elias_delta_signed(k)`:
/// floor(log(2|k|+1)) + 2*floor(log(floor(log(2|k|+1))+1)) + 1.
pub fn delta_signed_length(k: i64) -> usize {
    let a = (2 * k.unsigned_abs() as u128 + 1).ilog2();
    a as usize + 2 * (a + 1).ilog2() as usize + 1
}

/// `width`-bit binary representation of `i`, leading zeros included.
pub fn fixed_binary(i: u64, width: u32) -> Result<BitString> {
    if width > 64 {
        return Err(Error::domain(format!("fixed width {width} > 64 bits")));
    }
    if width < 64 && i >= 1u64 << width {
        return Err(Error::domain(format!("{i} does not fit in {width} bits")));
    }
    let mut out = BitString::with_capacity(width as usize);
    out.push_low_bits(i as u128, width);
    Ok(out)
}

fn decode_gamma_plus_wide(r: &mut BitReader, zero_cap: u32) -> Result<u128> {
    let mut zeros = 0u32;
    loop {
        if r.read_bit()? {
            break;
        }
        zeros += 1;
        if zeros > zero_cap {
            return Err(Error::MalformedCodeword {
                offset: r.offset(),
                reason: format!("leading-zero run exceeds cap {zero_cap}"),
            });
        }
    }
    let mut v: u128 = 1;
    for _ in 0..zeros {
        v = v << 1 | r.read_bit()? as u128;
    }
    Ok(v)
}

fn decode_delta_plus_wide(r: &mut BitReader, zero_cap: u32) -> Result<u128> {
    let start = r.offset();
    let n_plus_1 = decode_gamma_plus_wide(r, zero_cap)?;
    let n = n_plus_1 - 1;
    if n > 127 {
        return Err(Error::MalformedCodeword {
            offset: start,
            reason: format!("delta codeword claims a {n}-bit payload"),
        });
    }
    let mut v: u128 = 1;
    for _ in 0..n {
        v = v << 1 | r.read_bit()? as u128;
    }
    Ok(v)
}

fn narrow_u64(v: u128, offset: usize) -> Result<u64> {
    u64::try_from(v).map_err(|_| Error::MalformedCodeword {
        offset,
        reason: "decoded value overflows 64 bits".into(),
    })
}

/// Inverse of [`elias_gamma_plus`]; consumes exactly the codeword's bits.
pub fn decode_gamma_plus(r: &mut BitReader, zero_cap: u32) -> Result<u64> {
    let start = r.offset();
    let v = decode_gamma_plus_wide(r, zero_cap)?;
    narrow_u64(v, start)
}

/// Inverse of [`elias_delta_plus`].
pub fn decode_delta_plus(r: &mut BitReader, zero_cap: u32) -> Result<u64> {
    let start = r.offset();
    let v = decode_delta_plus_wide(r, zero_cap)?;
    narrow_u64(v, start)
}

/// Inverse of [`elias_delta_signed`].
pub fn decode_delta_signed(r: &mut BitReader, zero_cap: u32) -> Result<i64> {
    let start = r.offset();
    let m = decode_delta_plus_wide(r, zero_cap)?;
    let k: i128 = if m % 2 == 1 {
        -((m as i128 - 1) / 2)
    } else {
        m as i128 / 2
    };
    i64::try_from(k).map_err(|_| Error::MalformedCodeword {
        offset: start,
        reason: "decoded value overflows 64-bit signed range".into(),
    })
}

/// Inverse of [`fixed_binary`].
pub fn decode_fixed(r: &mut BitReader, width: u32) -> Result<u64> {
    r.read_fixed(width)
}
