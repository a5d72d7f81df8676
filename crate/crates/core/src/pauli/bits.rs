//! Fixed-length bit vectors packed into 64-bit words.

use std::cmp::Ordering;
use std::fmt;

const WORD: usize = 64;

#[inline]
pub(crate) fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over GF(2). Bit `i` lives in word `i / 64` at
/// position `i % 64`; bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Self::zeros(0);
        for b in bits {
            out.push(b);
        }
        out
    }

    /// Builds a vector from the low `len` bits of `value` (bit 0 first).
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_u64 holds at most 64 bits");
        let mut out = Self::zeros(len);
        if len > 0 {
            let mask = if len == WORD { u64::MAX } else { (1u64 << len) - 1 };
            out.words[0] = value & mask;
        }
        out
    }

    /// Parses a string of `0`/`1` characters, bit 0 first.
    pub fn parse(text: &str) -> Option<Self> {
        let mut out = Self::zeros(0);
        for ch in text.chars() {
            match ch {
                '0' => out.push(false),
                '1' => out.push(true),
                _ => return None,
            }
        }
        Some(out)
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// First 64 bits as an integer; handy for small-register enumeration.
    pub fn low_word(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    /// In-place XOR. Both vectors must have the same length.
    #[inline]
    pub fn xor_assign(&mut self, other: &BitVector) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    /// XOR restricted to words starting at `from_bit / 64`; used by
    /// elimination loops where lower columns are already cleared.
    #[inline]
    pub(crate) fn xor_assign_from(&mut self, other: &BitVector, from_bit: usize) {
        let start = from_bit / WORD;
        for (a, b) in self.words[start..].iter_mut().zip(&other.words[start..]) {
            *a ^= *b;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Popcount of `self & other`.
    #[inline]
    pub fn and_count(&self, other: &BitVector) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// GF(2) inner product.
    #[inline]
    pub fn dot(&self, other: &BitVector) -> bool {
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() % 2 == 1
    }

    pub fn or(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let tz = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(wi * WORD + tz)
                }
            })
        })
    }

    /// Index of the lowest set bit at or after `from`.
    pub fn first_one_from(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut wi = from / WORD;
        let mut word = self.words[wi] & (u64::MAX << (from % WORD));
        loop {
            if word != 0 {
                return Some(wi * WORD + word.trailing_zeros() as usize);
            }
            wi += 1;
            if wi >= self.words.len() {
                return None;
            }
            word = self.words[wi];
        }
    }

    /// Concatenation `self || other`.
    pub fn concat(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        for b in other.iter() {
            out.push(b);
        }
        out
    }

    /// The bits at positions `range` as a new vector.
    pub fn slice(&self, start: usize, end: usize) -> BitVector {
        BitVector::from_bools((start..end).map(|i| self.get(i)))
    }
}

impl Ord for BitVector {
    /// Lexicographic on the bit sequence `b0, b1, ...` with `1 > 0`;
    /// shorter vectors sort first when one is a prefix of the other.
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            let diff = a ^ b;
            if diff != 0 {
                let low = diff & diff.wrapping_neg();
                return if a & low != 0 {
                    Ordering::Greater
                } else {
                    Ordering::Less
                };
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for BitVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_get_and_ones() {
        let v = BitVector::parse("1010000000000000000000000000000000000000000000000000000000000000011").unwrap();
        assert_eq!(v.len(), 67);
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![0, 2, 65, 66]);
        assert_eq!(v.first_one_from(3), Some(65));
        assert_eq!(v.count_ones(), 4);
    }

    #[test]
    fn lexicographic_order() {
        let a = BitVector::parse("100").unwrap();
        let b = BitVector::parse("011").unwrap();
        assert!(a > b);
        let c = BitVector::parse("010").unwrap();
        assert!(b > c);
        assert_eq!(a.cmp(&a.clone()), Ordering::Equal);
    }

    #[test]
    fn dot_product_parity() {
        let a = BitVector::parse("1101").unwrap();
        let b = BitVector::parse("1011").unwrap();
        assert!(!a.dot(&b));
        assert_eq!(a.and_count(&b), 2);
    }
}
