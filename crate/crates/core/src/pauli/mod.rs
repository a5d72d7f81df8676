//! Signed Pauli operators in the symplectic picture, plus the GF(2) linear
//! algebra the rest of the crate is built on.
//!
//! An operator is stored as `i^e * prod_j X_j^{x_j} Z_j^{z_j}` with the
//! X factor to the left of the Z factor on every site. In this convention a
//! product only picks up a phase from moving `Z^{z1}` past `X^{x2}`, so
//! multiplication is one popcount per word:
//!
//! `(i^a X^x1 Z^z1)(i^b X^x2 Z^z2) = i^{a+b+2|z1 & x2|} X^{x1^x2} Z^{z1^z2}`.

mod bits;
mod gf2;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use bits::BitVector;
pub use gf2::{BitMatrix, Solution, XorBasis};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("empty Pauli string")]
    Empty,
    #[error("illegal character {ch:?} at position {pos}")]
    IllegalCharacter { ch: char, pos: usize },
}

/// Element of `{+1, +i, -1, -i}`, stored as the exponent of `i`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    PlusOne = 0,
    PlusI = 1,
    MinusOne = 2,
    MinusI = 3,
}

impl Phase {
    pub fn from_exponent(e: u8) -> Self {
        match e & 3 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn exponent(self) -> u8 {
        self as u8
    }
}

/// Sign of a Hermitian Pauli, or of a measurement eigenvalue.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    /// `0 -> +1`, `1 -> -1`, matching classical measurement bits.
    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Single-site Pauli letter.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn from_char(ch: char) -> Option<Self> {
        match ch {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    /// Whether two single-site letters anticommute.
    pub fn anticommutes(self, other: Letter) -> bool {
        self != Letter::I && other != Letter::I && self != other
    }
}

/// Signed n-qubit Pauli operator, see the module docs for the convention.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    x: BitVector,
    z: BitVector,
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        Self {
            x: BitVector::zeros(n),
            z: BitVector::zeros(n),
            phase: 0,
        }
    }

    /// Raw constructor: `phase * prod X^x Z^z`.
    pub fn from_parts(x: BitVector, z: BitVector, phase: Phase) -> Result<Self, PauliError> {
        if x.len() != z.len() {
            return Err(PauliError::DimensionMismatch {
                left: x.len(),
                right: z.len(),
            });
        }
        Ok(Self {
            x,
            z,
            phase: phase.exponent(),
        })
    }

    /// Hermitian operator `sign * P_0 ⊗ P_1 ⊗ ...` from letters.
    pub fn from_letters(sign: Sign, letters: &[Letter]) -> Self {
        let mut p = Self::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set_letter(q, l);
        }
        p.set_sign(sign);
        p
    }

    /// `+P` on qubit `q` of an `n`-qubit register.
    pub fn single(n: usize, q: usize, letter: Letter) -> Self {
        let mut p = Self::identity(n);
        p.set_letter(q, letter);
        p
    }

    /// `+Z` on every qubit in `support`.
    pub fn z_on(n: usize, support: &[usize]) -> Self {
        let mut p = Self::identity(n);
        for &q in support {
            p.z.set(q, true);
        }
        p
    }

    /// `+X` on every qubit in `support`.
    pub fn x_on(n: usize, support: &[usize]) -> Self {
        let mut p = Self::identity(n);
        for &q in support {
            p.x.set(q, true);
        }
        p
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn x_bits(&self) -> &BitVector {
        &self.x
    }

    #[inline]
    pub fn z_bits(&self) -> &BitVector {
        &self.z
    }

    /// Coefficient in front of `prod X^x Z^z`.
    pub fn phase(&self) -> Phase {
        Phase::from_exponent(self.phase)
    }

    pub(crate) fn phase_exponent(&self) -> u8 {
        self.phase
    }

    pub(crate) fn add_phase(&mut self, e: u8) {
        self.phase = (self.phase + e) & 3;
    }

    pub(crate) fn xz_mut(&mut self) -> (&mut BitVector, &mut BitVector) {
        (&mut self.x, &mut self.z)
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits(self.x.get(q), self.z.get(q))
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.num_qubits()).map(|q| self.letter(q)).collect()
    }

    /// Replaces the letter on `q` keeping the displayed sign unchanged.
    pub fn set_letter(&mut self, q: usize, letter: Letter) {
        let before = self.display_exponent();
        let (x, z) = letter.bits();
        self.x.set(q, x);
        self.z.set(q, z);
        let after = self.display_exponent();
        self.phase = (self.phase + before + 4 - after) & 3;
    }

    fn y_count(&self) -> usize {
        self.x.and_count(&self.z)
    }

    /// Exponent `e` such that the operator equals `i^e` times the tensor
    /// product of its letters (`Y` counted as the Hermitian Pauli).
    fn display_exponent(&self) -> u8 {
        // X Z = -i Y, so each Y site contributes a factor of -i = i^3.
        ((self.phase as usize + 3 * self.y_count()) & 3) as u8
    }

    /// Overall factor in front of the letter string.
    pub fn display_phase(&self) -> Phase {
        Phase::from_exponent(self.display_exponent())
    }

    pub fn is_hermitian(&self) -> bool {
        self.display_exponent().is_multiple_of(2)
    }

    /// Sign of a Hermitian operator; `None` for `±i` multiples.
    pub fn sign(&self) -> Option<Sign> {
        match self.display_exponent() {
            0 => Some(Sign::Plus),
            2 => Some(Sign::Minus),
            _ => None,
        }
    }

    /// Sets the displayed factor to `sign` (the letter string is kept).
    pub fn set_sign(&mut self, sign: Sign) {
        let current = self.display_exponent();
        let target = 2 * sign.bit();
        self.phase = (self.phase + target + 4 - current) & 3;
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.set_sign(sign);
        self
    }

    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        p.phase = (p.phase + 2) & 3;
        p
    }

    /// Same letters, sign `+1`.
    pub fn unsigned(&self) -> Self {
        self.clone().with_sign(Sign::Plus)
    }

    pub fn weight(&self) -> usize {
        self.x.or(&self.z).count_ones()
    }

    pub fn support(&self) -> Vec<usize> {
        self.x.or(&self.z).iter_ones().collect()
    }

    /// True when the letter string is all identity (any phase).
    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn same_letters(&self, other: &PauliOperator) -> bool {
        self.x == other.x && self.z == other.z
    }

    fn check_dims(&self, other: &PauliOperator) -> Result<(), PauliError> {
        if self.num_qubits() != other.num_qubits() {
            return Err(PauliError::DimensionMismatch {
                left: self.num_qubits(),
                right: other.num_qubits(),
            });
        }
        Ok(())
    }

    /// `self * other` with exact phase.
    pub fn multiply(&self, other: &PauliOperator) -> Result<PauliOperator, PauliError> {
        self.check_dims(other)?;
        let mut out = self.clone();
        out.mul_assign_right(other);
        Ok(out)
    }

    /// `self <- self * other`; lengths must agree.
    pub(crate) fn mul_assign_right(&mut self, other: &PauliOperator) {
        debug_assert_eq!(self.num_qubits(), other.num_qubits());
        let swaps = self.z.and_count(&other.x);
        self.phase = ((self.phase as usize + other.phase as usize + 2 * swaps) & 3) as u8;
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    /// Symplectic product: `true` when the operators anticommute.
    #[inline]
    pub(crate) fn anticommutes_unchecked(&self, other: &PauliOperator) -> bool {
        self.x.dot(&other.z) ^ self.z.dot(&other.x)
    }

    pub fn commutes(&self, other: &PauliOperator) -> Result<bool, PauliError> {
        self.check_dims(other)?;
        Ok(!self.anticommutes_unchecked(other))
    }

    /// Hermitian adjoint.
    pub fn adjoint(&self) -> PauliOperator {
        // (X^x Z^z)^dag = Z^z X^x = (-1)^{x.z} X^x Z^z, and conj(i^e) = i^{-e}.
        let mut p = self.clone();
        let e = (4 - self.phase as usize) + 2 * self.y_count();
        p.phase = (e & 3) as u8;
        p
    }

    /// `(x | z)` row of length `2n`.
    pub fn symplectic(&self) -> BitVector {
        self.x.concat(&self.z)
    }

    pub fn from_symplectic(row: &BitVector) -> Result<Self, PauliError> {
        if !row.len().is_multiple_of(2) {
            return Err(PauliError::DimensionMismatch {
                left: row.len(),
                right: row.len() + 1,
            });
        }
        let n = row.len() / 2;
        Ok(Self {
            x: row.slice(0, n),
            z: row.slice(n, 2 * n),
            phase: 0,
        })
    }

    /// Letters on the given qubits, as an operator on `qubits.len()` sites.
    pub fn restrict(&self, qubits: &[usize]) -> PauliOperator {
        let letters: Vec<Letter> = qubits.iter().map(|&q| self.letter(q)).collect();
        let mut p = PauliOperator::from_letters(Sign::Plus, &letters);
        p.add_phase(self.display_exponent());
        p
    }

    /// Embeds into an `n`-qubit register, site `k` of `self` going to `positions[k]`.
    pub fn embed(&self, n: usize, positions: &[usize]) -> PauliOperator {
        let mut p = PauliOperator::identity(n);
        for (k, &q) in positions.iter().enumerate() {
            p.x.set(q, self.x.get(k));
            p.z.set(q, self.z.get(k));
        }
        p.phase = self.phase;
        p
    }

    /// `self ⊗ other`, `self` on the low qubit indices.
    pub fn tensor(&self, other: &PauliOperator) -> PauliOperator {
        PauliOperator {
            x: self.x.concat(&other.x),
            z: self.z.concat(&other.z),
            phase: (self.phase + other.phase) & 3,
        }
    }

    /// Deterministic order on letter strings: weight, then x bits, then z bits.
    pub fn cmp_weight_lex(&self, other: &PauliOperator) -> Ordering {
        self.weight()
            .cmp(&other.weight())
            .then_with(|| self.x.cmp(&other.x))
            .then_with(|| self.z.cmp(&other.z))
    }

    pub fn parse(text: &str) -> Result<Self, PauliError> {
        text.parse()
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.display_phase() {
            Phase::PlusOne => "",
            Phase::MinusOne => "-",
            Phase::PlusI => "+i",
            Phase::MinusI => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.num_qubits() {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = PauliError;

    /// Accepts an optional `+`, `-`, `+i`, `-i` (or bare `i`) prefix followed
    /// by letters from `IXYZ`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        let (exp, body, offset) = if let Some(rest) = text.strip_prefix("+i") {
            (1u8, rest, 2)
        } else if let Some(rest) = text.strip_prefix("-i") {
            (3, rest, 2)
        } else if let Some(rest) = text.strip_prefix('i') {
            (1, rest, 1)
        } else if let Some(rest) = text.strip_prefix('+') {
            (0, rest, 1)
        } else if let Some(rest) = text.strip_prefix('-') {
            (2, rest, 1)
        } else {
            (0, text, 0)
        };
        if body.is_empty() {
            return Err(PauliError::Empty);
        }
        let mut letters = Vec::with_capacity(body.len());
        for (pos, ch) in body.chars().enumerate() {
            letters.push(
                Letter::from_char(ch).ok_or(PauliError::IllegalCharacter {
                    ch,
                    pos: pos + offset,
                })?,
            );
        }
        let mut p = PauliOperator::from_letters(Sign::Plus, &letters);
        p.add_phase(exp);
        Ok(p)
    }
}

impl Serialize for PauliOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Rank of the symplectic rows of `ops`.
pub fn symplectic_rank(ops: &[PauliOperator]) -> usize {
    let Some(p) = ops.first() else {
        return 0;
    };
    let rows: Vec<BitVector> = ops.iter().map(|p| p.symplectic()).collect();
    BitMatrix::from_rows(rows, 2 * p.num_qubits())
        .map(|m| m.rank())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests;
