//! Exact state-vector simulation for small registers.
//!
//! Qubit `q` is bit `q` of the amplitude index. Operators on a qubit subset
//! use the same convention locally: `support[k]` is bit `k` of the local
//! index.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::gate::{Gate, GateKind};
use crate::pauli::{BitMatrix, BitVector, Letter, PauliOperator, Sign};
use crate::tableau::{BlockOrder, canonical_rows, StabilizerTableau};

/// Default register limit for dense states.
pub const DEFAULT_MAX_QUBITS: usize = 16;

/// Environment variable that raises or lowers the dense-state limit.
pub const MAX_QUBITS_ENV: &str = "ADAPTSTAB_MAX_QUBITS";

/// Current limit: `ADAPTSTAB_MAX_QUBITS` if set and parsable, else 16.
/// Values above 30 are clamped to 30.
pub fn max_qubits() -> usize {
    std::env::var(MAX_QUBITS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .map(|v| v.min(30))
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenseError {
    #[error("{n} qubits exceeds the dense limit of {max} (set {env} to override)", env = MAX_QUBITS_ENV)]
    TooManyQubits { n: usize, max: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("qubit {qubit} out of range for {n} qubits")]
    SupportOutOfRange { qubit: usize, n: usize },
    #[error("operator supports overlap on qubit {0}")]
    OverlappingSupports(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("operator is not Hermitian")]
    NotHermitian,
    #[error("unknown state family {0:?}")]
    UnknownFamily(String),
}

pub(crate) fn guard(n: usize) -> Result<(), DenseError> {
    let max = max_qubits();
    if n > max {
        return Err(DenseError::TooManyQubits { n, max });
    }
    if n == 0 {
        return Err(DenseError::InvalidParameter("need at least one qubit".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

const I_UNIT: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

impl StateVector {
    /// Normalizes `amps`; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, DenseError> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(DenseError::InvalidParameter(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let n = len.trailing_zeros() as usize;
        guard(n)?;
        let mut s = Self { n, amps };
        s.normalize()?;
        Ok(s)
    }

    fn normalize(&mut self) -> Result<(), DenseError> {
        let norm = self.norm();
        if norm < 1e-300 {
            return Err(DenseError::ZeroNorm);
        }
        for a in &mut self.amps {
            *a /= norm;
        }
        Ok(())
    }

    pub fn basis_index(n: usize, index: usize) -> Result<Self, DenseError> {
        guard(n)?;
        if index >= 1 << n {
            return Err(DenseError::InvalidParameter(format!(
                "basis index {index} out of range"
            )));
        }
        let mut amps = vec![c(0.0); 1 << n];
        amps[index] = c(1.0);
        Ok(Self { n, amps })
    }

    /// `|b_0 b_1 ...>` with `bits[q]` the value of qubit `q`.
    pub fn basis(bits: &[bool]) -> Result<Self, DenseError> {
        let index = bits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (q, &b)| acc | ((b as usize) << q));
        Self::basis_index(bits.len(), index)
    }

    pub fn zero(n: usize) -> Result<Self, DenseError> {
        Self::basis_index(n, 0)
    }

    pub fn plus(n: usize) -> Result<Self, DenseError> {
        guard(n)?;
        let a = c(1.0 / ((1usize << n) as f64).sqrt());
        Ok(Self {
            n,
            amps: vec![a; 1 << n],
        })
    }

    pub fn ghz(n: usize) -> Result<Self, DenseError> {
        guard(n)?;
        let mut amps = vec![c(0.0); 1 << n];
        let a = c(std::f64::consts::FRAC_1_SQRT_2);
        amps[0] = a;
        amps[(1 << n) - 1] = a;
        Ok(Self { n, amps })
    }

    pub fn w(n: usize) -> Result<Self, DenseError> {
        Self::dicke(n, 1)
    }

    /// Uniform superposition of all weight-`k` basis states.
    pub fn dicke(n: usize, k: usize) -> Result<Self, DenseError> {
        guard(n)?;
        if k > n {
            return Err(DenseError::InvalidParameter(format!(
                "excitation count {k} exceeds {n} qubits"
            )));
        }
        let a = c(1.0 / binomial(n, k).sqrt());
        let amps = (0..1usize << n)
            .map(|i| if i.count_ones() as usize == k { a } else { c(0.0) })
            .collect();
        Ok(Self { n, amps })
    }

    /// `CZ_n |+>^n` where `CZ_n = I - 2|0...0><0...0|`: the all-zeros
    /// amplitude carries the minus sign, not the all-ones one.
    pub fn hypergraph(n: usize) -> Result<Self, DenseError> {
        let mut s = Self::plus(n)?;
        s.amps[0] = -s.amps[0];
        Ok(s)
    }

    /// Dense vector of a stabilizer state, with the global phase fixed so
    /// that the first nonzero amplitude is real and positive.
    pub fn from_tableau(t: &StabilizerTableau) -> Result<Self, DenseError> {
        let n = t.num_qubits();
        guard(n)?;
        // The support is the affine space cut out by the pure-Z elements.
        let rows = canonical_rows(t.generators(), BlockOrder::XFirst);
        let zrows: Vec<&PauliOperator> = rows.iter().filter(|r| r.x_bits().is_zero()).collect();
        let m = BitMatrix::from_rows(zrows.iter().map(|r| r.z_bits().clone()).collect(), n)
            .expect("row length n");
        let rhs = BitVector::from_bools(
            zrows
                .iter()
                .map(|r| r.sign().expect("hermitian") == Sign::Minus),
        );
        let sol = m
            .solve(&rhs)
            .expect("sizes agree")
            .expect("stabilizer group has a consistent Z part");
        let index = sol.particular.iter_ones().fold(0usize, |acc, q| acc | (1 << q));
        let mut s = Self::basis_index(n, index)?;
        for g in t.generators() {
            let gs = s.apply_pauli(g);
            for (a, b) in s.amps.iter_mut().zip(&gs.amps) {
                *a = (*a + *b) * 0.5;
            }
        }
        s.normalize()?;
        s.fix_global_phase();
        Ok(s)
    }

    fn fix_global_phase(&mut self) {
        if let Some(first) = self.amps.iter().find(|a| a.norm() > 1e-12).copied() {
            let rot = first.conj() / first.norm();
            for a in &mut self.amps {
                *a *= rot;
            }
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64, DenseError> {
        if self.n != other.n {
            return Err(DenseError::DimensionMismatch(self.n, other.n));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, DenseError> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    /// `P |self>` for a Pauli operator (any phase).
    pub fn apply_pauli(&self, p: &PauliOperator) -> StateVector {
        assert_eq!(p.num_qubits(), self.n, "Pauli size must match the state");
        let x = p.x_bits().low_word() as usize;
        let z = p.z_bits().low_word() as usize;
        let coeff = I_UNIT.powu(p.phase().exponent() as u32);
        let mut out = vec![c(0.0); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let sign = if (z & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[b ^ x] = *a * coeff * sign;
        }
        StateVector { n: self.n, amps: out }
    }

    /// `<P>` for a Hermitian Pauli.
    pub fn pauli_expectation(&self, p: &PauliOperator) -> f64 {
        let x = p.x_bits().low_word() as usize;
        let z = p.z_bits().low_word() as usize;
        let coeff = I_UNIT.powu(p.phase().exponent() as u32);
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let sign = if (z & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.amps[b ^ x].conj() * *a * sign;
        }
        (acc * coeff).re
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), DenseError> {
        for &q in &gate.qubits {
            if q >= self.n {
                return Err(DenseError::SupportOutOfRange { qubit: q, n: self.n });
            }
        }
        let q = &gate.qubits;
        let bit = |i: usize, k: usize| (i >> k) & 1 == 1;
        let len = self.amps.len();
        match gate.kind {
            GateKind::H => {
                let m = 1 << q[0];
                let h = std::f64::consts::FRAC_1_SQRT_2;
                for i in (0..len).filter(|i| i & m == 0) {
                    let (a, b) = (self.amps[i], self.amps[i | m]);
                    self.amps[i] = (a + b) * h;
                    self.amps[i | m] = (a - b) * h;
                }
            }
            GateKind::S | GateKind::Sdg | GateKind::Z => {
                let f = match gate.kind {
                    GateKind::S => I_UNIT,
                    GateKind::Sdg => -I_UNIT,
                    _ => c(-1.0),
                };
                for i in 0..len {
                    if bit(i, q[0]) {
                        self.amps[i] *= f;
                    }
                }
            }
            GateKind::X | GateKind::Y => {
                let m = 1 << q[0];
                for i in (0..len).filter(|i| i & m == 0) {
                    let (a0, a1) = (self.amps[i], self.amps[i | m]);
                    if gate.kind == GateKind::X {
                        self.amps[i] = a1;
                        self.amps[i | m] = a0;
                    } else {
                        // Y|0> = i|1>, Y|1> = -i|0>
                        self.amps[i] = -I_UNIT * a1;
                        self.amps[i | m] = I_UNIT * a0;
                    }
                }
            }
            GateKind::Cnot => {
                let cm = 1 << q[0];
                let tm: usize = q[1..].iter().map(|t| 1 << t).sum();
                for i in 0..len {
                    if i & cm != 0 && i & (1 << q[1]) == 0 {
                        self.amps.swap(i, i ^ tm);
                    }
                }
            }
            GateKind::Cz => {
                for i in 0..len {
                    if bit(i, q[0]) && bit(i, q[1]) {
                        self.amps[i] = -self.amps[i];
                    }
                }
            }
            GateKind::Swap => {
                for i in 0..len {
                    if bit(i, q[0]) && !bit(i, q[1]) {
                        let j = i ^ (1 << q[0]) ^ (1 << q[1]);
                        self.amps.swap(i, j);
                    }
                }
            }
            GateKind::Cp(letter) => {
                let p = PauliOperator::single(self.n, q[1], letter);
                let moved = self.apply_pauli(&p);
                for i in 0..len {
                    if bit(i, q[0]) {
                        self.amps[i] = moved.amps[i];
                    }
                }
            }
        }
        Ok(())
    }

    /// `O |self>` for an operator on a subset of qubits.
    pub fn apply_operator(&self, op: &SupportedOperator) -> Result<StateVector, DenseError> {
        op.check_range(self.n)?;
        let k = op.support.len();
        let local = |i: usize| -> usize {
            op.support
                .iter()
                .enumerate()
                .fold(0, |acc, (j, &q)| acc | (((i >> q) & 1) << j))
        };
        let mask: usize = op.support.iter().map(|q| 1 << q).sum();
        let spread = |l: usize| -> usize {
            op.support
                .iter()
                .enumerate()
                .fold(0, |acc, (j, &q)| acc | (((l >> j) & 1) << q))
        };
        let mut out = vec![c(0.0); self.amps.len()];
        for (i, o) in out.iter_mut().enumerate() {
            let row = local(i);
            let base = i & !mask;
            let mut acc = c(0.0);
            for col in 0..1usize << k {
                let m = op.matrix[(row, col)];
                if m != c(0.0) {
                    acc += m * self.amps[base | spread(col)];
                }
            }
            *o = acc;
        }
        Ok(StateVector { n: self.n, amps: out })
    }

    /// `<self|O|self>`, real part. Errors if `O` is not Hermitian.
    pub fn expectation(&self, op: &SupportedOperator) -> Result<f64, DenseError> {
        if !op.is_hermitian(1e-10) {
            return Err(DenseError::NotHermitian);
        }
        Ok(self.inner(&self.apply_operator(op)?)?.re)
    }

    /// Reduced density matrix on `support` (local index convention as above).
    pub fn reduced_density_matrix(&self, support: &[usize]) -> Result<DMatrix<Complex64>, DenseError> {
        for (i, &q) in support.iter().enumerate() {
            if q >= self.n {
                return Err(DenseError::SupportOutOfRange { qubit: q, n: self.n });
            }
            if support[..i].contains(&q) {
                return Err(DenseError::OverlappingSupports(q));
            }
        }
        let k = support.len();
        let mask: usize = support.iter().map(|q| 1 << q).sum();
        let spread = |l: usize| -> usize {
            support
                .iter()
                .enumerate()
                .fold(0, |acc, (j, &q)| acc | (((l >> j) & 1) << q))
        };
        let rest: Vec<usize> = (0..self.amps.len()).filter(|i| i & mask == 0).collect();
        let mut rho = DMatrix::zeros(1 << k, 1 << k);
        for r in 0..1usize << k {
            let sr = spread(r);
            for col in 0..1usize << k {
                let sc = spread(col);
                let mut acc = c(0.0);
                for &b in &rest {
                    acc += self.amps[b | sr] * self.amps[b | sc].conj();
                }
                rho[(r, col)] = acc;
            }
        }
        Ok(rho)
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm() < 1e-12 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let bits: String = (0..self.n)
                .map(|q| if (i >> q) & 1 == 1 { '1' } else { '0' })
                .collect();
            write!(f, "({:.4}{:+.4}i)|{}>", a.re, a.im, bits)?;
        }
        Ok(())
    }
}

/// Operator acting on an ordered qubit subset.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportedOperator {
    pub support: Vec<usize>,
    pub matrix: DMatrix<Complex64>,
}

impl SupportedOperator {
    pub fn new(support: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self, DenseError> {
        let dim = 1usize << support.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(DenseError::DimensionMismatch(matrix.nrows(), dim));
        }
        for (i, q) in support.iter().enumerate() {
            if support[..i].contains(q) {
                return Err(DenseError::OverlappingSupports(*q));
            }
        }
        Ok(Self { support, matrix })
    }

    /// Tensor product of single-site letters, `letters[k]` on `support[k]`.
    pub fn pauli(support: Vec<usize>, letters: &[Letter]) -> Result<Self, DenseError> {
        if support.len() != letters.len() {
            return Err(DenseError::DimensionMismatch(support.len(), letters.len()));
        }
        let p = PauliOperator::from_letters(Sign::Plus, letters);
        Self::new(support, pauli_matrix(&p))
    }

    /// Product of Z on every qubit of `support`.
    pub fn z_product(support: Vec<usize>) -> Result<Self, DenseError> {
        let letters = vec![Letter::Z; support.len()];
        Self::pauli(support, &letters)
    }

    fn check_range(&self, n: usize) -> Result<(), DenseError> {
        match self.support.iter().find(|&&q| q >= n) {
            Some(&qubit) => Err(DenseError::SupportOutOfRange { qubit, n }),
            None => Ok(()),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.matrix;
        (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .fold(0.0f64, |a, &b| a.max(b))
    }

    /// `self ⊗ other` on the concatenated support; supports must be disjoint.
    pub fn tensor(&self, other: &SupportedOperator) -> Result<SupportedOperator, DenseError> {
        if let Some(q) = self.support.iter().find(|q| other.support.contains(q)) {
            return Err(DenseError::OverlappingSupports(*q));
        }
        let mut support = self.support.clone();
        support.extend_from_slice(&other.support);
        // Local bits of `self` are the low bits, so `other` is the left factor.
        let matrix = other.matrix.kronecker(&self.matrix);
        Self::new(support, matrix)
    }
}

/// Dense matrix of a Pauli operator (qubit 0 = least significant bit).
pub fn pauli_matrix(p: &PauliOperator) -> DMatrix<Complex64> {
    let dim = 1usize << p.num_qubits();
    let x = p.x_bits().low_word() as usize;
    let z = p.z_bits().low_word() as usize;
    let coeff = I_UNIT.powu(p.phase().exponent() as u32);
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let sign = if (z & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m[(b ^ x, b)] = coeff * sign;
    }
    m
}

/// `<O1 O2> - <O1><O2>` for operators on disjoint supports.
pub fn correlation(
    s: &StateVector,
    o1: &SupportedOperator,
    o2: &SupportedOperator,
) -> Result<f64, DenseError> {
    if let Some(q) = o1.support.iter().find(|q| o2.support.contains(q)) {
        return Err(DenseError::OverlappingSupports(*q));
    }
    let a = s.expectation(o1)?;
    let b = s.expectation(o2)?;
    let o2s = s.apply_operator(o2)?;
    let o1o2s = o2s.apply_operator(o1)?;
    Ok(s.inner(&o1o2s)?.re - a * b)
}

/// Connected correlation of two Hermitian Paulis with disjoint supports.
pub fn pauli_correlation(
    s: &StateVector,
    p1: &PauliOperator,
    p2: &PauliOperator,
) -> Result<f64, DenseError> {
    if p1.num_qubits() != s.n || p2.num_qubits() != s.n {
        return Err(DenseError::DimensionMismatch(p1.num_qubits(), s.n));
    }
    if let Some(q) = p1.support().into_iter().find(|q| p2.support().contains(q)) {
        return Err(DenseError::OverlappingSupports(q));
    }
    if !p1.is_hermitian() || !p2.is_hermitian() {
        return Err(DenseError::NotHermitian);
    }
    let joint = p1.multiply(p2).expect("sizes checked");
    Ok(s.pauli_expectation(&joint) - s.pauli_expectation(p1) * s.pauli_expectation(p2))
}

/// Closed form of `|Cor(Z_{A1}, Z_{A2})|` on the Dicke state `|D_k>` with
/// `|A1| = |A2| = w`: the Z-product expectation on `j` qubits is
/// `sum_t (-1)^t C(j,t) C(n-j,k-t) / C(n,k)`.
pub fn dicke_correlation_formula(n: usize, k: usize, w: usize) -> Result<f64, DenseError> {
    if 2 * w > n || k > n {
        return Err(DenseError::InvalidParameter(format!(
            "need 2w <= n and k <= n, got n={n} k={k} w={w}"
        )));
    }
    let z_product = |j: usize| -> f64 {
        let total: f64 = (0..=j.min(k))
            .map(|t| {
                let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(j, t) * binomial(n - j, k - t)
            })
            .sum();
        total / binomial(n, k)
    };
    Ok((z_product(2 * w) - z_product(w).powi(2)).abs())
}

/// Named state families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateFamily {
    Ghz(usize),
    W(usize),
    Dicke(usize, usize),
    Hypergraph(usize),
    Plus(usize),
    Zero(usize),
    Basis(Vec<bool>),
}

impl StateFamily {
    pub fn num_qubits(&self) -> usize {
        match self {
            StateFamily::Ghz(n)
            | StateFamily::W(n)
            | StateFamily::Dicke(n, _)
            | StateFamily::Hypergraph(n)
            | StateFamily::Plus(n)
            | StateFamily::Zero(n) => *n,
            StateFamily::Basis(b) => b.len(),
        }
    }

    pub fn make(&self) -> Result<StateVector, DenseError> {
        match self {
            StateFamily::Ghz(n) => StateVector::ghz(*n),
            StateFamily::W(n) => StateVector::w(*n),
            StateFamily::Dicke(n, k) => StateVector::dicke(*n, *k),
            StateFamily::Hypergraph(n) => StateVector::hypergraph(*n),
            StateFamily::Plus(n) => StateVector::plus(*n),
            StateFamily::Zero(n) => StateVector::zero(*n),
            StateFamily::Basis(b) => StateVector::basis(b),
        }
    }
}

impl fmt::Display for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFamily::Ghz(n) => write!(f, "ghz:{n}"),
            StateFamily::W(n) => write!(f, "w:{n}"),
            StateFamily::Dicke(n, k) => write!(f, "dicke:{n},{k}"),
            StateFamily::Hypergraph(n) => write!(f, "hypergraph:{n}"),
            StateFamily::Plus(n) => write!(f, "plus:{n}"),
            StateFamily::Zero(n) => write!(f, "zero:{n}"),
            StateFamily::Basis(b) => {
                let s: String = b.iter().map(|&x| if x { '1' } else { '0' }).collect();
                write!(f, "basis:{s}")
            }
        }
    }
}

impl FromStr for StateFamily {
    type Err = DenseError;

    /// `ghz:8`, `w:8`, `dicke:8,2`, `hypergraph:4`, `plus:3`, `zero:3`,
    /// `basis:0110`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| DenseError::UnknownFamily(s.to_string()))?;
        let bad = || DenseError::InvalidParameter(format!("cannot parse parameters of {s:?}"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "ghz" => StateFamily::Ghz(num(args)?),
            "w" => StateFamily::W(num(args)?),
            "dicke" => {
                let (a, b) = args.split_once(',').ok_or_else(bad)?;
                StateFamily::Dicke(num(a)?, num(b)?)
            }
            "hypergraph" | "hg" => StateFamily::Hypergraph(num(args)?),
            "plus" => StateFamily::Plus(num(args)?),
            "zero" => StateFamily::Zero(num(args)?),
            "basis" => StateFamily::Basis(
                args.trim()
                    .chars()
                    .map(|ch| match ch {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(bad()),
                    })
                    .collect::<Result<_, _>>()?,
            ),
            _ => return Err(DenseError::UnknownFamily(name.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn z(n: usize, qs: &[usize]) -> PauliOperator {
        PauliOperator::z_on(n, qs)
    }

    #[test]
    fn ghz2_amplitudes() {
        let g = StateVector::ghz(2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((g.amplitudes()[0].re - h).abs() < TOL);
        assert!((g.amplitudes()[3].re - h).abs() < TOL);
        assert!(g.amplitudes()[1].norm() < TOL && g.amplitudes()[2].norm() < TOL);
    }

    #[test]
    fn dicke_one_is_w() {
        for n in 2..8 {
            assert_eq!(StateVector::dicke(n, 1).unwrap(), StateVector::w(n).unwrap());
        }
        assert!(StateVector::dicke(3, 4).is_err());
    }

    #[test]
    fn size_guard() {
        assert!(matches!(
            StateVector::ghz(DEFAULT_MAX_QUBITS + 40),
            Err(DenseError::TooManyQubits { .. })
        ));
    }

    #[test]
    fn tableau_to_dense() {
        let t = StabilizerTableau::from_strings(&["XXX", "ZZI", "IZZ"]).unwrap();
        let s = StateVector::from_tableau(&t).unwrap();
        assert!((s.fidelity(&StateVector::ghz(3).unwrap()).unwrap() - 1.0).abs() < TOL);
        let one = StabilizerTableau::from_strings(&["-Z", ]).unwrap();
        let s = StateVector::from_tableau(&one).unwrap();
        assert!((s.amplitudes()[1].re - 1.0).abs() < TOL);
    }

    #[test]
    fn expectation_examples() {
        let zero = StateVector::zero(1).unwrap();
        let zop = SupportedOperator::z_product(vec![0]).unwrap();
        assert!((zero.expectation(&zop).unwrap() - 1.0).abs() < TOL);
        for n in 3..8 {
            let w = StateVector::w(n).unwrap();
            let zi = SupportedOperator::z_product(vec![1]).unwrap();
            let expected = (n as f64 - 2.0) / n as f64;
            assert!((w.expectation(&zi).unwrap() - expected).abs() < TOL);
            let g = StateVector::ghz(n).unwrap();
            let xs = SupportedOperator::pauli((0..n).collect(), &vec![Letter::X; n]).unwrap();
            assert!((g.expectation(&xs).unwrap() - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn pauli_fast_path_matches_matrix_path() {
        let t = StabilizerTableau::random_stabilizer_state(4, 11);
        let s = StateVector::from_tableau(&t).unwrap();
        let ops = ["XYIZ", "-ZZXI", "YIIY", "IXZI"];
        for o in ops {
            let p: PauliOperator = o.parse().unwrap();
            let op = SupportedOperator::new((0..4).collect(), pauli_matrix(&p)).unwrap();
            assert!((s.pauli_expectation(&p) - s.expectation(&op).unwrap()).abs() < TOL);
        }
        for g in t.generators() {
            assert!((s.pauli_expectation(g) - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn correlation_examples() {
        for n in 3..8 {
            let g = StateVector::ghz(n).unwrap();
            let c = pauli_correlation(&g, &z(n, &[0]), &z(n, &[n - 1])).unwrap();
            assert!((c - 1.0).abs() < TOL);
            let hg = StateVector::hypergraph(n).unwrap();
            let x0 = PauliOperator::x_on(n, &[0]);
            let x1 = PauliOperator::x_on(n, &[1]);
            let q = 1.0 / (1u64 << (n - 2)) as f64;
            let expected = q * (1.0 - q);
            assert!((pauli_correlation(&hg, &x0, &x1).unwrap() - expected).abs() < TOL);
        }
        let s = StateVector::plus(3).unwrap();
        let a = SupportedOperator::z_product(vec![0]).unwrap();
        let b = SupportedOperator::z_product(vec![0, 1]).unwrap();
        assert!(matches!(correlation(&s, &a, &b), Err(DenseError::OverlappingSupports(0))));
    }

    #[test]
    fn fidelity_examples() {
        for n in 2..9 {
            let g = StateVector::ghz(n).unwrap();
            assert!((g.fidelity(&StateVector::zero(n).unwrap()).unwrap() - 0.5).abs() < TOL);
            let hg = StateVector::hypergraph(n).unwrap();
            let overlap = 1.0 - 1.0 / (1u64 << (n - 1)) as f64;
            let expected = overlap * overlap;
            assert!((hg.fidelity(&StateVector::plus(n).unwrap()).unwrap() - expected).abs() < TOL);
            assert!((hg.fidelity(&hg).unwrap() - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn dicke_formula_examples() {
        assert_eq!(dicke_correlation_formula(8, 3, 0).unwrap(), 0.0);
        for n in 4..11usize {
            for w in 1..=n / 2 {
                let f = dicke_correlation_formula(n, 1, w).unwrap();
                let expected = 4.0 * (w * w) as f64 / (n * n) as f64;
                assert!((f - expected).abs() < 1e-12, "n={n} w={w}");
            }
        }
        assert!(dicke_correlation_formula(3, 1, 2).is_err());
    }

    #[test]
    fn reduced_density_matrix_trace() {
        let s = StateVector::w(5).unwrap();
        let rho = s.reduced_density_matrix(&[1, 3]).unwrap();
        assert!((rho.trace().re - 1.0).abs() < TOL);
        assert!((rho[(0, 0)].re - 3.0 / 5.0).abs() < TOL);
    }

    #[test]
    fn operator_tensor_and_norm() {
        let a = SupportedOperator::pauli(vec![2], &[Letter::X]).unwrap();
        let b = SupportedOperator::pauli(vec![0], &[Letter::Z]).unwrap();
        let ab = a.tensor(&b).unwrap();
        let p: PauliOperator = "ZIX".parse().unwrap();
        let s = StateVector::from_tableau(&StabilizerTableau::random_stabilizer_state(3, 5)).unwrap();
        assert!((s.expectation(&ab).unwrap() - s.pauli_expectation(&p)).abs() < TOL);
        assert!((ab.operator_norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn family_parsing() {
        let cases = ["ghz:8", "w:5", "dicke:8,2", "hypergraph:4", "plus:2", "zero:3", "basis:0110"];
        for c in cases {
            let f: StateFamily = c.parse().unwrap();
            assert_eq!(f.to_string(), c);
            f.make().unwrap();
        }
        assert!("foo:3".parse::<StateFamily>().is_err());
        assert!("ghz:x".parse::<StateFamily>().is_err());
    }
}
