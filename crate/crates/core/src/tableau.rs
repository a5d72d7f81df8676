//! Pure stabilizer states with destabilizers, Clifford updates and Pauli
//! measurements.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gate::{Gate, GateError, GateKind};
use crate::pauli::{
    symplectic_rank, BitMatrix, BitVector, PauliError, PauliOperator, Sign,
};

/// Largest subgroup dimension `restricted_group_elements` will enumerate.
pub const MAX_ENUMERATION_DIM: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableauError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error("operator {0} is not Hermitian")]
    NotHermitian(String),
    #[error("expected {expected} generators, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("generators {0} and {1} anticommute")]
    Anticommuting(usize, usize),
    #[error("generators are not independent (rank {rank} < {expected})")]
    Dependent { rank: usize, expected: usize },
    #[error("generator {0} is a multiple of the identity")]
    TrivialGenerator(usize),
    #[error("outcome of {pauli} is deterministically {actual:?}, cannot force {forced:?}")]
    Contradiction {
        pauli: String,
        actual: Sign,
        forced: Sign,
    },
    #[error("subgroup of dimension {dim} exceeds enumeration limit {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("qubit count must be at least 1")]
    NoQubits,
    #[error("{0}")]
    Invariant(String),
}

/// Result of a Pauli measurement.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub outcome: Sign,
    pub deterministic: bool,
}

/// Pure `n`-qubit stabilizer state. Generator `i` is paired with
/// destabilizer `i`: they anticommute, and each commutes with every other
/// row of the opposite kind.
#[derive(Clone, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    generators: Vec<PauliOperator>,
    destabilizers: Vec<PauliOperator>,
}

impl StabilizerTableau {
    pub fn zero_state(n: usize) -> Self {
        Self {
            n,
            generators: (0..n)
                .map(|q| PauliOperator::single(n, q, crate::pauli::Letter::Z))
                .collect(),
            destabilizers: (0..n)
                .map(|q| PauliOperator::single(n, q, crate::pauli::Letter::X))
                .collect(),
        }
    }

    /// `|+>^n`.
    pub fn plus_state(n: usize) -> Self {
        let mut t = Self::zero_state(n);
        for q in 0..n {
            t.apply(&Gate::h(q)).expect("in range");
        }
        t
    }

    /// Builds the state stabilized by `generators`, which must be `n`
    /// independent commuting Hermitian operators on `n` qubits.
    pub fn from_generators(generators: Vec<PauliOperator>) -> Result<Self, TableauError> {
        let n = generators.first().map(|g| g.num_qubits()).ok_or(TableauError::NoQubits)?;
        if n == 0 {
            return Err(TableauError::NoQubits);
        }
        if generators.len() != n {
            return Err(TableauError::WrongCount {
                expected: n,
                got: generators.len(),
            });
        }
        check_commuting_set(&generators)?;
        let rank = symplectic_rank(&generators);
        if rank < n {
            return Err(TableauError::Dependent { rank, expected: n });
        }
        let destabilizers = destabilizers_for(&generators);
        Ok(Self {
            n,
            generators,
            destabilizers,
        })
    }

    /// Parses generator strings.
    pub fn from_strings<S: AsRef<str>>(gens: &[S]) -> Result<Self, TableauError> {
        let ops = gens
            .iter()
            .map(|s| s.as_ref().parse::<PauliOperator>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_generators(ops)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    pub fn destabilizers(&self) -> &[PauliOperator] {
        &self.destabilizers
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<(), TableauError> {
        gate.check_range(self.n)?;
        for row in self.generators.iter_mut().chain(self.destabilizers.iter_mut()) {
            gate.conjugate(row);
        }
        Ok(())
    }

    /// Applies a gate given by kind and qubits, validating arity and collisions.
    pub fn apply_gate(&mut self, kind: GateKind, qubits: &[usize]) -> Result<(), TableauError> {
        let gate = Gate::new(kind, qubits.to_vec())?;
        self.apply(&gate)
    }

    pub fn apply_all<'a>(
        &mut self,
        gates: impl IntoIterator<Item = &'a Gate>,
    ) -> Result<(), TableauError> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    fn check_operator(&self, p: &PauliOperator) -> Result<(), TableauError> {
        if p.num_qubits() != self.n {
            return Err(PauliError::DimensionMismatch {
                left: self.n,
                right: p.num_qubits(),
            }
            .into());
        }
        if !p.is_hermitian() {
            return Err(TableauError::NotHermitian(p.to_string()));
        }
        Ok(())
    }

    /// Product of the generators whose destabilizer anticommutes with `p`.
    /// When `p` commutes with the whole group this equals `±p`.
    fn decompose(&self, p: &PauliOperator) -> PauliOperator {
        let mut acc = PauliOperator::identity(self.n);
        for (g, d) in self.generators.iter().zip(&self.destabilizers) {
            if d.anticommutes_unchecked(p) {
                acc.mul_assign_right(g);
            }
        }
        acc
    }

    /// `Some(s)` when `s * p` is in the stabilizer group.
    pub fn is_stabilized_by(&self, p: &PauliOperator) -> Result<Option<Sign>, TableauError> {
        self.check_operator(p)?;
        if self.generators.iter().any(|g| g.anticommutes_unchecked(p)) {
            return Ok(None);
        }
        let prod = self.decompose(p);
        debug_assert!(prod.same_letters(p));
        Ok(Some(relative_sign(&prod, p)))
    }

    /// Measures Hermitian `p`. `forced` picks the outcome when it is random;
    /// forcing a deterministic outcome to the other sign is an error.
    pub fn measure_pauli<R: Rng + ?Sized>(
        &mut self,
        p: &PauliOperator,
        forced: Option<Sign>,
        rng: &mut R,
    ) -> Result<Measurement, TableauError> {
        self.check_operator(p)?;
        let anti: Vec<usize> = (0..self.n)
            .filter(|&i| self.generators[i].anticommutes_unchecked(p))
            .collect();
        let Some((&pivot, rest)) = anti.split_first() else {
            let actual = relative_sign(&self.decompose(p), p);
            if let Some(f) = forced {
                if f != actual {
                    return Err(TableauError::Contradiction {
                        pauli: p.to_string(),
                        actual,
                        forced: f,
                    });
                }
            }
            return Ok(Measurement {
                outcome: actual,
                deterministic: true,
            });
        };
        let gp = self.generators[pivot].clone();
        for &i in rest {
            self.generators[i].mul_assign_right(&gp);
        }
        for j in 0..self.n {
            if j != pivot && self.destabilizers[j].anticommutes_unchecked(p) {
                self.destabilizers[j].mul_assign_right(&gp);
            }
        }
        let outcome = forced.unwrap_or_else(|| {
            if rng.gen::<bool>() {
                Sign::Minus
            } else {
                Sign::Plus
            }
        });
        self.destabilizers[pivot] = gp.unsigned();
        self.generators[pivot] = p.clone().with_sign(if outcome == Sign::Plus {
            p.sign().expect("hermitian")
        } else {
            p.sign().expect("hermitian").flip()
        });
        Ok(Measurement {
            outcome,
            deterministic: false,
        })
    }

    /// True when every generator of `self` stabilizes `other` with sign `+1`.
    pub fn states_equal(&self, other: &StabilizerTableau) -> bool {
        self.n == other.n
            && self.generators.iter().all(|g| {
                matches!(other.is_stabilized_by(g), Ok(Some(Sign::Plus)))
            })
    }

    /// Reduced row echelon form of the generator matrix over columns
    /// `(x | z)`: rows with an X-part pivot come first, pure Z rows last.
    /// Destabilizers are rebuilt for the new rows.
    pub fn canonical_form(&self) -> StabilizerTableau {
        let rows = canonical_rows(&self.generators, BlockOrder::XFirst);
        let destabilizers = destabilizers_for(&rows);
        StabilizerTableau {
            n: self.n,
            generators: rows,
            destabilizers,
        }
    }

    /// Number of canonical rows that carry an X part.
    pub fn x_rank(&self) -> usize {
        let xs: Vec<BitVector> = self.generators.iter().map(|g| g.x_bits().clone()).collect();
        BitMatrix::from_rows(xs, self.n).map(|m| m.rank()).unwrap_or(0)
    }

    /// Seed-derived random Clifford circuit of depth `2n` applied to `|0^n>`.
    pub fn random_stabilizer_state(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with_rng(n, &mut rng)
    }

    pub fn random_with_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut t = Self::zero_state(n);
        let circuit = random_clifford_circuit(n, 2 * n, rng);
        t.apply_all(&circuit).expect("generated gates are in range");
        t
    }

    /// Signed group element `prod_{i : c_i = 1} g_i`.
    pub fn group_element(&self, combination: &BitVector) -> PauliOperator {
        let mut acc = PauliOperator::identity(self.n);
        for i in combination.iter_ones() {
            acc.mul_assign_right(&self.generators[i]);
        }
        acc
    }

    /// Basis (as generator combinations) of the subgroup of elements
    /// supported inside `subset`.
    fn restricted_basis(&self, subset: &[usize]) -> Vec<BitVector> {
        let mut inside = vec![false; self.n];
        for &q in subset {
            if q < self.n {
                inside[q] = true;
            }
        }
        let outside: Vec<usize> = (0..self.n).filter(|&q| !inside[q]).collect();
        let mut m = BitMatrix::zeros(2 * outside.len(), self.n);
        for (i, g) in self.generators.iter().enumerate() {
            for (r, &q) in outside.iter().enumerate() {
                m.set(2 * r, i, g.x_bits().get(q));
                m.set(2 * r + 1, i, g.z_bits().get(q));
            }
        }
        m.null_space()
    }

    /// Generators of the subgroup supported inside `subset`, as operators on
    /// the full register.
    pub fn restricted_generators(&self, subset: &[usize]) -> Vec<PauliOperator> {
        self.restricted_basis(subset)
            .iter()
            .map(|c| self.group_element(c))
            .collect()
    }

    /// All signed group elements supported inside `subset`, identity
    /// included, sorted by weight then letters.
    pub fn restricted_group_elements(
        &self,
        subset: &[usize],
    ) -> Result<Vec<PauliOperator>, TableauError> {
        let gens = self.restricted_generators(subset);
        if gens.len() > MAX_ENUMERATION_DIM {
            return Err(TableauError::TooLarge {
                dim: gens.len(),
                max: MAX_ENUMERATION_DIM,
            });
        }
        let mut out = span_elements(&gens, self.n);
        out.sort_by(|a, b| a.cmp_weight_lex(b));
        Ok(out)
    }

    /// State of the qubits in `keep` when every other qubit is known to be in
    /// a Z eigenstate (as after Z measurements). Qubits are renumbered in the
    /// order given by `keep`.
    pub fn reduce_to(&self, keep: &[usize]) -> Result<StabilizerTableau, TableauError> {
        let gens = self.restricted_generators(keep);
        if gens.len() != keep.len() {
            return Err(TableauError::Invariant(format!(
                "discarded qubits are entangled with the kept ones ({} of {} kept generators)",
                gens.len(),
                keep.len()
            )));
        }
        if keep.is_empty() {
            return Err(TableauError::NoQubits);
        }
        let restricted: Vec<PauliOperator> = gens.iter().map(|g| g.restrict(keep)).collect();
        StabilizerTableau::from_generators(restricted)
    }

    /// Replaces generator `index` by its negation.
    pub fn flip_generator_sign(&self, index: usize) -> Result<StabilizerTableau, TableauError> {
        if index >= self.n {
            return Err(TableauError::WrongCount {
                expected: self.n,
                got: index + 1,
            });
        }
        let mut t = self.clone();
        t.generators[index] = t.generators[index].negated();
        Ok(t)
    }

    /// Tensor product, `self` on the low qubit indices.
    pub fn tensor(&self, other: &StabilizerTableau) -> StabilizerTableau {
        let lift = |p: &PauliOperator, left: bool| {
            if left {
                p.tensor(&PauliOperator::identity(other.n))
            } else {
                PauliOperator::identity(self.n).tensor(p)
            }
        };
        let generators = self
            .generators
            .iter()
            .map(|p| lift(p, true))
            .chain(other.generators.iter().map(|p| lift(p, false)))
            .collect();
        let destabilizers = self
            .destabilizers
            .iter()
            .map(|p| lift(p, true))
            .chain(other.destabilizers.iter().map(|p| lift(p, false)))
            .collect();
        StabilizerTableau {
            n: self.n + other.n,
            generators,
            destabilizers,
        }
    }

    /// Checks every structural invariant; `Err` names the first violation.
    pub fn check_invariants(&self) -> Result<(), TableauError> {
        if self.generators.len() != self.n || self.destabilizers.len() != self.n {
            return Err(TableauError::WrongCount {
                expected: self.n,
                got: self.generators.len(),
            });
        }
        for (i, g) in self.generators.iter().enumerate() {
            if !g.is_hermitian() {
                return Err(TableauError::NotHermitian(g.to_string()));
            }
            if g.is_identity() {
                return Err(TableauError::TrivialGenerator(i));
            }
        }
        check_commuting_set(&self.generators)?;
        let rank = symplectic_rank(&self.generators);
        if rank != self.n {
            return Err(TableauError::Dependent {
                rank,
                expected: self.n,
            });
        }
        for (i, d) in self.destabilizers.iter().enumerate() {
            for (j, g) in self.generators.iter().enumerate() {
                if d.anticommutes_unchecked(g) != (i == j) {
                    return Err(TableauError::Invariant(format!(
                        "destabilizer {i} vs generator {j} has the wrong commutation"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for StabilizerTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
        write!(f, "Tableau[{}]", gens.join(", "))
    }
}

/// Sign `s` with `prod == s * p`, for operators with equal letters.
fn relative_sign(prod: &PauliOperator, p: &PauliOperator) -> Sign {
    let diff = (prod.phase_exponent() + 4 - p.phase_exponent()) & 3;
    debug_assert!(diff == 0 || diff == 2, "relative phase must be real");
    if diff == 0 {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

fn check_commuting_set(ops: &[PauliOperator]) -> Result<(), TableauError> {
    for (i, a) in ops.iter().enumerate() {
        if !a.is_hermitian() {
            return Err(TableauError::NotHermitian(a.to_string()));
        }
        for (j, b) in ops.iter().enumerate().skip(i + 1) {
            if !a.commutes(b)? {
                return Err(TableauError::Anticommuting(i, j));
            }
        }
    }
    Ok(())
}

/// Destabilizers for `n` independent commuting generators: solve
/// `<d_i, g_j> = delta_ij`, then make the `d_i` mutually commute.
pub(crate) fn destabilizers_for(gens: &[PauliOperator]) -> Vec<PauliOperator> {
    let n = gens.len();
    if n == 0 {
        return Vec::new();
    }
    // <d, g> = d_x . g_z + d_z . g_x, so the row for g is (g_z | g_x).
    let rows: Vec<BitVector> = gens
        .iter()
        .map(|g| g.z_bits().concat(g.x_bits()))
        .collect();
    let m = BitMatrix::from_rows(rows, 2 * n).expect("uniform sizes");
    let mut destab: Vec<PauliOperator> = (0..n)
        .map(|i| {
            let mut e = BitVector::zeros(n);
            e.set(i, true);
            let sol = m
                .solve(&e)
                .expect("sizes agree")
                .expect("independent generators admit a dual basis");
            PauliOperator::from_symplectic(&sol.particular).expect("even length")
        })
        .collect();
    for j in 0..n {
        for i in 0..j {
            if destab[i].anticommutes_unchecked(&destab[j]) {
                let gi = gens[i].clone();
                destab[j].mul_assign_right(&gi);
            }
        }
    }
    destab.into_iter().map(|d| d.unsigned()).collect()
}

/// Which half of the symplectic row is eliminated first.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BlockOrder {
    XFirst,
    ZFirst,
}

/// Row-reduces signed Pauli rows (phases tracked through every row
/// operation). Zero rows are dropped. Returns the reduced rows.
pub fn canonical_rows(ops: &[PauliOperator], order: BlockOrder) -> Vec<PauliOperator> {
    let Some(n) = ops.first().map(|p| p.num_qubits()) else {
        return Vec::new();
    };
    let mut rows: Vec<PauliOperator> = ops.to_vec();
    let bit = |p: &PauliOperator, c: usize| -> bool {
        let (first, second) = match order {
            BlockOrder::XFirst => (p.x_bits(), p.z_bits()),
            BlockOrder::ZFirst => (p.z_bits(), p.x_bits()),
        };
        if c < n {
            first.get(c)
        } else {
            second.get(c - n)
        }
    };
    let mut next = 0;
    for c in 0..2 * n {
        if next == rows.len() {
            break;
        }
        let Some(p) = (next..rows.len()).find(|&r| bit(&rows[r], c)) else {
            continue;
        };
        rows.swap(next, p);
        let pivot = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != next && bit(row, c) {
                row.mul_assign_right(&pivot);
            }
        }
        next += 1;
    }
    rows.truncate(next);
    rows
}

/// Every element of the group generated by `gens` (identity included).
pub(crate) fn span_elements(gens: &[PauliOperator], n: usize) -> Vec<PauliOperator> {
    let mut out = Vec::with_capacity(1 << gens.len());
    let mut cur = PauliOperator::identity(n);
    out.push(cur.clone());
    // Gray code walk: step k toggles generator trailing_zeros(k). The
    // generators commute and square to +I, so toggling is one product.
    for k in 1u64..(1u64 << gens.len()) {
        cur.mul_assign_right(&gens[k.trailing_zeros() as usize]);
        out.push(cur.clone());
    }
    out
}

/// Random Clifford circuit: each layer applies a random single-qubit
/// Clifford to every qubit, then CNOTs on a random pairing.
pub fn random_clifford_circuit<R: Rng + ?Sized>(n: usize, depth: usize, rng: &mut R) -> Vec<Gate> {
    let mut gates = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..depth {
        for q in 0..n {
            random_single_qubit_clifford(q, rng, &mut gates);
        }
        order.shuffle(rng);
        for pair in order.chunks_exact(2) {
            if rng.gen::<bool>() {
                gates.push(Gate::cnot(pair[0], pair[1]));
            }
        }
    }
    gates
}

/// Appends a uniformly chosen element of the 24-element single-qubit
/// Clifford group (mod phase) followed by a random Pauli.
pub fn random_single_qubit_clifford<R: Rng + ?Sized>(q: usize, rng: &mut R, out: &mut Vec<Gate>) {
    // 6 choices for the image of Z, times 4 for the image of X given Z.
    match rng.gen_range(0..6) {
        0 => {}
        1 => out.push(Gate::h(q)),
        2 => {
            out.push(Gate::h(q));
            out.push(Gate::s(q));
        }
        3 => {
            out.push(Gate::h(q));
            out.push(Gate::s(q));
            out.push(Gate::h(q));
        }
        4 => {
            out.push(Gate::s(q));
            out.push(Gate::h(q));
        }
        _ => {
            out.push(Gate::s(q));
            out.push(Gate::h(q));
            out.push(Gate::s(q));
        }
    }
    for _ in 0..rng.gen_range(0..4) {
        out.push(Gate::s(q));
    }
    match rng.gen_range(0..4) {
        0 => {}
        1 => out.push(Gate::x(q)),
        2 => out.push(Gate::y(q)),
        _ => out.push(Gate::z(q)),
    }
}

#[derive(Serialize, Deserialize)]
struct TableauJson {
    n: usize,
    generators: Vec<PauliOperator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    destabilizers: Option<Vec<PauliOperator>>,
}

impl Serialize for StabilizerTableau {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TableauJson {
            n: self.n,
            generators: self.generators.clone(),
            destabilizers: Some(self.destabilizers.clone()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StabilizerTableau {
    /// Destabilizers are optional on input; they are rebuilt when missing or
    /// inconsistent with the generators.
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = TableauJson::deserialize(deserializer)?;
        if raw.generators.iter().any(|g| g.num_qubits() != raw.n) {
            return Err(serde::de::Error::custom("generator length differs from n"));
        }
        let mut t = StabilizerTableau::from_generators(raw.generators)
            .map_err(serde::de::Error::custom)?;
        if let Some(d) = raw.destabilizers {
            let candidate = StabilizerTableau {
                n: t.n,
                generators: t.generators.clone(),
                destabilizers: d,
            };
            if candidate.check_invariants().is_ok() {
                t = candidate;
            }
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(gens: &[&str]) -> StabilizerTableau {
        StabilizerTableau::from_strings(gens).unwrap()
    }

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    fn ghz3() -> StabilizerTableau {
        t(&["XXX", "ZZI", "IZZ"])
    }

    fn gens(t: &StabilizerTableau) -> Vec<String> {
        t.generators().iter().map(|g| g.to_string()).collect()
    }

    #[test]
    fn zero_state_generators() {
        assert_eq!(gens(&StabilizerTableau::zero_state(1)), vec!["Z"]);
        assert_eq!(
            gens(&StabilizerTableau::zero_state(3)),
            vec!["ZII", "IZI", "IIZ"]
        );
        let z2 = StabilizerTableau::zero_state(2);
        assert_eq!(z2.is_stabilized_by(&p("ZZ")).unwrap(), Some(Sign::Plus));
        z2.check_invariants().unwrap();
    }

    #[test]
    fn hadamard_and_bell() {
        let mut a = StabilizerTableau::zero_state(1);
        a.apply(&Gate::h(0)).unwrap();
        assert_eq!(gens(&a), vec!["X"]);
        let mut b = t(&["XI", "IZ"]);
        b.apply(&Gate::cnot(0, 1)).unwrap();
        assert_eq!(gens(&b), vec!["XX", "ZZ"]);
        b.check_invariants().unwrap();
    }

    #[test]
    fn gate_errors() {
        let mut a = StabilizerTableau::zero_state(2);
        assert!(matches!(
            a.apply_gate(GateKind::Cnot, &[1, 1]),
            Err(TableauError::Gate(GateError::QubitCollision { .. }))
        ));
        assert!(matches!(
            a.apply_gate(GateKind::H, &[2]),
            Err(TableauError::Gate(GateError::OutOfRange { .. }))
        ));
        assert!(matches!(
            "T".parse::<GateKind>(),
            Err(GateError::UnknownGate(_))
        ));
    }

    #[test]
    fn measurement_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut z = StabilizerTableau::zero_state(1);
        let m = z.measure_pauli(&p("Z"), None, &mut rng).unwrap();
        assert_eq!(m, Measurement { outcome: Sign::Plus, deterministic: true });

        let mut plus = StabilizerTableau::plus_state(1);
        let m = plus.measure_pauli(&p("Z"), Some(Sign::Minus), &mut rng).unwrap();
        assert!(!m.deterministic);
        assert_eq!(m.outcome, Sign::Minus);
        assert_eq!(gens(&plus), vec!["-Z"]);

        let mut g = ghz3();
        let m = g.measure_pauli(&p("ZZI"), None, &mut rng).unwrap();
        assert_eq!(m, Measurement { outcome: Sign::Plus, deterministic: true });
        assert!(matches!(
            g.measure_pauli(&p("ZZI"), Some(Sign::Minus), &mut rng),
            Err(TableauError::Contradiction { .. })
        ));
        assert!(matches!(
            g.measure_pauli(&p("iZZI"), None, &mut rng),
            Err(TableauError::NotHermitian(_))
        ));
    }

    #[test]
    fn repeated_measurement_is_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for seed in 0..30 {
            let mut s = StabilizerTableau::random_stabilizer_state(5, seed);
            let q = p("XZIYZ");
            let first = s.measure_pauli(&q, None, &mut rng).unwrap();
            s.check_invariants().unwrap();
            let second = s.measure_pauli(&q, None, &mut rng).unwrap();
            assert!(second.deterministic);
            assert_eq!(first.outcome, second.outcome);
            for g in s.generators().to_vec() {
                let m = s.measure_pauli(&g, None, &mut rng).unwrap();
                assert_eq!(m, Measurement { outcome: Sign::Plus, deterministic: true });
            }
        }
    }

    #[test]
    fn stabilized_by_examples() {
        assert_eq!(ghz3().is_stabilized_by(&p("XXX")).unwrap(), Some(Sign::Plus));
        assert_eq!(ghz3().is_stabilized_by(&p("ZZZ")).unwrap(), None);
        assert_eq!(ghz3().is_stabilized_by(&p("-YYX")).unwrap(), Some(Sign::Plus));
        let one = t(&["-Z"]);
        assert_eq!(one.is_stabilized_by(&p("Z")).unwrap(), Some(Sign::Minus));
    }

    #[test]
    fn equality_examples() {
        let mut a = StabilizerTableau::zero_state(1);
        a.apply(&Gate::h(0)).unwrap();
        assert!(a.states_equal(&t(&["X"])));
        assert!(!StabilizerTableau::zero_state(1).states_equal(&t(&["-Z"])));
        assert!(ghz3().states_equal(&t(&["ZZI", "-YYX", "ZIZ"])));
    }

    #[test]
    fn canonical_examples() {
        let z = StabilizerTableau::zero_state(3).canonical_form();
        assert_eq!(gens(&z), vec!["ZII", "IZI", "IIZ"]);
        assert_eq!(z.x_rank(), 0);
        let bell = t(&["ZZ", "-YY"]).canonical_form();
        assert_eq!(gens(&bell), vec!["XX", "ZZ"]);
        for seed in 0..20 {
            let r = StabilizerTableau::random_stabilizer_state(6, seed);
            let c = r.canonical_form();
            c.check_invariants().unwrap();
            assert!(c.states_equal(&r));
            assert_eq!(c.canonical_form().generators(), c.generators());
        }
    }

    #[test]
    fn z_first_rows_put_pure_x_last() {
        let rows = canonical_rows(&[p("XXXX"), p("ZZZZ"), p("ZZII")], BlockOrder::ZFirst);
        let s: Vec<String> = rows.iter().map(|r| r.to_string()).collect();
        assert_eq!(s, vec!["ZZII", "IIZZ", "XXXX"]);
    }

    #[test]
    fn random_states_reproducible_and_valid() {
        for seed in 0..40 {
            let a = StabilizerTableau::random_stabilizer_state(7, seed);
            let b = StabilizerTableau::random_stabilizer_state(7, seed);
            assert!(a.states_equal(&b));
            a.check_invariants().unwrap();
        }
    }

    #[test]
    fn single_qubit_sweep_hits_all_six_states() {
        let targets = ["Z", "-Z", "X", "-X", "Y", "-Y"];
        let mut seen = [false; 6];
        for seed in 0..200 {
            let s = StabilizerTableau::random_stabilizer_state(1, seed);
            let g = s.generators()[0].to_string();
            let i = targets.iter().position(|t| *t == g).unwrap();
            seen[i] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn restricted_examples() {
        let s = |v: Vec<PauliOperator>| -> Vec<String> { v.iter().map(|x| x.to_string()).collect() };
        assert_eq!(s(ghz3().restricted_group_elements(&[0, 1]).unwrap()), vec!["III", "ZZI"]);
        assert_eq!(
            s(StabilizerTableau::zero_state(2).restricted_group_elements(&[0]).unwrap()),
            vec!["II", "ZI"]
        );
        assert_eq!(s(t(&["XX", "ZZ"]).restricted_group_elements(&[0]).unwrap()), vec!["II"]);
        assert_eq!(ghz3().restricted_group_elements(&[0, 1, 2]).unwrap().len(), 8);
    }

    #[test]
    fn reduce_after_measurement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut bell = t(&["XX", "ZZ"]);
        bell.measure_pauli(&p("IZ"), Some(Sign::Plus), &mut rng).unwrap();
        let r = bell.reduce_to(&[0]).unwrap();
        assert_eq!(gens(&r), vec!["Z"]);
        let mut bell = t(&["XX", "ZZ"]);
        bell.measure_pauli(&p("IZ"), Some(Sign::Minus), &mut rng).unwrap();
        assert_eq!(gens(&bell.reduce_to(&[0]).unwrap()), vec!["-Z"]);
        assert!(t(&["XX", "ZZ"]).reduce_to(&[0]).is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            StabilizerTableau::from_strings(&["XI", "ZI"]),
            Err(TableauError::Anticommuting(0, 1))
        ));
        assert!(matches!(
            StabilizerTableau::from_strings(&["ZZ", "ZZ"]),
            Err(TableauError::Dependent { .. })
        ));
        assert!(matches!(
            StabilizerTableau::from_strings(&["ZZ"]),
            Err(TableauError::WrongCount { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let g = ghz3();
        let j = serde_json::to_string(&g).unwrap();
        assert!(j.starts_with("{\"n\":3,\"generators\":[\"XXX\",\"ZZI\",\"IZZ\"]"));
        let back: StabilizerTableau = serde_json::from_str(&j).unwrap();
        assert_eq!(back, g);
        let bare: StabilizerTableau =
            serde_json::from_str("{\"n\":2,\"generators\":[\"XX\",\"-YY\"]}").unwrap();
        bare.check_invariants().unwrap();
    }
}
