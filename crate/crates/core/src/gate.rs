//! Clifford gate set and its action on Pauli operators by conjugation.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::pauli::{Letter, PauliOperator};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GateError {
    #[error("unknown gate {0:?}")]
    UnknownGate(String),
    #[error("gate {gate} expects {expected} qubits, got {got}")]
    Arity {
        gate: String,
        expected: String,
        got: usize,
    },
    #[error("gate {gate} acts twice on qubit {qubit}")]
    QubitCollision { gate: String, qubit: usize },
    #[error("qubit {qubit} out of range for {n} qubits")]
    OutOfRange { qubit: usize, n: usize },
    #[error("controlled Pauli needs a non-identity letter")]
    IdentityTarget,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    /// `CNOT` with qubits `[control, target, ...]`; more than one target is a
    /// fan-out, which is a product of commuting CNOTs.
    Cnot,
    Cz,
    Swap,
    /// Controlled single-site Pauli, qubits `[control, target]`.
    Cp(Letter),
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::Sdg => "SDG",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Swap => "SWAP",
            GateKind::Cp(_) => "CP",
        }
    }

    pub fn is_single_qubit(self) -> bool {
        matches!(
            self,
            GateKind::H | GateKind::S | GateKind::Sdg | GateKind::X | GateKind::Y | GateKind::Z
        )
    }

    pub fn pauli(letter: Letter) -> Option<GateKind> {
        match letter {
            Letter::I => None,
            Letter::X => Some(GateKind::X),
            Letter::Y => Some(GateKind::Y),
            Letter::Z => Some(GateKind::Z),
        }
    }

    fn check_arity(self, got: usize) -> Result<(), GateError> {
        let (ok, expected) = match self {
            k if k.is_single_qubit() => (got == 1, "1"),
            GateKind::Cnot => (got >= 2, "at least 2"),
            _ => (got == 2, "2"),
        };
        if ok {
            Ok(())
        } else {
            Err(GateError::Arity {
                gate: self.name().to_string(),
                expected: expected.to_string(),
                got,
            })
        }
    }
}

impl FromStr for GateKind {
    type Err = GateError;

    /// Gate names as used in circuit files; `CP` needs its letter separately,
    /// so `CX`/`CY`/`CZ`-style spellings are accepted here instead.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "H" => GateKind::H,
            "S" => GateKind::S,
            "SDG" | "S_DAG" | "SDAG" => GateKind::Sdg,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "CNOT" | "CX" => GateKind::Cnot,
            "CZ" => GateKind::Cz,
            "SWAP" => GateKind::Swap,
            "CY" => GateKind::Cp(Letter::Y),
            _ => return Err(GateError::UnknownGate(s.to_string())),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Result<Self, GateError> {
        kind.check_arity(qubits.len())?;
        if let GateKind::Cp(Letter::I) = kind {
            return Err(GateError::IdentityTarget);
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(GateError::QubitCollision {
                    gate: kind.name().to_string(),
                    qubit: *q,
                });
            }
        }
        Ok(Self { kind, qubits })
    }

    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, qubits: vec![q] }
    }

    pub fn s(q: usize) -> Self {
        Self { kind: GateKind::S, qubits: vec![q] }
    }

    pub fn sdg(q: usize) -> Self {
        Self { kind: GateKind::Sdg, qubits: vec![q] }
    }

    pub fn x(q: usize) -> Self {
        Self { kind: GateKind::X, qubits: vec![q] }
    }

    pub fn y(q: usize) -> Self {
        Self { kind: GateKind::Y, qubits: vec![q] }
    }

    pub fn z(q: usize) -> Self {
        Self { kind: GateKind::Z, qubits: vec![q] }
    }

    /// Panics if `c == t`.
    pub fn cnot(c: usize, t: usize) -> Self {
        Self::new(GateKind::Cnot, vec![c, t]).expect("distinct qubits")
    }

    /// Panics if `a == b`.
    pub fn cz(a: usize, b: usize) -> Self {
        Self::new(GateKind::Cz, vec![a, b]).expect("distinct qubits")
    }

    /// Panics if `a == b`.
    pub fn swap(a: usize, b: usize) -> Self {
        Self::new(GateKind::Swap, vec![a, b]).expect("distinct qubits")
    }

    /// Controlled `letter` on `target`. Panics on identity or `c == t`.
    pub fn cp(letter: Letter, c: usize, t: usize) -> Self {
        Self::new(GateKind::Cp(letter), vec![c, t]).expect("valid controlled Pauli")
    }

    /// Fan-out `CNOT` from `c` to every target.
    pub fn fanout(c: usize, targets: &[usize]) -> Result<Self, GateError> {
        let mut qubits = vec![c];
        qubits.extend_from_slice(targets);
        Self::new(GateKind::Cnot, qubits)
    }

    pub fn fan_in(&self) -> usize {
        self.qubits.len()
    }

    pub fn check_range(&self, n: usize) -> Result<(), GateError> {
        match self.qubits.iter().find(|&&q| q >= n) {
            Some(&qubit) => Err(GateError::OutOfRange { qubit, n }),
            None => Ok(()),
        }
    }

    /// Replaces `p` by `U p U^dagger`. Qubits must be in range.
    pub fn conjugate(&self, p: &mut PauliOperator) {
        let q = &self.qubits;
        match self.kind {
            GateKind::Cnot => {
                for &t in &q[1..] {
                    conj_cnot(p, q[0], t);
                }
            }
            GateKind::Cz => conj_cz(p, q[0], q[1]),
            GateKind::Swap => conj_swap(p, q[0], q[1]),
            GateKind::Cp(letter) => conj_cp(p, letter, q[0], q[1]),
            kind => conj_single(p, kind, q[0]),
        }
    }

    /// Inverse gate.
    pub fn inverse(&self) -> Gate {
        let kind = match self.kind {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            k => k,
        };
        Gate {
            kind,
            qubits: self.qubits.clone(),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GateKind::Cp(l) => write!(f, "C{}", l.as_char())?,
            k => f.write_str(k.name())?,
        }
        let qs: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        write!(f, "({})", qs.join(","))
    }
}

fn conj_single(p: &mut PauliOperator, kind: GateKind, q: usize) {
    let x = p.x_bits().get(q);
    let z = p.z_bits().get(q);
    let (xb, zb) = (x as u8, z as u8);
    match kind {
        GateKind::H => {
            let (xs, zs) = p.xz_mut();
            xs.set(q, z);
            zs.set(q, x);
            p.add_phase(2 * (xb & zb));
        }
        GateKind::S => {
            p.add_phase(xb);
            p.xz_mut().1.set(q, z ^ x);
        }
        GateKind::Sdg => {
            p.add_phase(3 * xb);
            p.xz_mut().1.set(q, z ^ x);
        }
        GateKind::X => p.add_phase(2 * zb),
        GateKind::Z => p.add_phase(2 * xb),
        GateKind::Y => p.add_phase(2 * (xb ^ zb)),
        _ => unreachable!("two-qubit gate routed to single-qubit rule"),
    }
}

fn conj_cnot(p: &mut PauliOperator, c: usize, t: usize) {
    let xc = p.x_bits().get(c);
    let zt = p.z_bits().get(t);
    let (xs, zs) = p.xz_mut();
    if xc {
        xs.flip(t);
    }
    if zt {
        zs.flip(c);
    }
}

fn conj_cz(p: &mut PauliOperator, a: usize, b: usize) {
    let xa = p.x_bits().get(a);
    let xb = p.x_bits().get(b);
    if xa && xb {
        p.add_phase(2);
    }
    let zs = p.xz_mut().1;
    if xb {
        zs.flip(a);
    }
    if xa {
        zs.flip(b);
    }
}

fn conj_swap(p: &mut PauliOperator, a: usize, b: usize) {
    let (xs, zs) = p.xz_mut();
    let (xa, xb) = (xs.get(a), xs.get(b));
    xs.set(a, xb);
    xs.set(b, xa);
    let (za, zb) = (zs.get(a), zs.get(b));
    zs.set(a, zb);
    zs.set(b, za);
}

fn conj_cp(p: &mut PauliOperator, letter: Letter, c: usize, t: usize) {
    match letter {
        Letter::X => conj_cnot(p, c, t),
        Letter::Z => conj_cz(p, c, t),
        // C-Y = S_t CNOT S_t^dagger
        Letter::Y => {
            conj_single(p, GateKind::Sdg, t);
            conj_cnot(p, c, t);
            conj_single(p, GateKind::S, t);
        }
        Letter::I => {}
    }
}

/// Conjugates `p` by every gate in order (first gate applied first).
pub fn conjugate_all<'a>(p: &mut PauliOperator, gates: impl IntoIterator<Item = &'a Gate>) {
    for g in gates {
        g.conjugate(p);
    }
}
