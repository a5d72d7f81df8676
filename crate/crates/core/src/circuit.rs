//! Layered adaptive circuits: Clifford gates, Z measurements into classical
//! bits, and gates conditioned on parities of earlier bits.

use std::collections::BTreeSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::gate::{Gate, GateError, GateKind};
use crate::pauli::{Letter, PauliOperator, Sign};
use crate::tableau::{StabilizerTableau, TableauError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("target has {target} qubits but the circuit only has {m}")]
    TargetTooLarge { target: usize, m: usize },
    #[error("forced outcome list has {got} bits, circuit writes {needed}")]
    ForcedLength { got: usize, needed: usize },
    #[error("parameter error: {0}")]
    Parameter(String),
}

/// Fires when the XOR of `bits` equals `xor`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub bits: Vec<usize>,
    pub xor: u8,
}

impl Condition {
    /// Fires when the parity of `bits` is odd.
    pub fn odd(bits: Vec<usize>) -> Self {
        Self { bits, xor: 1 }
    }

    pub fn fires(&self, record: &[u8]) -> bool {
        let parity = self.bits.iter().fold(0u8, |acc, &b| acc ^ (record[b] & 1));
        parity == self.xor & 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operation {
    Gate {
        gate: Gate,
        cond: Option<Condition>,
        /// Single-qubit gate that is absorbed into a neighbouring layer for
        /// depth accounting.
        merged: bool,
    },
    Measure {
        qubit: usize,
        cbit: usize,
    },
}

impl Operation {
    pub fn gate(gate: Gate) -> Self {
        Operation::Gate {
            gate,
            cond: None,
            merged: false,
        }
    }

    pub fn conditioned(gate: Gate, cond: Condition) -> Self {
        Operation::Gate {
            gate,
            cond: Some(cond),
            merged: false,
        }
    }

    pub fn merged(gate: Gate) -> Self {
        Operation::Gate {
            gate,
            cond: None,
            merged: true,
        }
    }

    pub fn measure(qubit: usize, cbit: usize) -> Self {
        Operation::Measure { qubit, cbit }
    }

    pub fn qubits(&self) -> &[usize] {
        match self {
            Operation::Gate { gate, .. } => &gate.qubits,
            Operation::Measure { qubit, .. } => std::slice::from_ref(qubit),
        }
    }

    pub fn is_merged(&self) -> bool {
        matches!(self, Operation::Gate { merged: true, .. })
    }

    pub fn fan_in(&self) -> usize {
        self.qubits().len()
    }
}

pub type Layer = Vec<Operation>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptiveCircuit {
    pub m: usize,
    pub cbits: usize,
    pub layers: Vec<Layer>,
}

/// Qubit connectivity used by validation and lightcone bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Geometry {
    AllToAll,
    /// `sides[d]` sites along dimension `d`; qubit `q` sits at the mixed-radix
    /// coordinates of `q` with dimension 0 varying fastest.
    Grid { sides: Vec<usize> },
}

impl Geometry {
    /// Line (`r = 1`) or near-square grid of dimension `r` holding `m` qubits.
    pub fn grid_for(r: usize, m: usize) -> Geometry {
        let r = r.max(1);
        let mut side = 1usize;
        while side.checked_pow(r as u32).is_some_and(|v| v < m) {
            side += 1;
        }
        Geometry::Grid {
            sides: vec![side; r],
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            Geometry::AllToAll => None,
            Geometry::Grid { sides } => Some(sides.len()),
        }
    }

    fn coords(sides: &[usize], mut q: usize) -> Vec<usize> {
        sides
            .iter()
            .map(|&s| {
                let c = q % s;
                q /= s;
                c
            })
            .collect()
    }

    /// Whether a gate on `qubits` respects the geometry at fan-in `k`: on a
    /// grid every coordinate spans at most `k - 1` sites.
    pub fn allows(&self, qubits: &[usize], k: usize) -> bool {
        match self {
            Geometry::AllToAll => true,
            Geometry::Grid { sides } => {
                let capacity: usize = sides.iter().product();
                if qubits.iter().any(|&q| q >= capacity) {
                    return false;
                }
                let cs: Vec<Vec<usize>> =
                    qubits.iter().map(|&q| Self::coords(sides, q)).collect();
                (0..sides.len()).all(|d| {
                    let lo = cs.iter().map(|c| c[d]).min().unwrap_or(0);
                    let hi = cs.iter().map(|c| c[d]).max().unwrap_or(0);
                    hi - lo < k.max(1)
                })
            }
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::AllToAll => f.write_str("all-to-all"),
            Geometry::Grid { sides } => {
                let s: Vec<String> = sides.iter().map(|x| x.to_string()).collect();
                write!(f, "grid({})", s.join("x"))
            }
        }
    }
}

/// Lightcone size bound: `K^D` all-to-all, `(2(K-1)D+1)^r` on an
/// `r`-dimensional grid. Saturates at `u128::MAX`.
pub fn g_value(k: usize, d: usize, geometry: &Geometry) -> u128 {
    match geometry.dimension() {
        None => (k as u128).checked_pow(d as u32).unwrap_or(u128::MAX),
        Some(r) => {
            let base = (2 * (k.saturating_sub(1)) as u128)
                .saturating_mul(d as u128)
                .saturating_add(1);
            base.checked_pow(r as u32).unwrap_or(u128::MAX)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub layer: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, layer: usize, message: String) {
        self.violations.push(Violation { layer, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for v in &self.violations {
            writeln!(f, "layer {}: {}", v.layer, v.message)?;
        }
        Ok(())
    }
}

/// How measurement outcomes are chosen during simulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutcomePolicy {
    Random(u64),
    /// `bits[c]` is the outcome to force for classical bit `c`. With
    /// `strict`, forcing a deterministic outcome to the wrong value is an
    /// error; otherwise the deterministic value wins.
    Forced { bits: Vec<u8>, strict: bool },
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    /// State of the unmeasured qubits, renumbered in increasing order.
    pub state: StabilizerTableau,
    pub survivors: Vec<usize>,
    pub record: Vec<u8>,
    /// Whether each classical bit's outcome was deterministic.
    pub deterministic: Vec<bool>,
}

/// Options for lightcone computation.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct LightconeOptions {
    /// Also follow measurement-to-condition feed-forward edges.
    pub classical: bool,
}

impl AdaptiveCircuit {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            cbits: 0,
            layers: Vec::new(),
        }
    }

    pub fn push_layer(&mut self, layer: Layer) {
        self.layers.push(layer);
    }

    /// Number of layers that are not made solely of merged gates.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| counts(l)).count()
    }

    /// `m - n_target`.
    pub fn ancilla_count(&self, n_target: usize) -> Result<usize, CircuitError> {
        self.m.checked_sub(n_target).ok_or(CircuitError::TargetTooLarge {
            target: n_target,
            m: self.m,
        })
    }

    pub fn measured_qubits(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .operations()
            .filter_map(|(_, op)| match op {
                Operation::Measure { qubit, .. } => Some(*qubit),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn surviving_qubits(&self) -> Vec<usize> {
        let measured: BTreeSet<usize> = self.measured_qubits().into_iter().collect();
        (0..self.m).filter(|q| !measured.contains(q)).collect()
    }

    pub fn operations(&self) -> impl Iterator<Item = (usize, &Operation)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().map(move |op| (i, op)))
    }

    /// Largest fan-in over all operations.
    pub fn max_fan_in(&self) -> usize {
        self.operations().map(|(_, op)| op.fan_in()).max().unwrap_or(0)
    }

    pub fn is_adaptive(&self) -> bool {
        self.operations().any(|(_, op)| {
            matches!(op, Operation::Measure { .. } | Operation::Gate { cond: Some(_), .. })
        })
    }

    /// Structural checks. `k` bounds every operation's fan-in.
    pub fn validate(&self, k: usize, geometry: &Geometry) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut written: Vec<Option<usize>> = vec![None; self.cbits];
        let mut dead: Vec<Option<usize>> = vec![None; self.m];
        for (li, layer) in self.layers.iter().enumerate() {
            if layer.is_empty() {
                report.push(li, "empty layer".into());
            }
            let mut used = BTreeSet::new();
            for op in layer {
                let qs = op.qubits();
                for &q in qs {
                    if q >= self.m {
                        report.push(li, format!("qubit {q} out of range (m = {})", self.m));
                        continue;
                    }
                    if !used.insert(q) {
                        report.push(li, format!("qubit {q} used twice in one layer"));
                    }
                    if let Some(at) = dead[q] {
                        report.push(li, format!("qubit {q} reused after measurement in layer {at}"));
                    }
                }
                if op.fan_in() > k {
                    report.push(li, format!("fan-in {} exceeds K = {k}", op.fan_in()));
                }
                if !geometry.allows(qs, k) {
                    report.push(li, format!("operation on {qs:?} violates {geometry}"));
                }
                match op {
                    Operation::Gate { gate, cond, merged } => {
                        if let Err(e) = Gate::new(gate.kind, gate.qubits.clone()) {
                            report.push(li, e.to_string());
                        }
                        if *merged && (cond.is_some() || !gate.kind.is_single_qubit()) {
                            report.push(li, "only unconditioned single-qubit gates can be merged".into());
                        }
                        if let Some(c) = cond {
                            for &b in &c.bits {
                                match written.get(b) {
                                    None => report.push(li, format!("condition bit {b} does not exist")),
                                    Some(Some(w)) if *w < li => {}
                                    _ => report.push(li, format!("condition bit {b} is not written in an earlier layer")),
                                }
                            }
                            if c.xor > 1 {
                                report.push(li, "condition offset must be 0 or 1".into());
                            }
                        }
                    }
                    Operation::Measure { qubit, cbit } => {
                        match written.get(*cbit) {
                            None => report.push(li, format!("classical bit {cbit} does not exist")),
                            Some(Some(_)) => report.push(li, format!("classical bit {cbit} written twice")),
                            Some(None) => written[*cbit] = Some(li),
                        }
                        if *qubit < self.m && dead[*qubit].is_none() {
                            dead[*qubit] = Some(li);
                        }
                    }
                }
            }
        }
        // Merged gates need a counted layer to be absorbed into.
        if self.depth() == 0 && self.operations().any(|(_, op)| op.is_merged()) {
            report.push(0, "merged gates without any counted layer".into());
        }
        report
    }

    /// Simulates from `|0^m>`.
    pub fn simulate(&self, policy: &OutcomePolicy) -> Result<SimulationResult, CircuitError> {
        self.simulate_from(StabilizerTableau::zero_state(self.m), policy)
    }

    /// Simulates from an arbitrary `m`-qubit stabilizer state.
    pub fn simulate_from(
        &self,
        initial: StabilizerTableau,
        policy: &OutcomePolicy,
    ) -> Result<SimulationResult, CircuitError> {
        let (state, record, deterministic) = self.run(initial, policy)?;
        let survivors = self.surviving_qubits();
        let reduced = state.reduce_to(&survivors)?;
        Ok(SimulationResult {
            state: reduced,
            survivors,
            record,
            deterministic,
        })
    }

    /// Runs every layer and returns the full `m`-qubit state (measured qubits
    /// left in their post-measurement Z eigenstates).
    pub fn run(
        &self,
        mut state: StabilizerTableau,
        policy: &OutcomePolicy,
    ) -> Result<(StabilizerTableau, Vec<u8>, Vec<bool>), CircuitError> {
        if state.num_qubits() != self.m {
            return Err(CircuitError::Invalid(format!(
                "initial state has {} qubits, circuit has {}",
                state.num_qubits(),
                self.m
            )));
        }
        if let OutcomePolicy::Forced { bits, .. } = policy {
            if bits.len() < self.cbits {
                return Err(CircuitError::ForcedLength {
                    got: bits.len(),
                    needed: self.cbits,
                });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(match policy {
            OutcomePolicy::Random(seed) => *seed,
            OutcomePolicy::Forced { .. } => 0,
        });
        let mut record = vec![0u8; self.cbits];
        let mut deterministic = vec![false; self.cbits];
        for layer in &self.layers {
            for op in layer {
                match op {
                    Operation::Gate { gate, cond, .. } => {
                        if cond.as_ref().is_none_or(|c| c.fires(&record)) {
                            state.apply(gate)?;
                        }
                    }
                    Operation::Measure { qubit, cbit } => {
                        let z = PauliOperator::single(self.m, *qubit, Letter::Z);
                        let m = match policy {
                            OutcomePolicy::Random(_) => state.measure_pauli(&z, None, &mut rng)?,
                            OutcomePolicy::Forced { bits, strict } => {
                                let want = Sign::from_bit(bits[*cbit]);
                                match state.measure_pauli(&z, Some(want), &mut rng) {
                                    Err(TableauError::Contradiction { actual, .. }) if !strict => {
                                        state.measure_pauli(&z, Some(actual), &mut rng)?
                                    }
                                    other => other?,
                                }
                            }
                        };
                        record[*cbit] = m.outcome.bit();
                        deterministic[*cbit] = m.deterministic;
                    }
                }
            }
        }
        Ok((state, record, deterministic))
    }

    /// Qubits reachable from `start` moving forward from layer `from_layer`.
    pub fn forward_lightcone(
        &self,
        start: &[usize],
        from_layer: usize,
        options: LightconeOptions,
    ) -> BTreeSet<usize> {
        let mut cone: BTreeSet<usize> = start.iter().copied().collect();
        let mut tainted = vec![false; self.cbits];
        for layer in self.layers.iter().skip(from_layer) {
            let mut added = Vec::new();
            for op in layer {
                let qs = op.qubits();
                let mut touches = qs.iter().any(|q| cone.contains(q));
                if options.classical {
                    if let Operation::Gate { cond: Some(c), .. } = op {
                        touches |= c.bits.iter().any(|&b| tainted[b]);
                    }
                }
                if touches {
                    added.extend_from_slice(qs);
                    if let Operation::Measure { cbit, .. } = op {
                        tainted[*cbit] = true;
                    }
                }
            }
            cone.extend(added);
        }
        cone
    }

    /// Qubits that can influence `targets` at the end of the circuit.
    pub fn backward_lightcone(&self, targets: &[usize], options: LightconeOptions) -> BTreeSet<usize> {
        let mut cone: BTreeSet<usize> = targets.iter().copied().collect();
        let mut needed_bits = vec![false; self.cbits];
        for layer in self.layers.iter().rev() {
            let mut added = Vec::new();
            for op in layer {
                let qs = op.qubits();
                let mut touches = qs.iter().any(|q| cone.contains(q));
                if options.classical {
                    if let Operation::Measure { cbit, .. } = op {
                        touches |= needed_bits[*cbit];
                    }
                }
                if touches {
                    added.extend_from_slice(qs);
                    if options.classical {
                        if let Operation::Gate { cond: Some(c), .. } = op {
                            for &b in &c.bits {
                                needed_bits[b] = true;
                            }
                        }
                    }
                }
            }
            cone.extend(added);
        }
        cone
    }

    /// Appends `other`'s layers, shifting its classical bits past ours.
    pub fn append(&mut self, other: &AdaptiveCircuit) -> Result<(), CircuitError> {
        if other.m != self.m {
            return Err(CircuitError::Invalid(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.m, self.m
            )));
        }
        let offset = self.cbits;
        for layer in &other.layers {
            let shifted = layer
                .iter()
                .map(|op| match op {
                    Operation::Measure { qubit, cbit } => Operation::Measure {
                        qubit: *qubit,
                        cbit: cbit + offset,
                    },
                    Operation::Gate { gate, cond, merged } => Operation::Gate {
                        gate: gate.clone(),
                        cond: cond.as_ref().map(|c| Condition {
                            bits: c.bits.iter().map(|b| b + offset).collect(),
                            xor: c.xor,
                        }),
                        merged: *merged,
                    },
                })
                .collect();
            self.layers.push(shifted);
        }
        self.cbits += other.cbits;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        serde_json::from_str(text).map_err(|e| CircuitError::Invalid(e.to_string()))
    }
}

fn counts(layer: &Layer) -> bool {
    !layer.is_empty() && !layer.iter().all(|op| op.is_merged())
}

#[derive(Serialize, Deserialize)]
struct CondJson {
    bits: Vec<usize>,
    xor: u8,
}

#[derive(Serialize, Deserialize)]
struct OpJson {
    op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    qubits: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pauli: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cond: Option<CondJson>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    merged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    qubit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cbit: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    m: usize,
    cbits: usize,
    layers: Vec<Vec<OpJson>>,
}

impl From<&Operation> for OpJson {
    fn from(op: &Operation) -> Self {
        match op {
            Operation::Measure { qubit, cbit } => OpJson {
                op: "MZ".into(),
                qubits: None,
                pauli: None,
                cond: None,
                merged: false,
                qubit: Some(*qubit),
                cbit: Some(*cbit),
            },
            Operation::Gate { gate, cond, merged } => OpJson {
                op: gate.kind.name().into(),
                qubits: Some(gate.qubits.clone()),
                pauli: match gate.kind {
                    GateKind::Cp(l) => Some(l.as_char().to_string()),
                    _ => None,
                },
                cond: cond.as_ref().map(|c| CondJson {
                    bits: c.bits.clone(),
                    xor: c.xor,
                }),
                merged: *merged,
                qubit: None,
                cbit: None,
            },
        }
    }
}

impl TryFrom<OpJson> for Operation {
    type Error = String;

    fn try_from(j: OpJson) -> Result<Self, Self::Error> {
        if j.op.eq_ignore_ascii_case("MZ") {
            let qubit = j.qubit.or_else(|| j.qubits.as_ref().and_then(|q| q.first().copied()));
            return match (qubit, j.cbit) {
                (Some(qubit), Some(cbit)) => Ok(Operation::Measure { qubit, cbit }),
                _ => Err("MZ needs \"qubit\" and \"cbit\"".into()),
            };
        }
        let kind = if j.op.eq_ignore_ascii_case("CP") {
            let letter = j
                .pauli
                .as_deref()
                .and_then(|p| p.chars().next())
                .and_then(Letter::from_char)
                .ok_or("CP needs \"pauli\": X, Y or Z")?;
            GateKind::Cp(letter)
        } else {
            j.op.parse::<GateKind>().map_err(|e| e.to_string())?
        };
        let qubits = j.qubits.ok_or_else(|| format!("{} needs \"qubits\"", j.op))?;
        let gate = Gate::new(kind, qubits).map_err(|e| e.to_string())?;
        Ok(Operation::Gate {
            gate,
            cond: j.cond.map(|c| Condition {
                bits: c.bits,
                xor: c.xor,
            }),
            merged: j.merged,
        })
    }
}

impl Serialize for AdaptiveCircuit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        CircuitJson {
            m: self.m,
            cbits: self.cbits,
            layers: self
                .layers
                .iter()
                .map(|l| l.iter().map(OpJson::from).collect())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AdaptiveCircuit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = CircuitJson::deserialize(deserializer)?;
        let layers = raw
            .layers
            .into_iter()
            .map(|l| {
                l.into_iter()
                    .map(Operation::try_from)
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok(AdaptiveCircuit {
            m: raw.m,
            cbits: raw.cbits,
            layers,
        })
    }
}

/// Output of [`ghz_adaptive`].
#[derive(Clone, Debug)]
pub struct GhzAdaptive {
    pub circuit: AdaptiveCircuit,
    pub n: usize,
    /// Block size.
    pub a: usize,
    pub k: usize,
    /// First qubit of every block.
    pub backbone: Vec<usize>,
    pub ancillas: usize,
    /// Depth of the fan-out tree, `ceil(log_K a)`.
    pub fanout_depth: usize,
}

/// Smallest `L` with `k^L >= a`.
pub fn ceil_log(k: usize, a: usize) -> usize {
    let mut l = 0;
    let mut reach = 1usize;
    while reach < a {
        reach = reach.saturating_mul(k);
        l += 1;
    }
    l
}

/// Adaptive GHZ preparation: the first qubit of each size-`a` block joins a
/// measured parity chain (one ancilla between neighbouring blocks), then a
/// fan-out tree of `K`-input CNOTs copies it over its block, and each block
/// is flipped according to the prefix parity of the chain outcomes.
///
/// Data qubits are `0..n`; ancilla `j` (between blocks `j` and `j+1`) is
/// qubit `n + j` and writes classical bit `j`. With `a >= n` the output is a
/// plain fan-out tree without measurements.
pub fn ghz_adaptive(n: usize, a: usize, k: usize) -> Result<GhzAdaptive, CircuitError> {
    if n < 1 || a < 1 || a > n {
        return Err(CircuitError::Parameter(format!(
            "need 1 <= a <= n, got n={n} a={a}"
        )));
    }
    if k < 2 {
        return Err(CircuitError::Parameter(format!("fan-in K must be >= 2, got {k}")));
    }
    let blocks = n.div_ceil(a);
    let anc = blocks - 1;
    let backbone: Vec<usize> = (0..blocks).map(|j| j * a).collect();
    let block = |j: usize| -> Vec<usize> { (j * a..((j + 1) * a).min(n)).collect() };
    let mut c = AdaptiveCircuit::new(n + anc);
    c.cbits = anc;

    let fanout = fanout_layers(&(0..blocks).map(block).collect::<Vec<_>>(), k);
    let fanout_depth = fanout.len();

    c.push_layer(backbone.iter().map(|&b| Operation::merged(Gate::h(b))).collect());
    if anc > 0 {
        c.push_layer((0..anc).map(|j| Operation::gate(Gate::cnot(backbone[j], n + j))).collect());
        c.push_layer(
            (0..anc)
                .map(|j| Operation::gate(Gate::cnot(backbone[j + 1], n + j)))
                .collect(),
        );
        let mut measure: Layer = (0..anc).map(|j| Operation::measure(n + j, j)).collect();
        let mut rest = fanout.into_iter();
        if let Some(first) = rest.next() {
            measure.extend(first);
        }
        c.push_layer(measure);
        for layer in rest {
            c.push_layer(layer);
        }
        let mut correction = Layer::new();
        for j in 1..blocks {
            for q in block(j) {
                correction.push(Operation::conditioned(Gate::x(q), Condition::odd((0..j).collect())));
            }
        }
        c.push_layer(correction);
    } else {
        for layer in fanout {
            c.push_layer(layer);
        }
    }
    Ok(GhzAdaptive {
        circuit: c,
        n,
        a,
        k,
        backbone,
        ancillas: anc,
        fanout_depth,
    })
}

/// Fan-out trees, one per block, run in parallel. Every holder of the value
/// copies it to up to `k - 1` new qubits per layer.
fn fanout_layers(blocks: &[Vec<usize>], k: usize) -> Vec<Layer> {
    let mut layers: Vec<Layer> = Vec::new();
    for qs in blocks {
        let mut holders = 1usize;
        let mut depth = 0;
        while holders < qs.len() {
            let mut next = holders;
            if layers.len() <= depth {
                layers.push(Layer::new());
            }
            for h in 0..holders {
                let take = (k - 1).min(qs.len() - next);
                if take == 0 {
                    break;
                }
                let targets = &qs[next..next + take];
                layers[depth].push(Operation::gate(
                    Gate::fanout(qs[h], targets).expect("distinct qubits"),
                ));
                next += take;
            }
            holders = next;
            depth += 1;
        }
    }
    layers
}

/// Generators of the `n`-qubit GHZ state: `X^n`, `Z_i Z_{i+1}`.
pub fn ghz_tableau(n: usize) -> StabilizerTableau {
    let mut gens = vec![PauliOperator::x_on(n, &(0..n).collect::<Vec<_>>())];
    for i in 0..n.saturating_sub(1) {
        gens.push(PauliOperator::z_on(n, &[i, i + 1]));
    }
    StabilizerTableau::from_generators(gens).expect("GHZ generators are valid")
}

/// Nearest-neighbour GHZ on a line: Hadamard on a middle qubit, one CNOT to
/// its right neighbour, then CNOT waves outward in both directions.
pub fn ghz_line(n: usize) -> AdaptiveCircuit {
    let mut c = AdaptiveCircuit::new(n);
    if n == 0 {
        return c;
    }
    let mid = (n - 1) / 2;
    c.push_layer(vec![Operation::gate(Gate::h(mid))]);
    if n == 1 {
        return c;
    }
    c.push_layer(vec![Operation::gate(Gate::cnot(mid, mid + 1))]);
    for t in 1..=mid.max(n - 2 - mid) {
        let mut layer = Layer::new();
        if t <= mid {
            layer.push(Operation::gate(Gate::cnot(mid + 1 - t, mid - t)));
        }
        if mid + t + 1 < n {
            layer.push(Operation::gate(Gate::cnot(mid + t, mid + t + 1)));
        }
        c.push_layer(layer);
    }
    c
}

/// Measurement-based GHZ on a line of `2n - 1` sites: data on even sites,
/// a parity ancilla on each odd site between two data qubits. Depth 4.
pub fn ghz_line_adaptive(n: usize) -> Result<AdaptiveCircuit, CircuitError> {
    if n < 2 {
        return Err(CircuitError::Parameter(format!("need n >= 2, got {n}")));
    }
    let m = 2 * n - 1;
    let mut c = AdaptiveCircuit::new(m);
    c.cbits = n - 1;
    c.push_layer((0..n).map(|j| Operation::merged(Gate::h(2 * j))).collect());
    c.push_layer((0..n - 1).map(|j| Operation::gate(Gate::cnot(2 * j, 2 * j + 1))).collect());
    c.push_layer((0..n - 1).map(|j| Operation::gate(Gate::cnot(2 * j + 2, 2 * j + 1))).collect());
    c.push_layer((0..n - 1).map(|j| Operation::measure(2 * j + 1, j)).collect());
    c.push_layer(
        (1..n)
            .map(|j| Operation::conditioned(Gate::x(2 * j), Condition::odd((0..j).collect())))
            .collect(),
    );
    Ok(c)
}
