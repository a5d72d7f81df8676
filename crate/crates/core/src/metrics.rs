//! State-complexity indicators: stabilizer weight, Pauli and operator
//! correlation strengths, correlation ranges and anti-shallowness bounds.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::densesim::{DenseError, StateVector, SupportedOperator};
use crate::gate::Gate;
use crate::pauli::{BitVector, Letter, PauliOperator, Sign};
use crate::tableau::{span_elements, StabilizerTableau, TableauError};

/// Largest register for group enumeration in [`min_weight_generators`].
pub const MAX_GROUP_QUBITS: usize = 20;
/// Largest register for [`weight_vector_oracle`].
pub const MAX_ORACLE_QUBITS: usize = 14;
/// Default edge threshold of the Pauli correlation graph.
pub const DEFAULT_EDGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{what} needs n <= {max}, got {n}")]
    TooLarge { what: &'static str, n: usize, max: usize },
    #[error("region needs at least two qubits")]
    RegionTooSmall,
    #[error("enumeration too large: {0}")]
    Infeasible(String),
    #[error("operator norm {0} exceeds 1")]
    NormViolation(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Tableau(#[from] TableauError),
}

/// Generator weights sorted non-increasingly; compared lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct WeightVector(pub Vec<usize>);

impl WeightVector {
    pub fn from_weights(mut w: Vec<usize>) -> Self {
        w.sort_unstable_by(|a, b| b.cmp(a));
        Self(w)
    }

    pub fn largest(&self) -> usize {
        self.0.first().copied().unwrap_or(0)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|w| w.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// Compact group element for enumeration: bit `q` of `x`/`z` is qubit `q`,
/// `combo` records which generators were multiplied.
#[derive(Copy, Clone)]
struct Packed {
    x: u32,
    z: u32,
    combo: u32,
}

impl Packed {
    fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    fn symplectic(&self) -> u64 {
        self.x as u64 | ((self.z as u64) << 32)
    }
}

fn pack(p: &PauliOperator) -> (u32, u32) {
    (p.x_bits().low_word() as u32, p.z_bits().low_word() as u32)
}

/// All non-identity elements of the group, unsigned.
fn enumerate_packed(t: &StabilizerTableau) -> Vec<Packed> {
    let gens: Vec<(u32, u32)> = t.generators().iter().map(pack).collect();
    let n = gens.len();
    let mut out = Vec::with_capacity((1usize << n) - 1);
    let (mut x, mut z, mut combo) = (0u32, 0u32, 0u32);
    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        x ^= gens[i].0;
        z ^= gens[i].1;
        combo ^= 1 << i;
        out.push(Packed { x, z, combo });
    }
    out
}

/// Order used for deterministic tie-breaking: weight, then x bits, then z
/// bits, each compared from qubit 0 upward with 0 < 1.
fn packed_order(n: usize, a: &Packed, b: &Packed) -> Ordering {
    let rev = |v: u32| v.reverse_bits() >> (32 - n as u32);
    a.weight()
        .cmp(&b.weight())
        .then_with(|| rev(a.x).cmp(&rev(b.x)))
        .then_with(|| rev(a.z).cmp(&rev(b.z)))
}

/// Span tracker over `u64` rows.
#[derive(Default)]
struct U64Basis {
    rows: Vec<u64>,
}

impl U64Basis {
    fn insert(&mut self, mut v: u64) -> bool {
        for &r in &self.rows {
            v = v.min(v ^ r);
        }
        if v == 0 {
            return false;
        }
        self.rows.push(v);
        self.rows.sort_unstable_by(|a, b| b.cmp(a));
        true
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

fn combo_vector(combo: u32, n: usize) -> BitVector {
    BitVector::from_u64(combo as u64, n)
}

/// Generators with the smallest weight vector, found by greedy selection of
/// independent group elements in increasing weight. Returned largest first.
pub fn min_weight_generators(
    t: &StabilizerTableau,
) -> Result<(Vec<PauliOperator>, WeightVector), MetricsError> {
    let n = t.num_qubits();
    if n > MAX_GROUP_QUBITS {
        return Err(MetricsError::TooLarge {
            what: "stabilizer group enumeration",
            n,
            max: MAX_GROUP_QUBITS,
        });
    }
    let mut elems = enumerate_packed(t);
    elems.sort_unstable_by(|a, b| packed_order(n, a, b));
    let mut basis = U64Basis::default();
    let mut chosen = Vec::with_capacity(n);
    for e in &elems {
        if basis.insert(e.symplectic()) {
            chosen.push(*e);
            if chosen.len() == n {
                break;
            }
        }
    }
    chosen.reverse();
    let weights = chosen.iter().map(|e| e.weight() as usize).collect();
    let gens = chosen
        .iter()
        .map(|e| t.group_element(&combo_vector(e.combo, n)))
        .collect();
    Ok((gens, WeightVector(weights)))
}

/// Largest entry of the minimal weight vector.
pub fn stabilizer_weight(t: &StabilizerTableau) -> Result<usize, MetricsError> {
    Ok(min_weight_generators(t)?.1.largest())
}

/// Every entry of the minimal weight vector from rank thresholds: entry `k`
/// (1-based) is the least `W` such that the elements of weight at most `W`
/// span a space of dimension at least `n - k + 1`.
pub fn weight_vector_oracle_all(t: &StabilizerTableau) -> Result<Vec<usize>, MetricsError> {
    let n = t.num_qubits();
    if n > MAX_ORACLE_QUBITS {
        return Err(MetricsError::TooLarge {
            what: "rank-threshold oracle",
            n,
            max: MAX_ORACLE_QUBITS,
        });
    }
    let elems = enumerate_packed(t);
    let mut rank_at = vec![0usize; n + 1];
    for w in 1..=n {
        let mut basis = U64Basis::default();
        for e in elems.iter().filter(|e| e.weight() as usize <= w) {
            basis.insert(e.symplectic());
            if basis.rank() == n {
                break;
            }
        }
        rank_at[w] = basis.rank();
    }
    Ok((1..=n)
        .map(|k| {
            (1..=n)
                .find(|&w| rank_at[w] > n - k)
                .expect("full group has rank n")
        })
        .collect())
}

/// Entry `k` (1-based) of [`weight_vector_oracle_all`].
pub fn weight_vector_oracle(t: &StabilizerTableau, k: usize) -> Result<usize, MetricsError> {
    let n = t.num_qubits();
    if k == 0 || k > n {
        return Err(MetricsError::InvalidParameter(format!("k must be in 1..={n}")));
    }
    Ok(weight_vector_oracle_all(t)?[k - 1])
}

/// Which estimate of the operator-norm-bounded maximum to use.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationMethod {
    /// Maximum over Pauli strings with exactly the given supports.
    PauliEnum,
    /// Alternating sign-operator ascent over Hermitian contractions.
    AlternatingSign,
}

impl std::str::FromStr for CorrelationMethod {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pauli" | "pauli-enum" => Ok(CorrelationMethod::PauliEnum),
            "alt" | "alternating" | "alternating-sign" => Ok(CorrelationMethod::AlternatingSign),
            _ => Err(MetricsError::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

/// The subset pair that attains the minimum, and the operators that attain
/// its maximum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairWitness {
    pub a1: Vec<usize>,
    pub a2: Vec<usize>,
    /// Pauli letters on `a1`/`a2` for Pauli enumeration; absent otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub o1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub o2: Option<String>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub region: Vec<usize>,
    pub w: usize,
    pub method: CorrelationMethod,
    /// Lower bound on the min-max correlation strength.
    pub value: f64,
    pub witness: Option<PairWitness>,
}

/// Options for the alternating ascent.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct AscentOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iterations: 200,
            tolerance: 1e-12,
            seed: 0x5eed,
        }
    }
}

/// `k`-element subsets of `items`, in lexicographic order.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= items.len() {
        rec(items, k, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// `tr(rho P)` for a Pauli on the local register of `rho`.
fn local_pauli_expectation(rho: &DMatrix<Complex64>, x: usize, z: usize, phase: u8) -> f64 {
    let coeff = Complex64::new(0.0, 1.0).powu(phase as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    for b in 0..rho.nrows() {
        let sign = if (z & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        acc += rho[(b, b ^ x)] * sign;
    }
    (acc * coeff).re
}

/// Hermitian Pauli strings with every site in `{X, Y, Z}` on `k` local
/// qubits starting at bit `offset`: `(x, z, phase, letters)`.
fn full_support_paulis(k: usize, offset: usize) -> Vec<(usize, usize, u8, String)> {
    let mut out = Vec::new();
    for code in 0..3usize.pow(k as u32) {
        let mut c = code;
        let (mut x, mut z, mut ys) = (0usize, 0usize, 0u8);
        let mut s = String::new();
        for j in 0..k {
            let l = [Letter::X, Letter::Y, Letter::Z][c % 3];
            c /= 3;
            let (bx, bz) = l.bits();
            if bx {
                x |= 1 << (j + offset);
            }
            if bz {
                z |= 1 << (j + offset);
            }
            if l == Letter::Y {
                ys += 1;
            }
            s.push(l.as_char());
        }
        // Y = i X Z on every Y site.
        out.push((x, z, ys % 4, s));
    }
    out
}

/// Best Pauli pair on one subset pair, from the joint reduced state.
fn pauli_pair_max(rho: &DMatrix<Complex64>, k1: usize, k2: usize) -> (f64, String, String) {
    let p1 = full_support_paulis(k1, 0);
    let p2 = full_support_paulis(k2, k1);
    let e1: Vec<f64> = p1.iter().map(|p| local_pauli_expectation(rho, p.0, p.1, p.2)).collect();
    let e2: Vec<f64> = p2.iter().map(|p| local_pauli_expectation(rho, p.0, p.1, p.2)).collect();
    let mut best = (-1.0, String::new(), String::new());
    for (i, a) in p1.iter().enumerate() {
        for (j, b) in p2.iter().enumerate() {
            let joint = local_pauli_expectation(rho, a.0 | b.0, a.1 | b.1, (a.2 + b.2) % 4);
            let v = (joint - e1[i] * e2[j]).abs();
            if v > best.0 + 1e-15 {
                best = (v, a.3.clone(), b.3.clone());
            }
        }
    }
    best
}

fn partial_trace_high(m: &DMatrix<Complex64>, d1: usize, d2: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|k| m[(i + d1 * k, j + d1 * k)]).sum())
}

fn partial_trace_low(m: &DMatrix<Complex64>, d1: usize, d2: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d2, d2, |k, l| (0..d1).map(|i| m[(i + d1 * k, i + d1 * l)]).sum())
}

/// `sign(M)` for Hermitian `M`, zero eigenvalues mapped to `+1`.
fn hermitian_sign(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let signs = eig
        .eigenvalues
        .map(|v| Complex64::new(if v >= 0.0 { 1.0 } else { -1.0 }, 0.0));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&signs) * v.adjoint()
}

fn random_hermitian_unitary<R: Rng>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    hermitian_sign(&(&g + g.adjoint()))
}

fn embed_local_pauli(d: usize, x: usize, z: usize, phase: u8) -> DMatrix<Complex64> {
    let coeff = Complex64::new(0.0, 1.0).powu(phase as u32);
    let mut m = DMatrix::zeros(d, d);
    for b in 0..d {
        let sign = if (z & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m[(b ^ x, b)] = coeff * sign;
    }
    m
}

/// Alternating ascent of `|tr(Delta O1 (x) O2)|` over Hermitian `O1`, `O2`
/// with unit operator norm. `start` seeds one run with a given `O2`.
fn alternating_pair_max(
    rho: &DMatrix<Complex64>,
    k1: usize,
    k2: usize,
    start: Option<DMatrix<Complex64>>,
    opts: &AscentOptions,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let (d1, d2) = (1usize << k1, 1usize << k2);
    let r1 = partial_trace_high(rho, d1, d2);
    let r2 = partial_trace_low(rho, d1, d2);
    let delta = rho - r2.kronecker(&r1);
    let id1 = DMatrix::<Complex64>::identity(d1, d1);
    let id2 = DMatrix::<Complex64>::identity(d2, d2);
    let mut best = 0.0f64;
    let starts = std::iter::once(start)
        .chain((0..opts.restarts).map(|_| None))
        .collect::<Vec<_>>();
    for s in starts {
        let mut o2 = match s {
            Some(m) => m,
            None => random_hermitian_unitary(d2, rng),
        };
        let mut last = -1.0f64;
        for _ in 0..opts.max_iterations {
            let m1 = partial_trace_high(&(o2.kronecker(&id1) * &delta), d1, d2);
            let o1 = hermitian_sign(&m1);
            let m2 = partial_trace_low(&(id2.kronecker(&o1) * &delta), d1, d2);
            o2 = hermitian_sign(&m2);
            let val = (o2.kronecker(&o1) * &delta).trace().re.abs();
            if (val - last).abs() < opts.tolerance {
                last = last.max(val);
                break;
            }
            last = last.max(val);
        }
        best = best.max(last);
    }
    best
}

/// Unordered pairs of disjoint non-empty subsets of `region` with at most
/// `w` elements each.
fn subset_pairs(region: &[usize], w: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let subsets: Vec<Vec<usize>> = (1..=w).flat_map(|k| combinations(region, k)).collect();
    let mut out = Vec::new();
    for (i, a) in subsets.iter().enumerate() {
        for b in &subsets[i + 1..] {
            if a.iter().all(|q| !b.contains(q)) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// Per-pair maximum with witness.
fn pair_value(
    s: &StateVector,
    a1: &[usize],
    a2: &[usize],
    method: CorrelationMethod,
    opts: &AscentOptions,
    salt: u64,
) -> Result<PairWitness, MetricsError> {
    let mut support = a1.to_vec();
    support.extend_from_slice(a2);
    let rho = s.reduced_density_matrix(&support)?;
    let (k1, k2) = (a1.len(), a2.len());
    let (pv, o1, o2) = pauli_pair_max(&rho, k1, k2);
    let witness = |value, o1, o2| PairWitness {
        a1: a1.to_vec(),
        a2: a2.to_vec(),
        o1,
        o2,
        value,
    };
    match method {
        CorrelationMethod::PauliEnum => Ok(witness(pv, Some(o1), Some(o2))),
        CorrelationMethod::AlternatingSign => {
            // Seed one run with the best Pauli on A2 so the ascent never ends
            // below the Pauli value.
            let p2: PauliOperator = o2.parse().expect("letters");
            let start = embed_local_pauli(
                1 << k2,
                p2.x_bits().low_word() as usize,
                p2.z_bits().low_word() as usize,
                p2.phase().exponent(),
            );
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ salt);
            let av = alternating_pair_max(&rho, k1, k2, Some(start), opts, &mut rng);
            Ok(witness(av.max(pv), None, None))
        }
    }
}

/// Upper limit on `pairs * 2^(n + 2w)` work units.
const WORK_LIMIT: f64 = 4e10;

/// `Cor^A_w`: minimum over disjoint subset pairs of size at most `w` inside
/// `region` of the per-pair maximum correlation, estimated by `method`.
pub fn correlation_strength_w(
    s: &StateVector,
    region: &[usize],
    w: usize,
    method: CorrelationMethod,
    opts: &AscentOptions,
) -> Result<CorrelationReport, MetricsError> {
    let n = s.num_qubits();
    if let Some(&q) = region.iter().find(|&&q| q >= n) {
        return Err(DenseError::SupportOutOfRange { qubit: q, n }.into());
    }
    if region.len() < 2 {
        return Err(MetricsError::RegionTooSmall);
    }
    if w == 0 {
        return Err(MetricsError::InvalidParameter("w must be at least 1".into()));
    }
    if method == CorrelationMethod::PauliEnum && w > 3 {
        return Err(MetricsError::Infeasible(format!(
            "Pauli enumeration supports w <= 3, got {w}"
        )));
    }
    let w = w.min(region.len() - 1);
    let pairs = subset_pairs(region, w);
    let work = pairs.len() as f64 * 2f64.powi((n + 2 * w) as i32);
    if work > WORK_LIMIT {
        return Err(MetricsError::Infeasible(format!(
            "{} subset pairs on {n} qubits",
            pairs.len()
        )));
    }
    let results: Vec<Result<PairWitness, MetricsError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a1, a2))| pair_value(s, a1, a2, method, opts, i as u64))
        .collect();
    let mut best: Option<PairWitness> = None;
    for r in results {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.value < b.value - 1e-15) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one pair");
    Ok(CorrelationReport {
        region: region.to_vec(),
        w,
        method,
        value: best.value,
        witness: Some(best),
    })
}

/// Maximum over single-site Pauli pairs of `|Cor(P_i, P_j)|`.
pub fn pauli_pair_strength(s: &StateVector, i: usize, j: usize) -> Result<f64, MetricsError> {
    if i == j {
        return Err(DenseError::OverlappingSupports(i).into());
    }
    let rho = s.reduced_density_matrix(&[i, j])?;
    Ok(pauli_pair_max(&rho, 1, 1).0)
}

/// `Cor^A_P`: minimum over pairs in `region` of the best single-site Pauli
/// correlation.
pub fn pauli_correlation_strength(s: &StateVector, region: &[usize]) -> Result<f64, MetricsError> {
    if region.len() < 2 {
        return Err(MetricsError::RegionTooSmall);
    }
    let mut best = f64::INFINITY;
    for (x, &i) in region.iter().enumerate() {
        for &j in &region[x + 1..] {
            best = best.min(pauli_pair_strength(s, i, j)?);
        }
    }
    Ok(best)
}

/// Adjacency bitsets of the Pauli correlation graph.
pub fn pauli_correlation_graph(s: &StateVector, tol: f64) -> Result<Vec<u64>, MetricsError> {
    let n = s.num_qubits();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let vals: Vec<Result<f64, MetricsError>> = pairs
        .par_iter()
        .map(|&(i, j)| pauli_pair_strength(s, i, j))
        .collect();
    let mut adj = vec![0u64; n];
    for (&(i, j), v) in pairs.iter().zip(vals) {
        if v? > tol {
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
    }
    Ok(adj)
}

/// Largest clique (vertex list, increasing) by Bron–Kerbosch with pivoting.
pub fn max_clique(adj: &[u64]) -> Vec<usize> {
    fn bk(r: u64, mut p: u64, mut x: u64, adj: &[u64], best: &mut u64) {
        if p == 0 && x == 0 {
            if r.count_ones() > best.count_ones() {
                *best = r;
            }
            return;
        }
        if r.count_ones() + p.count_ones() <= best.count_ones() {
            return;
        }
        let px = p | x;
        let pivot = (0..64)
            .filter(|&u| px >> u & 1 == 1)
            .max_by_key(|&u| (p & adj[u]).count_ones())
            .expect("p or x non-empty");
        let mut cand = p & !adj[pivot];
        while cand != 0 {
            let v = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            bk(r | 1 << v, p & adj[v], x & adj[v], adj, best);
            p &= !(1 << v);
            x |= 1 << v;
        }
    }
    assert!(adj.len() <= 64, "max_clique handles at most 64 vertices");
    let all = if adj.len() == 64 { u64::MAX } else { (1u64 << adj.len()) - 1 };
    let mut best = 0u64;
    bk(0, all, 0, adj, &mut best);
    (0..adj.len()).filter(|&v| best >> v & 1 == 1).collect()
}

/// `CR_P`: size of the largest region in which every pair is Pauli
/// correlated above `tol`. At least 1.
pub fn pauli_correlation_range(s: &StateVector, tol: f64) -> Result<usize, MetricsError> {
    let n = s.num_qubits();
    if n > 16 {
        return Err(MetricsError::TooLarge {
            what: "Pauli correlation range",
            n,
            max: 16,
        });
    }
    let adj = pauli_correlation_graph(s, tol)?;
    Ok(max_clique(&adj).len().max(1))
}

/// Largest register for [`correlation_range_w`].
pub const MAX_RANGE_QUBITS: usize = 12;

/// `CR^delta_w`: size of the largest region whose strength exceeds `delta`.
/// Regions of one qubit have no pairs and always qualify.
pub fn correlation_range_w(
    s: &StateVector,
    w: usize,
    delta: f64,
    method: CorrelationMethod,
    opts: &AscentOptions,
) -> Result<usize, MetricsError> {
    let n = s.num_qubits();
    if n > MAX_RANGE_QUBITS {
        return Err(MetricsError::TooLarge {
            what: "correlation range",
            n,
            max: MAX_RANGE_QUBITS,
        });
    }
    if w == 0 {
        return Err(MetricsError::InvalidParameter("w must be at least 1".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let w = w.min(n.saturating_sub(1)).max(1);
    let pairs = subset_pairs(&all, w);
    let vals: Vec<Result<PairWitness, MetricsError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a1, a2))| pair_value(s, a1, a2, method, opts, i as u64))
        .collect();
    let mut bad: Vec<u32> = Vec::new();
    for ((a1, a2), v) in pairs.iter().zip(vals) {
        if v?.value <= delta {
            bad.push(a1.iter().chain(a2).fold(0u32, |m, &q| m | 1 << q));
        }
    }
    let mut best = 1;
    for mask in 1u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size > best && bad.iter().all(|&b| b & mask != b) {
            best = size;
        }
    }
    Ok(best)
}

/// Global correlation from both estimators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlobalCorrelation {
    pub pauli: CorrelationReport,
    pub alternating: CorrelationReport,
}

impl GlobalCorrelation {
    /// The larger of the two lower bounds.
    pub fn value(&self) -> f64 {
        self.pauli.value.max(self.alternating.value)
    }
}

/// `Cor(psi) = Cor^[n]_1(psi)`.
pub fn global_correlation(s: &StateVector) -> Result<GlobalCorrelation, MetricsError> {
    let all: Vec<usize> = (0..s.num_qubits()).collect();
    let opts = AscentOptions::default();
    Ok(GlobalCorrelation {
        pauli: correlation_strength_w(s, &all, 1, CorrelationMethod::PauliEnum, &opts)?,
        alternating: correlation_strength_w(s, &all, 1, CorrelationMethod::AlternatingSign, &opts)?,
    })
}

/// `-log2(1 - cor^2 / 36)`.
pub fn anti_shallowness_from_correlation(cor: f64) -> f64 {
    -(1.0 - cor * cor / 36.0).log2()
}

/// Lower bound on anti-shallowness from the global correlation.
pub fn anti_shallowness_lower(s: &StateVector) -> Result<f64, MetricsError> {
    Ok(anti_shallowness_from_correlation(global_correlation(s)?.value()))
}

/// Settings for the best-product-state search.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ProductSearch {
    pub restarts: usize,
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for ProductSearch {
    fn default() -> Self {
        Self {
            restarts: 8,
            sweeps: 100,
            seed: 0xfeed,
        }
    }
}

/// Result of an anti-shallowness upper bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperBound {
    /// `-log2` of the best fidelity found.
    pub value: f64,
    pub best_fidelity: f64,
    /// Index into the candidate list, or `None` when the product search won.
    pub best_candidate: Option<usize>,
}

/// Fidelity of the best product state found by alternating single-site
/// updates: with every other site fixed, the optimal site state is the
/// normalized contraction of the target with the rest.
pub fn best_product_fidelity(s: &StateVector, search: &ProductSearch) -> (f64, Vec<[Complex64; 2]>) {
    let n = s.num_qubits();
    let amps = s.amplitudes();
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let zero = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [Complex64::new(h, 0.0), Complex64::new(h, 0.0)];
    let mut starts: Vec<Vec<[Complex64; 2]>> = vec![vec![zero; n], vec![plus; n]];
    for _ in 0..search.restarts {
        starts.push(
            (0..n)
                .map(|_| {
                    let v = [
                        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5),
                        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5),
                    ];
                    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                    [v[0] / norm, v[1] / norm]
                })
                .collect(),
        );
    }
    let overlap = |sites: &[[Complex64; 2]]| -> Complex64 {
        amps.iter()
            .enumerate()
            .map(|(b, a)| {
                let mut prod = *a;
                for (q, site) in sites.iter().enumerate() {
                    prod *= site[(b >> q) & 1].conj();
                }
                prod
            })
            .sum()
    };
    let mut best = (0.0, starts[0].clone());
    for mut sites in starts {
        let mut last = overlap(&sites).norm_sqr();
        for _ in 0..search.sweeps {
            for i in 0..n {
                let mut v = [Complex64::new(0.0, 0.0); 2];
                for (b, a) in amps.iter().enumerate() {
                    let mut prod = *a;
                    for (q, site) in sites.iter().enumerate() {
                        if q != i {
                            prod *= site[(b >> q) & 1].conj();
                        }
                    }
                    v[(b >> i) & 1] += prod;
                }
                let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
                if norm > 1e-300 {
                    sites[i] = [v[0] / norm, v[1] / norm];
                }
            }
            let f = overlap(&sites).norm_sqr();
            if f - last < 1e-15 {
                last = last.max(f);
                break;
            }
            last = f;
        }
        if last > best.0 {
            best = (last, sites);
        }
    }
    (best.0.min(1.0), best.1)
}

/// Minimum over candidates (and optionally the product search) of
/// `-log2 fidelity`.
pub fn anti_shallowness_upper(
    s: &StateVector,
    candidates: &[StateVector],
    search: Option<&ProductSearch>,
) -> Result<UpperBound, MetricsError> {
    if candidates.is_empty() && search.is_none() {
        return Err(MetricsError::InvalidParameter(
            "need at least one candidate or the product search".into(),
        ));
    }
    let mut best = UpperBound {
        value: f64::INFINITY,
        best_fidelity: 0.0,
        best_candidate: None,
    };
    for (i, c) in candidates.iter().enumerate() {
        let f = s.fidelity(c)?;
        if f > best.best_fidelity {
            best = UpperBound {
                value: -f.log2(),
                best_fidelity: f,
                best_candidate: Some(i),
            };
        }
    }
    if let Some(search) = search {
        let (f, _) = best_product_fidelity(s, search);
        if f > best.best_fidelity {
            best = UpperBound {
                value: -f.log2(),
                best_fidelity: f,
                best_candidate: None,
            };
        }
    }
    best.value = best.value.max(0.0);
    Ok(best)
}

/// Anti-shallowness lower bound of a state at infidelity `eps` from one with
/// `log2 F = log_f_psi`:
/// `-log2[(1-eps) 2^{log_f_psi} + eps + 2 sqrt(eps (1-eps))]`, floored at 0.
pub fn anti_shallowness_continuity(log_f_psi: f64, eps: f64) -> Result<f64, MetricsError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(MetricsError::InvalidParameter(format!("eps = {eps} outside [0, 1]")));
    }
    if log_f_psi > 0.0 {
        return Err(MetricsError::InvalidParameter(format!(
            "log2 F = {log_f_psi} must be <= 0"
        )));
    }
    let arg = (1.0 - eps) * log_f_psi.exp2() + eps + 2.0 * (eps * (1.0 - eps)).sqrt();
    Ok((-arg.log2()).max(0.0))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityCheck {
    pub delta_cor: f64,
    pub eps: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `|Cor(O1,O2,s1) - Cor(O1,O2,s2)| <= 6 sqrt(eps)` with `eps = 1 - F`.
pub fn correlation_continuity_check(
    s1: &StateVector,
    s2: &StateVector,
    o1: &SupportedOperator,
    o2: &SupportedOperator,
) -> Result<ContinuityCheck, MetricsError> {
    for o in [o1, o2] {
        let norm = o.operator_norm();
        if norm > 1.0 + 1e-9 {
            return Err(MetricsError::NormViolation(norm));
        }
    }
    let c1 = crate::densesim::correlation(s1, o1, o2)?;
    let c2 = crate::densesim::correlation(s2, o1, o2)?;
    let eps = (1.0 - s1.fidelity(s2)?).max(0.0);
    let bound = 6.0 * eps.sqrt();
    let delta_cor = (c1 - c2).abs();
    Ok(ContinuityCheck {
        delta_cor,
        eps,
        bound,
        holds: delta_cor <= bound + 1e-12,
    })
}

/// Whether two states agree on every group element supported on each
/// region of at most `k` qubits.
pub fn local_indistinguishable(
    t1: &StabilizerTableau,
    t2: &StabilizerTableau,
    k: usize,
) -> Result<bool, MetricsError> {
    let n = t1.num_qubits();
    if t2.num_qubits() != n {
        return Err(MetricsError::InvalidParameter("states differ in size".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    // Elements on a subset of A also live on A, so size exactly min(k, n)
    // covers every smaller region.
    for region in combinations(&all, k.min(n)) {
        if t1.restricted_group_elements(&region)? != t2.restricted_group_elements(&region)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The state whose minimal generators are those of `t` with generator
/// `index` negated.
pub fn flip_generator_sign(t: &StabilizerTableau, index: usize) -> Result<StabilizerTableau, MetricsError> {
    let (gens, _) = min_weight_generators(t)?;
    if index >= gens.len() {
        return Err(MetricsError::InvalidParameter(format!(
            "generator index {index} out of range"
        )));
    }
    let mut flipped = gens;
    flipped[index] = flipped[index].negated();
    Ok(StabilizerTableau::from_generators(flipped)?)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Lemma2Check {
    pub n: usize,
    pub stabilizer_weight: usize,
    pub correlation_range: usize,
    pub rhs: f64,
    pub holds: bool,
}

/// `wt_s >= CR_P / sqrt(n)`.
pub fn lemma2_check(t: &StabilizerTableau) -> Result<Lemma2Check, MetricsError> {
    let n = t.num_qubits();
    if n > 12 {
        return Err(MetricsError::TooLarge {
            what: "weight/range comparison",
            n,
            max: 12,
        });
    }
    let wt = stabilizer_weight(t)?;
    let s = StateVector::from_tableau(t)?;
    let cr = pauli_correlation_range(&s, DEFAULT_EDGE_TOLERANCE)?;
    let rhs = cr as f64 / (n as f64).sqrt();
    Ok(Lemma2Check {
        n,
        stabilizer_weight: wt,
        correlation_range: cr,
        rhs,
        holds: wt as f64 >= rhs - 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Check {
    pub before: usize,
    pub after: usize,
    pub k: usize,
    pub conjugated: String,
    pub holds: bool,
}

/// `wt(U P U^dagger) <= K wt(P)` for one layer of gates on disjoint qubits
/// with fan-in at most `K`.
pub fn lemma1_check(p: &PauliOperator, layer: &[Gate], k: usize) -> Result<Lemma1Check, MetricsError> {
    let mut used = vec![false; p.num_qubits()];
    for g in layer {
        g.check_range(p.num_qubits())
            .map_err(|e| MetricsError::InvalidParameter(e.to_string()))?;
        if g.fan_in() > k {
            return Err(MetricsError::InvalidParameter(format!(
                "gate {g} exceeds fan-in {k}"
            )));
        }
        for &q in &g.qubits {
            if std::mem::replace(&mut used[q], true) {
                return Err(MetricsError::InvalidParameter(format!(
                    "qubit {q} used twice in the layer"
                )));
            }
        }
    }
    let mut out = p.clone();
    for g in layer {
        g.conjugate(&mut out);
    }
    let (before, after) = (p.weight(), out.weight());
    Ok(Lemma1Check {
        before,
        after,
        k,
        conjugated: out.to_string(),
        holds: after <= k * before,
    })
}

/// All signed group elements of `t` (for tests and small reports).
pub fn group_elements(t: &StabilizerTableau) -> Result<Vec<PauliOperator>, MetricsError> {
    let n = t.num_qubits();
    if n > MAX_GROUP_QUBITS {
        return Err(MetricsError::TooLarge {
            what: "group enumeration",
            n,
            max: MAX_GROUP_QUBITS,
        });
    }
    Ok(span_elements(t.generators(), n))
}

/// Expected outcome sign of `p` on `t`, if determined.
pub fn stabilizer_sign(t: &StabilizerTableau, p: &PauliOperator) -> Option<Sign> {
    t.is_stabilized_by(p).ok().flatten()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::ghz_tableau;

    #[test]
    fn weight_vectors() {
        let (_, v) = min_weight_generators(&StabilizerTableau::zero_state(4)).unwrap();
        assert_eq!(v.0, vec![1, 1, 1, 1]);
        for n in 3..8 {
            let (gens, v) = min_weight_generators(&ghz_tableau(n)).unwrap();
            let mut expected = vec![n];
            expected.extend(std::iter::repeat_n(2, n - 1));
            assert_eq!(v.0, expected);
            let t = StabilizerTableau::from_generators(gens).unwrap();
            assert!(t.states_equal(&ghz_tableau(n)));
        }
        let bell = StabilizerTableau::from_strings(&["XX", "ZZ"]).unwrap();
        assert_eq!(min_weight_generators(&bell).unwrap().1 .0, vec![2, 2]);
        assert!(WeightVector(vec![3, 2]) < WeightVector(vec![3, 3]));
        assert!(WeightVector(vec![2, 2, 2]) < WeightVector(vec![3, 1, 1]));
    }

    #[test]
    fn oracle_agrees_with_greedy() {
        assert_eq!(weight_vector_oracle(&ghz_tableau(4), 1).unwrap(), 4);
        for seed in 0..30 {
            let n = 2 + (seed as usize % 4);
            let t = StabilizerTableau::random_stabilizer_state(n, seed);
            let (_, v) = min_weight_generators(&t).unwrap();
            assert_eq!(weight_vector_oracle_all(&t).unwrap(), v.0);
        }
    }

    #[test]
    fn clique_small_graphs() {
        // triangle plus pendant
        let adj = vec![0b0110, 0b0101, 0b1011, 0b0100];
        assert_eq!(max_clique(&adj), vec![0, 1, 2]);
        assert_eq!(max_clique(&[0, 0, 0]).len(), 1);
        assert_eq!(max_clique(&[]).len(), 0);
    }

    #[test]
    fn pauli_strength_examples() {
        for n in 3..7 {
            let all: Vec<usize> = (0..n).collect();
            let g = StateVector::ghz(n).unwrap();
            assert!((pauli_correlation_strength(&g, &all).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(pauli_correlation_range(&g, 1e-9).unwrap(), n);
            let w = StateVector::w(n).unwrap();
            let expected = 2.0 / n as f64;
            assert!((pauli_correlation_strength(&w, &all).unwrap() - expected).abs() < 1e-12);
            assert_eq!(pauli_correlation_range(&w, 1e-9).unwrap(), n);
            let z = StateVector::zero(n).unwrap();
            assert_eq!(pauli_correlation_strength(&z, &all).unwrap(), 0.0);
            assert_eq!(pauli_correlation_range(&z, 1e-9).unwrap(), 1);
        }
        assert!(matches!(
            pauli_correlation_strength(&StateVector::ghz(3).unwrap(), &[0]),
            Err(MetricsError::RegionTooSmall)
        ));
    }

    #[test]
    fn alternating_not_below_pauli() {
        let opts = AscentOptions::default();
        for seed in 0..5 {
            let t = StabilizerTableau::random_stabilizer_state(4, seed);
            let s = StateVector::from_tableau(&t).unwrap();
            let all: Vec<usize> = (0..4).collect();
            let p = correlation_strength_w(&s, &all, 2, CorrelationMethod::PauliEnum, &opts).unwrap();
            let a = correlation_strength_w(&s, &all, 2, CorrelationMethod::AlternatingSign, &opts)
                .unwrap();
            assert!(p.value <= a.value + 1e-9);
        }
        let g = StateVector::ghz(4).unwrap();
        let all: Vec<usize> = (0..4).collect();
        let a = correlation_strength_w(&g, &all, 1, CorrelationMethod::AlternatingSign, &opts).unwrap();
        assert!((a.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn global_correlation_values() {
        for n in 3..6 {
            let g = global_correlation(&StateVector::ghz(n).unwrap()).unwrap();
            assert!((g.pauli.value - 1.0).abs() < 1e-12);
            let p = global_correlation(&StateVector::plus(n).unwrap()).unwrap();
            assert!(p.value() < 1e-12);
        }
    }

    #[test]
    fn range_examples() {
        let opts = AscentOptions::default();
        let g = StateVector::ghz(5).unwrap();
        assert_eq!(correlation_range_w(&g, 1, 0.5, CorrelationMethod::PauliEnum, &opts).unwrap(), 5);
        assert_eq!(correlation_range_w(&g, 1, 2.0, CorrelationMethod::PauliEnum, &opts).unwrap(), 1);
        let w = StateVector::w(6).unwrap();
        let mut last = usize::MAX;
        for delta in [0.0, 0.05, 0.1, 0.2, 0.3, 0.5] {
            let r = correlation_range_w(&w, 1, delta, CorrelationMethod::PauliEnum, &opts).unwrap();
            assert!(r <= last);
            last = r;
        }
    }

    #[test]
    fn anti_shallowness_examples() {
        let ghz = StateVector::ghz(6).unwrap();
        let lower = anti_shallowness_lower(&ghz).unwrap();
        assert!((lower - (36.0f64 / 35.0).log2()).abs() < 1e-9);
        let up = anti_shallowness_upper(&ghz, &[StateVector::zero(6).unwrap()], None).unwrap();
        assert!((up.value - 1.0).abs() < 1e-12);
        let own = anti_shallowness_upper(&ghz, std::slice::from_ref(&ghz), None).unwrap();
        assert!(own.value.abs() < 1e-12);
        let prod = anti_shallowness_upper(&ghz, &[], Some(&ProductSearch::default())).unwrap();
        assert!((prod.value - 1.0).abs() < 1e-9);
        assert_eq!(anti_shallowness_lower(&StateVector::zero(4).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn continuity_formula() {
        assert!((anti_shallowness_continuity(-3.0, 0.0).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(anti_shallowness_continuity(-3.0, 1.0).unwrap(), 0.0);
        let mut last = f64::INFINITY;
        for i in 0..=1000 {
            let v = anti_shallowness_continuity(-2.5, i as f64 / 1000.0).unwrap();
            assert!(v <= last + 1e-15);
            last = v;
        }
        assert!(anti_shallowness_continuity(-1.0, 1.5).is_err());
    }

    #[test]
    fn indistinguishability() {
        let g4 = ghz_tableau(4);
        let (gens, _) = min_weight_generators(&g4).unwrap();
        assert_eq!(gens[0].weight(), 4);
        let minus = flip_generator_sign(&g4, 0).unwrap();
        assert!(local_indistinguishable(&g4, &minus, 3).unwrap());
        assert!(!local_indistinguishable(&g4, &minus, 4).unwrap());
        let zero = StabilizerTableau::zero_state(1);
        let one = StabilizerTableau::from_strings(&["-Z"]).unwrap();
        assert!(!local_indistinguishable(&zero, &one, 1).unwrap());
    }

    #[test]
    fn lemma_checks() {
        let p: PauliOperator = "XI".parse().unwrap();
        let r = lemma1_check(&p, &[Gate::cnot(0, 1)], 2).unwrap();
        assert_eq!((r.before, r.after, r.holds), (1, 2, true));
        let r = lemma1_check(&p, &[], 2).unwrap();
        assert_eq!(r.after, 1);
        assert!(lemma1_check(&p, &[Gate::cnot(0, 1), Gate::h(1)], 2).is_err());
        let g = lemma2_check(&ghz_tableau(5)).unwrap();
        assert!(g.holds);
        assert_eq!((g.stabilizer_weight, g.correlation_range), (5, 5));
        assert!(lemma2_check(&StabilizerTableau::zero_state(4)).unwrap().holds);
    }
}
