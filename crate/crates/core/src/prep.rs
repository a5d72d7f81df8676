//! Shallow adaptive preparation of stabilizer code states: measure every
//! check in parallel through ancillas, then apply a Pauli correction that is
//! a fixed linear function of the syndrome.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{check_adaptive_weight, check_clifford_adaptive, BoundCheck, ResourceProfile};
use crate::circuit::{AdaptiveCircuit, CircuitError, Condition, Geometry, Layer, Operation, OutcomePolicy};
use crate::gate::Gate;
use crate::metrics::stabilizer_weight;
use crate::pauli::{symplectic_rank, BitMatrix, BitVector, Letter, PauliError, PauliOperator, Sign, XorBasis};
use crate::tableau::{StabilizerTableau, TableauError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrepError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("code has no checks")]
    Empty,
    #[error("check {index} acts on {got} qubits, expected {expected}")]
    SizeMismatch { index: usize, expected: usize, got: usize },
    #[error("check {0} is not Hermitian")]
    NotHermitian(usize),
    #[error("check {0} is the identity")]
    IdentityCheck(usize),
    #[error("checks {i} ({a}) and {j} ({b}) anticommute")]
    Anticommuting { i: usize, j: usize, a: String, b: String },
    #[error("checks are dependent: rank {rank} < {count}")]
    Dependent { rank: usize, count: usize },
    #[error("unknown code {0:?}")]
    UnknownCode(String),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("construction infeasible: {0}")]
    Infeasible(String),
    #[error("linear system has no solution")]
    Inconsistent,
    #[error("internal error: {0}")]
    Internal(String),
}

/// Independent commuting checks on `n` qubits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StabilizerCode {
    pub name: String,
    pub n: usize,
    pub checks: Vec<PauliOperator>,
    pub max_weight: usize,
    /// Largest number of checks acting on one qubit.
    pub max_participation: usize,
    /// `max(max_weight, max_participation)`.
    pub sparsity: usize,
    pub k: usize,
}

impl StabilizerCode {
    pub fn new(name: &str, checks: Vec<PauliOperator>) -> Result<Self, PrepError> {
        let n = checks.first().ok_or(PrepError::Empty)?.num_qubits();
        for (i, c) in checks.iter().enumerate() {
            if c.num_qubits() != n {
                return Err(PrepError::SizeMismatch {
                    index: i,
                    expected: n,
                    got: c.num_qubits(),
                });
            }
            if !c.is_hermitian() {
                return Err(PrepError::NotHermitian(i));
            }
            if c.is_identity() {
                return Err(PrepError::IdentityCheck(i));
            }
        }
        for i in 0..checks.len() {
            for j in i + 1..checks.len() {
                if !checks[i].commutes(&checks[j])? {
                    return Err(PrepError::Anticommuting {
                        i,
                        j,
                        a: checks[i].to_string(),
                        b: checks[j].to_string(),
                    });
                }
            }
        }
        let rank = symplectic_rank(&checks);
        if rank < checks.len() {
            return Err(PrepError::Dependent {
                rank,
                count: checks.len(),
            });
        }
        let max_weight = checks.iter().map(|c| c.weight()).max().unwrap_or(0);
        let max_participation = (0..n)
            .map(|q| checks.iter().filter(|c| c.letter(q) != Letter::I).count())
            .max()
            .unwrap_or(0);
        Ok(Self {
            name: name.to_string(),
            n,
            k: n - checks.len(),
            max_weight,
            max_participation,
            sparsity: max_weight.max(max_participation),
            checks,
        })
    }

    pub fn from_strings<S: AsRef<str>>(name: &str, checks: &[S]) -> Result<Self, PrepError> {
        let ops = checks
            .iter()
            .map(|s| PauliOperator::parse(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(name, ops)
    }

    /// Parses a code file: either JSON `{name, n, checks}` or one Pauli string
    /// per line with `#` comments.
    pub fn parse_file(text: &str, default_name: &str) -> Result<Self, PrepError> {
        #[derive(Deserialize)]
        struct CodeJson {
            name: Option<String>,
            n: Option<usize>,
            checks: Vec<String>,
        }
        if text.trim_start().starts_with('{') {
            let raw: CodeJson = serde_json::from_str(text).map_err(|e| PrepError::Parse(e.to_string()))?;
            let code = Self::from_strings(raw.name.as_deref().unwrap_or(default_name), &raw.checks)?;
            if let Some(n) = raw.n {
                if n != code.n {
                    return Err(PrepError::Parse(format!("declared n = {n} but checks act on {}", code.n)));
                }
            }
            return Ok(code);
        }
        let mut checks = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let p = PauliOperator::parse(line)
                .map_err(|e| PrepError::Parse(format!("line {}: {e}", lineno + 1)))?;
            checks.push(p);
        }
        Self::new(default_name, checks)
    }

    pub fn tanner_graph(&self) -> TannerGraph {
        TannerGraph::new(&self.checks)
    }
}

/// `repetition(n)`/`repetitionN`, `steane`, `toric(l)`/`toricL`, `bell`.
pub fn builtin_code(name: &str) -> Result<StabilizerCode, PrepError> {
    let lower = name.trim().to_ascii_lowercase();
    let param = |prefix: &str| -> Option<usize> {
        let rest = lower.strip_prefix(prefix)?;
        let rest = rest.trim_start_matches('(').trim_end_matches(')');
        rest.parse().ok()
    };
    if let Some(n) = param("repetition").or_else(|| param("rep")) {
        if n < 2 {
            return Err(PrepError::UnknownCode(format!("{name}: repetition needs n >= 2")));
        }
        let checks = (0..n - 1).map(|i| PauliOperator::z_on(n, &[i, i + 1])).collect();
        return StabilizerCode::new(&format!("repetition{n}"), checks);
    }
    if let Some(l) = param("toric") {
        return toric_code(l);
    }
    match lower.as_str() {
        "steane" => {
            let rows = ["1010101", "0110011", "0001111"];
            let support = |r: &str| -> Vec<usize> {
                r.chars().enumerate().filter(|(_, c)| *c == '1').map(|(i, _)| i).collect()
            };
            let mut checks: Vec<PauliOperator> = rows.iter().map(|r| PauliOperator::x_on(7, &support(r))).collect();
            checks.extend(rows.iter().map(|r| PauliOperator::z_on(7, &support(r))));
            StabilizerCode::new("steane", checks)
        }
        "bell" => StabilizerCode::from_strings("bell", &["XX", "ZZ"]),
        _ => Err(PrepError::UnknownCode(name.to_string())),
    }
}

/// Toric code on an `l x l` torus: qubits on edges (horizontal edges first),
/// `l^2 - 1` star and `l^2 - 1` plaquette checks.
fn toric_code(l: usize) -> Result<StabilizerCode, PrepError> {
    if l < 2 {
        return Err(PrepError::UnknownCode(format!("toric({l}): need l >= 2")));
    }
    let n = 2 * l * l;
    let h = |x: usize, y: usize| (y % l) * l + (x % l);
    let v = |x: usize, y: usize| l * l + (y % l) * l + (x % l);
    let mut checks = Vec::new();
    for y in 0..l {
        for x in 0..l {
            if x + y * l + 1 == l * l {
                continue;
            }
            checks.push(PauliOperator::x_on(n, &[h(x, y), h(x + l - 1, y), v(x, y), v(x, y + l - 1)]));
        }
    }
    for y in 0..l {
        for x in 0..l {
            if x + y * l + 1 == l * l {
                continue;
            }
            checks.push(PauliOperator::z_on(n, &[h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)]));
        }
    }
    StabilizerCode::new(&format!("toric{l}"), checks)
}

/// Bipartite graph between qubits and the checks acting on them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TannerGraph {
    pub n: usize,
    pub t: usize,
    /// `(qubit, check, letter)` in `(qubit, check)` order.
    pub edges: Vec<(usize, usize, Letter)>,
}

impl TannerGraph {
    pub fn new(checks: &[PauliOperator]) -> Self {
        let n = checks.first().map_or(0, |c| c.num_qubits());
        let mut edges = Vec::new();
        for q in 0..n {
            for (j, c) in checks.iter().enumerate() {
                let l = c.letter(q);
                if l != Letter::I {
                    edges.push((q, j, l));
                }
            }
        }
        Self {
            n,
            t: checks.len(),
            edges,
        }
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n + self.t];
        for &(q, c, _) in &self.edges {
            deg[q] += 1;
            deg[self.n + c] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

/// One controlled-Pauli gate of the measurement schedule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledEdge {
    pub qubit: usize,
    pub check: usize,
    pub letter: Letter,
    /// Layer index, from 0.
    pub layer: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementSchedule {
    pub layers: usize,
    pub edges: Vec<ScheduledEdge>,
}

impl MeasurementSchedule {
    pub fn layer_of(&self, qubit: usize, check: usize) -> Option<usize> {
        self.edges
            .iter()
            .find(|e| e.qubit == qubit && e.check == check)
            .map(|e| e.layer)
    }

    /// No two edges at one qubit or one check share a layer.
    pub fn is_proper(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.edges.iter().all(|e| {
            seen.insert((0u8, e.qubit, e.layer)) && seen.insert((1u8, e.check, e.layer)) && e.layer < self.layers
        })
    }

    /// Schedule with explicit layers, e.g. `layers[j][q]` for check `j` on
    /// qubit `q` (ignored where the check is trivial).
    pub fn from_layers(checks: &[PauliOperator], layers: &[Vec<usize>]) -> Result<Self, PrepError> {
        if layers.len() != checks.len() {
            return Err(PrepError::Schedule(format!(
                "{} layer rows for {} checks",
                layers.len(),
                checks.len()
            )));
        }
        let g = TannerGraph::new(checks);
        let mut edges = Vec::new();
        for &(q, c, letter) in &g.edges {
            let layer = *layers[c]
                .get(q)
                .ok_or_else(|| PrepError::Schedule(format!("no layer for check {c} on qubit {q}")))?;
            edges.push(ScheduledEdge {
                qubit: q,
                check: c,
                letter,
                layer,
            });
        }
        let count = edges.iter().map(|e| e.layer + 1).max().unwrap_or(0);
        let s = Self { layers: count, edges };
        if !s.is_proper() {
            return Err(PrepError::Schedule("two gates share a qubit or ancilla in one layer".into()));
        }
        Ok(s)
    }
}

/// Proper edge coloring of the Tanner graph with exactly `max_degree`
/// colors, by alternating-path recoloring.
pub fn edge_color_bipartite(g: &TannerGraph) -> MeasurementSchedule {
    let delta = g.max_degree();
    let nodes = g.n + g.t;
    let ends = |e: usize| (g.edges[e].0, g.n + g.edges[e].1);
    let mut color: Vec<Option<usize>> = vec![None; g.edges.len()];
    let mut at: Vec<Vec<Option<usize>>> = vec![vec![None; delta]; nodes];
    let free = |at: &Vec<Vec<Option<usize>>>, x: usize| at[x].iter().position(|s| s.is_none());
    for e in 0..g.edges.len() {
        let (u, v) = ends(e);
        let alpha = free(&at, u).expect("degree bound leaves a free color");
        if at[v][alpha].is_some() {
            let beta = free(&at, v).expect("degree bound leaves a free color");
            // Walk the alpha/beta path from v; it cannot reach u.
            let mut path = Vec::new();
            let (mut cur, mut c) = (v, alpha);
            while let Some(f) = at[cur][c] {
                path.push(f);
                let (a, b) = ends(f);
                cur = if a == cur { b } else { a };
                c = if c == alpha { beta } else { alpha };
            }
            for &f in &path {
                let (a, b) = ends(f);
                let old = color[f].expect("path edges are colored");
                at[a][old] = None;
                at[b][old] = None;
            }
            for &f in &path {
                let (a, b) = ends(f);
                let new = if color[f] == Some(alpha) { beta } else { alpha };
                color[f] = Some(new);
                at[a][new] = Some(f);
                at[b][new] = Some(f);
            }
        }
        color[e] = Some(alpha);
        at[u][alpha] = Some(e);
        at[v][alpha] = Some(e);
    }
    MeasurementSchedule {
        layers: delta,
        edges: g
            .edges
            .iter()
            .zip(color)
            .map(|(&(qubit, check, letter), c)| ScheduledEdge {
                qubit,
                check,
                letter,
                layer: c.expect("all edges colored"),
            })
            .collect(),
    }
}

/// Whether interleaving the gates of checks `i` and `j` leaves an extra
/// `CZ` between their ancillas: the number of shared sites with
/// anticommuting letters where `i` acts first is odd.
pub fn tangling_parity(schedule: &MeasurementSchedule, i: usize, j: usize) -> Result<bool, PrepError> {
    let mut by_qubit: BTreeMap<usize, [Option<(Letter, usize)>; 2]> = BTreeMap::new();
    for e in &schedule.edges {
        let slot = if e.check == i {
            0
        } else if e.check == j {
            1
        } else {
            continue;
        };
        by_qubit.entry(e.qubit).or_default()[slot] = Some((e.letter, e.layer));
    }
    let mut count = 0usize;
    for (q, pair) in by_qubit {
        if let [Some((li, ci)), Some((lj, cj))] = pair {
            if !li.anticommutes(lj) {
                continue;
            }
            if ci == cj {
                return Err(PrepError::Internal(format!(
                    "checks {i} and {j} share layer {ci} on qubit {q}"
                )));
            }
            if ci < cj {
                count += 1;
            }
        }
    }
    Ok(count % 2 == 1)
}

/// Ancilla pairs that need a compensating `CZ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TanglingGraph {
    pub t: usize,
    pub edges: Vec<(usize, usize)>,
}

impl TanglingGraph {
    pub fn new(schedule: &MeasurementSchedule, t: usize) -> Result<Self, PrepError> {
        let mut edges = Vec::new();
        for i in 0..t {
            for j in i + 1..t {
                if tangling_parity(schedule, i, j)? {
                    edges.push((i, j));
                }
            }
        }
        Ok(Self { t, edges })
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.t];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

/// Misra–Gries edge coloring of a simple graph on `vertices` vertices with
/// at most `max_degree + 1` colors. Returns one color per edge.
pub fn edge_color_general(vertices: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); vertices];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let delta = adj.iter().map(|a| a.len()).max().unwrap_or(0);
    let palette = delta + 1;
    let mut col: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let is_free = |col: &BTreeMap<(usize, usize), usize>, adj: &Vec<Vec<usize>>, x: usize, c: usize| {
        adj[x].iter().all(|&y| col.get(&key(x, y)) != Some(&c))
    };
    for &(u, v) in edges {
        // Maximal fan of u starting at v.
        let mut fan = vec![v];
        loop {
            let last = *fan.last().expect("non-empty fan");
            let next = adj[u].iter().copied().find(|&w| {
                !fan.contains(&w)
                    && col
                        .get(&key(u, w))
                        .is_some_and(|&c| is_free(&col, &adj, last, c))
            });
            match next {
                Some(w) => fan.push(w),
                None => break,
            }
        }
        let c = (0..palette).find(|&c| is_free(&col, &adj, u, c)).expect("u has a free color");
        let last = *fan.last().expect("non-empty fan");
        let d = (0..palette).find(|&d| is_free(&col, &adj, last, d)).expect("fan end has a free color");
        // Invert the c/d path starting at u.
        if c != d {
            let mut path = Vec::new();
            let (mut x, mut want) = (u, d);
            let mut prev = usize::MAX;
            loop {
                let Some(&y) = adj[x]
                    .iter()
                    .find(|&&y| y != prev && col.get(&key(x, y)) == Some(&want))
                else {
                    break;
                };
                path.push(key(x, y));
                prev = x;
                x = y;
                want = if want == d { c } else { d };
            }
            for e in path {
                let old = col[&e];
                col.insert(e, if old == c { d } else { c });
            }
        }
        // First prefix of the fan that is still a fan and ends where d is free.
        let mut w = 0;
        for i in 0..fan.len() {
            if i > 0 {
                let ok = col
                    .get(&key(u, fan[i]))
                    .is_some_and(|&ci| is_free(&col, &adj, fan[i - 1], ci));
                if !ok {
                    break;
                }
            }
            if is_free(&col, &adj, fan[i], d) {
                w = i;
                break;
            }
        }
        for i in 0..w {
            let next = col[&key(u, fan[i + 1])];
            col.insert(key(u, fan[i]), next);
        }
        col.remove(&key(u, fan[w]));
        col.insert(key(u, fan[w]), d);
    }
    edges.iter().map(|&(a, b)| col[&key(a, b)]).collect()
}

/// Whether `colors` is a proper edge coloring of `edges`.
pub fn is_proper_edge_coloring(edges: &[(usize, usize)], colors: &[usize]) -> bool {
    let mut seen = std::collections::HashSet::new();
    edges.len() == colors.len()
        && edges
            .iter()
            .zip(colors)
            .all(|(&(a, b), &c)| a != b && seen.insert((a, c)) && seen.insert((b, c)))
}

fn num_colors(colors: &[usize]) -> usize {
    colors.iter().map(|c| c + 1).max().unwrap_or(0)
}

/// Bipartite coloring followed by the layer order that needs the fewest
/// `CZ` layers (then the fewest tangled pairs). Orders are searched
/// exhaustively for at most 7 layers.
pub fn schedule_checks(checks: &[PauliOperator]) -> Result<MeasurementSchedule, PrepError> {
    let base = edge_color_bipartite(&TannerGraph::new(checks));
    if base.layers > 7 {
        return Ok(base);
    }
    let score = |s: &MeasurementSchedule| -> Result<(usize, usize), PrepError> {
        let tg = TanglingGraph::new(s, checks.len())?;
        Ok((num_colors(&edge_color_general(tg.t, &tg.edges)), tg.edges.len()))
    };
    let mut perm: Vec<usize> = (0..base.layers).collect();
    let mut best = (score(&base)?, base.clone());
    while next_permutation(&mut perm) {
        if best.0 == (0, 0) {
            break;
        }
        let mut s = base.clone();
        for e in &mut s.edges {
            e.layer = perm[e.layer];
        }
        let sc = score(&s)?;
        if sc < best.0 {
            best = (sc, s);
        }
    }
    Ok(best.1)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Parallel measurement of a set of checks through one ancilla each.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementFragment {
    #[serde(skip)]
    pub circuit: AdaptiveCircuit,
    pub schedule: MeasurementSchedule,
    pub tangled: Vec<(usize, usize)>,
    pub cz_layers: usize,
    /// Ancilla qubit of each check.
    pub ancillas: Vec<usize>,
    /// Classical bit of each check, local to the fragment.
    pub cbits: Vec<usize>,
    /// 1 where the check carries a minus sign: its eigenvalue is the
    /// measured bit flipped.
    pub signs: Vec<u8>,
    pub depth: usize,
}

/// Circuit on `m` qubits measuring every check (acting on qubits
/// `0..n`) with ancilla `ancilla_offset + i` into classical bit `i`.
/// Ancilla Hadamards are tagged merged, so the depth is
/// `layers + cz_layers + 1`.
pub fn synthesize_measurement_circuit(
    checks: &[PauliOperator],
    m: usize,
    ancilla_offset: usize,
    schedule: Option<MeasurementSchedule>,
) -> Result<MeasurementFragment, PrepError> {
    if checks.is_empty() {
        return Err(PrepError::Empty);
    }
    let n = checks[0].num_qubits();
    let t = checks.len();
    if ancilla_offset < n || ancilla_offset + t > m {
        return Err(PrepError::Partition(format!(
            "ancillas {ancilla_offset}..{} must lie in {n}..{m}",
            ancilla_offset + t
        )));
    }
    for (i, c) in checks.iter().enumerate() {
        if c.num_qubits() != n {
            return Err(PrepError::SizeMismatch {
                index: i,
                expected: n,
                got: c.num_qubits(),
            });
        }
        if !c.is_hermitian() {
            return Err(PrepError::NotHermitian(i));
        }
        for j in 0..i {
            if !c.commutes(&checks[j])? {
                return Err(PrepError::Anticommuting {
                    i: j,
                    j: i,
                    a: checks[j].to_string(),
                    b: c.to_string(),
                });
            }
        }
    }
    let schedule = match schedule {
        Some(s) => {
            if s.edges.len() != TannerGraph::new(checks).edges.len() || !s.is_proper() {
                return Err(PrepError::Schedule("schedule does not match the checks".into()));
            }
            s
        }
        None => schedule_checks(checks)?,
    };
    let tg = TanglingGraph::new(&schedule, t)?;
    let cz_colors = edge_color_general(t, &tg.edges);
    let cz_layers = num_colors(&cz_colors);
    let anc = |i: usize| ancilla_offset + i;

    let mut c = AdaptiveCircuit::new(m);
    c.cbits = t;
    c.push_layer((0..t).map(|i| Operation::merged(Gate::h(anc(i)))).collect());
    for layer in 0..schedule.layers {
        let ops: Layer = schedule
            .edges
            .iter()
            .filter(|e| e.layer == layer)
            .map(|e| Operation::gate(Gate::cp(e.letter, anc(e.check), e.qubit)))
            .collect();
        if !ops.is_empty() {
            c.push_layer(ops);
        }
    }
    for color in 0..cz_layers {
        c.push_layer(
            tg.edges
                .iter()
                .zip(&cz_colors)
                .filter(|(_, &k)| k == color)
                .map(|(&(a, b), _)| Operation::gate(Gate::cz(anc(a), anc(b))))
                .collect(),
        );
    }
    c.push_layer((0..t).map(|i| Operation::merged(Gate::h(anc(i)))).collect());
    c.push_layer((0..t).map(|i| Operation::measure(anc(i), i)).collect());
    let signs = checks
        .iter()
        .map(|p| p.sign().map_or(0, |s| s.bit()))
        .collect();
    Ok(MeasurementFragment {
        depth: c.depth(),
        circuit: c,
        schedule,
        tangled: tg.edges,
        cz_layers,
        ancillas: (0..t).map(anc).collect(),
        cbits: (0..t).collect(),
        signs,
    })
}

/// Measures each check in turn on `state`, forcing the unsigned check's
/// outcome bit to `outcomes[i]`.
pub fn measure_sequentially(
    state: &mut StabilizerTableau,
    checks: &[PauliOperator],
    outcomes: &[u8],
) -> Result<(), PrepError> {
    let mut rng = rand_chacha::ChaCha8Rng::from_seed_u64(0);
    for (c, &b) in checks.iter().zip(outcomes) {
        state.measure_pauli(&c.unsigned(), Some(Sign::from_bit(b)), &mut rng)?;
    }
    Ok(())
}

trait SeedU64 {
    fn from_seed_u64(seed: u64) -> Self;
}

impl SeedU64 for rand_chacha::ChaCha8Rng {
    fn from_seed_u64(seed: u64) -> Self {
        <Self as rand::SeedableRng>::seed_from_u64(seed)
    }
}

fn solve_symplectic(
    gens: &[PauliOperator],
    pattern: &[bool],
    restrict: Option<Letter>,
) -> Result<Option<PauliOperator>, PrepError> {
    let n = gens.first().ok_or(PrepError::Empty)?.num_qubits();
    let rows: Vec<BitVector> = gens
        .iter()
        .map(|g| match restrict {
            // X-type unknown x: g.z . x
            Some(Letter::X) => g.z_bits().clone(),
            Some(Letter::Z) => g.x_bits().clone(),
            _ => g.z_bits().concat(g.x_bits()),
        })
        .collect();
    let cols = rows[0].len();
    let m = BitMatrix::from_rows(rows, cols)?;
    let rhs = BitVector::from_bools(pattern.iter().copied());
    let Some(sol) = m.solve(&rhs)? else {
        return Ok(None);
    };
    let zero = BitVector::zeros(n);
    let row = match restrict {
        Some(Letter::X) => sol.particular.concat(&zero),
        Some(Letter::Z) => zero.concat(&sol.particular),
        _ => sol.particular,
    };
    Ok(Some(PauliOperator::from_symplectic(&row)?.with_sign(Sign::Plus)))
}

/// Pauli commuting with every element of `s_plus` and anticommuting with
/// every element of `s_minus`, with sign `+`.
pub fn pauli_correction(s_plus: &[PauliOperator], s_minus: &[PauliOperator]) -> Result<PauliOperator, PrepError> {
    let gens: Vec<PauliOperator> = s_plus.iter().chain(s_minus).cloned().collect();
    let pattern: Vec<bool> = s_plus.iter().map(|_| false).chain(s_minus.iter().map(|_| true)).collect();
    solve_symplectic(&gens, &pattern, None)?.ok_or(PrepError::Inconsistent)
}

/// Correction for a unit syndrome on generator `i`, preferring X-only, then
/// Z-only operators so that per-qubit templates rarely mix letters.
fn unit_correction(gens: &[PauliOperator], i: usize) -> Result<PauliOperator, PrepError> {
    let pattern: Vec<bool> = (0..gens.len()).map(|j| j == i).collect();
    for restrict in [Some(Letter::X), Some(Letter::Z), None] {
        if let Some(p) = solve_symplectic(gens, &pattern, restrict)? {
            return Ok(p);
        }
    }
    Err(PrepError::Inconsistent)
}

/// Independent X-type operators that commute with every check and complete
/// the checks to `n` independent generators. Lowest-weight choices first.
pub fn x_type_logicals(code: &StabilizerCode) -> Result<Vec<PauliOperator>, PrepError> {
    let n = code.n;
    let z_rows: Vec<BitVector> = code.checks.iter().map(|c| c.z_bits().clone()).collect();
    let kernel = BitMatrix::from_rows(z_rows, n)?.null_space();
    let mut candidates: Vec<BitVector> = if kernel.len() <= 16 {
        let mut all = Vec::with_capacity(1 << kernel.len());
        for mask in 1u64..(1u64 << kernel.len()) {
            let mut v = BitVector::zeros(n);
            for (b, k) in kernel.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    v.xor_assign(k);
                }
            }
            all.push(v);
        }
        all.sort_by(|a, b| a.count_ones().cmp(&b.count_ones()).then_with(|| a.cmp(b)));
        all
    } else {
        kernel
    };
    candidates.dedup();
    let mut basis = XorBasis::new();
    for c in &code.checks {
        basis.insert(&c.symplectic());
    }
    let zero = BitVector::zeros(n);
    let mut out = Vec::new();
    for d in candidates {
        if basis.rank() == n {
            break;
        }
        if basis.insert(&d.concat(&zero)) {
            out.push(PauliOperator::from_symplectic(&d.concat(&zero))?);
        }
    }
    if basis.rank() < n {
        return Err(PrepError::Infeasible(format!(
            "X-type operators reach rank {} of {n}",
            basis.rank()
        )));
    }
    Ok(out)
}

/// Which state to start from and which generators to measure.
#[derive(Clone, Debug)]
pub enum PartitionPolicy {
    /// Measure every check on `|+>^n`, fixed by the X-type logicals.
    /// Codes without logicals start from `|0^n>`.
    AutoXLogical,
    /// Measure `s1` on the output of `phi` (a measurement-free circuit on
    /// `n` qubits), which must be stabilized by every element of `s2`.
    Explicit {
        s1: Vec<PauliOperator>,
        s2: Vec<PauliOperator>,
        phi: AdaptiveCircuit,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct PreparedState {
    #[serde(skip)]
    pub circuit: AdaptiveCircuit,
    #[serde(skip)]
    pub target: StabilizerTableau,
    pub code: String,
    pub n: usize,
    pub m: usize,
    pub ancillas: usize,
    pub s1: Vec<PauliOperator>,
    pub s2: Vec<PauliOperator>,
    pub fragment: MeasurementFragment,
    pub prep_layers: usize,
    pub correction_layers: usize,
    pub depth: usize,
    /// `2 + s + s^2` with `s` the code sparsity.
    pub fragment_depth_bound: usize,
}

/// Builds the preparation circuit: `phi`, parallel measurement of `S1`,
/// then one conditioned Pauli layer (two when some qubit needs both an X
/// and a Z with different conditions).
pub fn prepare_state(code: &StabilizerCode, policy: &PartitionPolicy) -> Result<PreparedState, PrepError> {
    let n = code.n;
    let (s1, s2, phi_layers) = match policy {
        PartitionPolicy::AutoXLogical => {
            let logicals = x_type_logicals(code)?;
            let layers = if logicals.is_empty() {
                Vec::new()
            } else {
                vec![(0..n).map(|q| Operation::gate(Gate::h(q))).collect::<Layer>()]
            };
            (code.checks.clone(), logicals, layers)
        }
        PartitionPolicy::Explicit { s1, s2, phi } => {
            if phi.m != n || phi.is_adaptive() {
                return Err(PrepError::Partition(format!(
                    "phi must be a measurement-free circuit on {n} qubits"
                )));
            }
            if s1.is_empty() {
                return Err(PrepError::Partition("S1 is empty".into()));
            }
            if let Some(p) = s1.iter().find(|p| p.weight() > code.sparsity) {
                return Err(PrepError::Partition(format!(
                    "{p} is heavier than the sparsity {}",
                    code.sparsity
                )));
            }
            let phi_state = phi.simulate(&OutcomePolicy::Random(0))?.state;
            for p in s2 {
                if phi_state.is_stabilized_by(p)? != Some(Sign::Plus) {
                    return Err(PrepError::Partition(format!("phi is not stabilized by {p}")));
                }
            }
            (s1.clone(), s2.clone(), phi.layers.clone())
        }
    };
    let mut gens = s1.clone();
    gens.extend(s2.iter().cloned());
    let target = StabilizerTableau::from_generators(gens.clone())?;
    let t = s1.len();
    let m = n + t;

    let mut phi_full = AdaptiveCircuit::new(m);
    for l in &phi_layers {
        phi_full.push_layer(l.clone());
    }
    let phi_state = phi_full.simulate(&OutcomePolicy::Random(0))?.state;
    let fragment = synthesize_measurement_circuit(&s1, m, n, None)?;
    let mut circuit = phi_full.clone();
    circuit.append(&fragment.circuit)?;
    let cbit_offset = phi_full.cbits;

    // Outcomes that are fixed on phi fold into the conditions as constants.
    let mut constant: Vec<Option<u8>> = Vec::with_capacity(t);
    for (i, p) in s1.iter().enumerate() {
        let fixed = phi_state
            .reduce_to(&(0..n).collect::<Vec<_>>())?
            .is_stabilized_by(&p.unsigned())?;
        constant.push(fixed.map(|sgn| sgn.bit() ^ fragment.signs[i]));
    }
    let units = (0..t).map(|i| unit_correction(&gens, i)).collect::<Result<Vec<_>, _>>()?;
    let condition = |set: Vec<usize>| -> Option<Condition> {
        let mut bits = Vec::new();
        let mut xor = 1u8;
        for i in set {
            match constant[i] {
                Some(c) => xor ^= c,
                None => {
                    bits.push(cbit_offset + fragment.cbits[i]);
                    xor ^= fragment.signs[i];
                }
            }
        }
        if bits.is_empty() && xor == 1 {
            return None;
        }
        Some(Condition { bits, xor })
    };
    let to_op = |gate: Gate, cond: Condition| {
        if cond.bits.is_empty() {
            Operation::gate(gate)
        } else {
            Operation::conditioned(gate, cond)
        }
    };
    let (mut first, mut second) = (Layer::new(), Layer::new());
    for q in 0..n {
        let xs: Vec<usize> = (0..t).filter(|&i| units[i].x_bits().get(q)).collect();
        let zs: Vec<usize> = (0..t).filter(|&i| units[i].z_bits().get(q)).collect();
        match (condition(xs), condition(zs)) {
            (None, None) => {}
            (Some(cx), None) => first.push(to_op(Gate::x(q), cx)),
            (None, Some(cz)) => first.push(to_op(Gate::z(q), cz)),
            (Some(cx), Some(cz)) if cx == cz => first.push(to_op(Gate::y(q), cx)),
            (Some(cx), Some(cz)) => {
                first.push(to_op(Gate::x(q), cx));
                second.push(to_op(Gate::z(q), cz));
            }
        }
    }
    let mut correction_layers = 0;
    for layer in [first, second] {
        if !layer.is_empty() {
            circuit.push_layer(layer);
            correction_layers += 1;
        }
    }
    let s = code.sparsity;
    Ok(PreparedState {
        depth: circuit.depth(),
        circuit,
        target,
        code: code.name.clone(),
        n,
        m,
        ancillas: t,
        s1,
        s2,
        prep_layers: phi_layers.len(),
        correction_layers,
        fragment_depth_bound: 2 + s + s * s,
        fragment,
    })
}

/// Outcome of checking a circuit against its target on many branches.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub depth: usize,
    pub ancillas: usize,
    pub random_trials: usize,
    pub exhaustive_branches: usize,
    pub passed: bool,
    /// Outcome bits (classical bit 0 first) of a failing branch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    pub bounds: Vec<BoundCheck>,
}

/// Largest classical register enumerated exhaustively.
pub const MAX_EXHAUSTIVE_BITS: usize = 12;

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (depth {}, {} ancillas, {} random + {} exhaustive branches)",
            if self.passed { "verified" } else { "FAILED" },
            self.depth,
            self.ancillas,
            self.random_trials,
            self.exhaustive_branches
        )
    }
}

fn bits_string(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}

/// Simulates `circuit` with `trials` random seeds (from `seed`) and, with
/// `exhaustive`, every forced outcome pattern when the classical register
/// has at most [`MAX_EXHAUSTIVE_BITS`] bits. Forced outcomes that contradict
/// a deterministic measurement take the deterministic value.
pub fn verify_preparation(
    circuit: &AdaptiveCircuit,
    target: &StabilizerTableau,
    trials: usize,
    exhaustive: bool,
    seed: u64,
) -> Result<VerificationReport, PrepError> {
    let n = target.num_qubits();
    let ancillas = circuit.ancilla_count(n)?;
    let check = |policy: OutcomePolicy| -> Result<Option<String>, PrepError> {
        let r = circuit.simulate_from(StabilizerTableau::zero_state(circuit.m), &policy)?;
        Ok((!r.state.states_equal(target)).then(|| bits_string(&r.record)))
    };
    let random: Vec<Result<Option<String>, PrepError>> = (0..trials)
        .into_par_iter()
        .map(|i| check(OutcomePolicy::Random(seed.wrapping_add(i as u64))))
        .collect();
    let branches = if exhaustive && circuit.cbits <= MAX_EXHAUSTIVE_BITS {
        1usize << circuit.cbits
    } else {
        0
    };
    let forced: Vec<Result<Option<String>, PrepError>> = (0..branches)
        .into_par_iter()
        .map(|mask| {
            let bits = (0..circuit.cbits).map(|b| (mask >> b & 1) as u8).collect();
            check(OutcomePolicy::Forced { bits, strict: false })
        })
        .collect();
    let mut counterexample = None;
    for r in random.into_iter().chain(forced) {
        if let Some(w) = r? {
            counterexample.get_or_insert(w);
        }
    }
    let mut bounds = Vec::new();
    if n <= crate::metrics::MAX_GROUP_QUBITS {
        let wt = stabilizer_weight(target).map_err(|e| PrepError::Internal(e.to_string()))?;
        let k = circuit.max_fan_in().max(2);
        if let Ok(profile) = ResourceProfile::from_circuit(circuit, k, Geometry::AllToAll) {
            bounds.push(check_clifford_adaptive(&profile, wt));
            bounds.push(check_adaptive_weight(&profile, wt));
        }
    }
    Ok(VerificationReport {
        depth: circuit.depth(),
        ancillas,
        random_trials: trials,
        exhaustive_branches: branches,
        passed: counterexample.is_none(),
        counterexample,
        bounds,
    })
}

/// Whether measuring Z on qubits `n..m` of `big` can leave `small` on
/// `0..n`: every generator `S` of `small` needs some `z` with
/// `S (x) Z^z` in the stabilizer group of `big`.
pub fn check_measurement_transform(big: &StabilizerTableau, small: &StabilizerTableau) -> Result<bool, PrepError> {
    let (m, n) = (big.num_qubits(), small.num_qubits());
    if n > m {
        return Err(PrepError::Partition(format!("{n} target qubits exceed {m}")));
    }
    let extra = m - n;
    let positions: Vec<usize> = (0..n).collect();
    // Columns: generators of `big`, then Z on each extra qubit.
    let mut columns: Vec<BitVector> = big.generators().iter().map(|g| g.symplectic()).collect();
    for a in 0..extra {
        columns.push(PauliOperator::single(m, n + a, Letter::Z).symplectic());
    }
    let cols = columns.len();
    let mut rows = vec![BitVector::zeros(cols); 2 * m];
    for (c, v) in columns.iter().enumerate() {
        for r in v.iter_ones() {
            rows[r].set(c, true);
        }
    }
    let mat = BitMatrix::from_rows(rows, cols)?;
    // Z on the extra qubits selected by a solution vector.
    let z_part = |x: &BitVector| -> PauliOperator {
        let qs: Vec<usize> = (0..extra).filter(|&a| x.get(m + a)).map(|a| n + a).collect();
        PauliOperator::z_on(m, &qs)
    };
    for s in small.generators() {
        let embedded = s.embed(m, &positions);
        let Some(sol) = mat.solve(&embedded.symplectic())? else {
            return Ok(false);
        };
        let candidate = embedded.multiply(&z_part(&sol.particular))?;
        match big.is_stabilized_by(&candidate)? {
            Some(Sign::Plus) => continue,
            Some(Sign::Minus) => {
                // Another z works iff some Z-only element on the extra
                // qubits carries a minus sign.
                let flips = sol.null_space.iter().any(|k| {
                    let z = z_part(k);
                    !z.is_identity() && big.is_stabilized_by(&z).ok().flatten() == Some(Sign::Minus)
                });
                if !flips {
                    return Ok(false);
                }
            }
            None => return Err(PrepError::Internal("solved element not in the group".into())),
        }
    }
    Ok(true)
}
