//! Time-space trade-off checks for concrete circuits and states.
//!
//! Every check compares an integer resource expression with a state
//! quantity; a violated check on a circuit built and verified here means a
//! bug somewhere upstream.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::circuit::{g_value, AdaptiveCircuit, Geometry};
use crate::densesim::{dicke_correlation_formula, DenseError, StateFamily};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("profile has {0} ancillas; the non-adaptive check needs none")]
    HasMeasurements(usize),
    #[error("target has {n} qubits but the circuit only {m}")]
    TargetTooLarge { n: usize, m: usize },
    #[error("circuit is not valid for K = {k} on {geometry}: {first}")]
    InvalidCircuit {
        k: usize,
        geometry: String,
        first: String,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported family {0}")]
    UnknownFamily(String),
    #[error(transparent)]
    Dense(#[from] DenseError),
}

/// Resources of a circuit: `n` output qubits out of `m`, fan-in `K`, depth
/// `L` (measurement layers included).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResourceProfile {
    pub n: usize,
    pub m: usize,
    pub n_a: usize,
    pub k: usize,
    pub l: usize,
    #[serde(serialize_with = "display_string")]
    pub geometry: Geometry,
}

fn display_string<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl ResourceProfile {
    pub fn new(n: usize, m: usize, k: usize, l: usize, geometry: Geometry) -> Result<Self, BoundsError> {
        if n > m {
            return Err(BoundsError::TargetTooLarge { n, m });
        }
        if k == 0 {
            return Err(BoundsError::InvalidParameter("fan-in K must be positive".into()));
        }
        Ok(Self {
            n,
            m,
            n_a: m - n,
            k,
            l,
            geometry,
        })
    }

    /// Profile of a circuit that passes validation at fan-in `k` on
    /// `geometry`. The output register is the set of unmeasured qubits.
    pub fn from_circuit(c: &AdaptiveCircuit, k: usize, geometry: Geometry) -> Result<Self, BoundsError> {
        let report = c.validate(k, &geometry);
        if let Some(v) = report.violations.first() {
            return Err(BoundsError::InvalidCircuit {
                k,
                geometry: geometry.to_string(),
                first: format!("layer {}: {}", v.layer, v.message),
            });
        }
        Self::new(c.surviving_qubits().len(), c.m, k, c.depth(), geometry)
    }

    fn g(&self, d: usize) -> u128 {
        g_value(self.k, d, &self.geometry)
    }

    /// `2L - 1`, or 0 for an empty circuit.
    fn doubled_depth(&self) -> usize {
        (2 * self.l).saturating_sub(1)
    }
}

/// A form that is reported but never decides pass/fail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Advisory {
    pub formula: String,
    pub lhs: u128,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundCheck {
    pub check: String,
    pub formula: String,
    pub lhs: u128,
    pub rhs: u128,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<Advisory>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub profile: ResourceProfile,
}

impl BoundCheck {
    fn new(check: &str, formula: String, lhs: u128, rhs: usize, profile: &ResourceProfile) -> Self {
        Self {
            check: check.to_string(),
            formula,
            lhs,
            rhs: rhs as u128,
            satisfied: lhs >= rhs as u128,
            advisory: None,
            warning: None,
            profile: profile.clone(),
        }
    }
}

impl fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} = {} >= {} {}",
            self.check,
            self.formula,
            self.lhs,
            self.rhs,
            if self.satisfied { "ok" } else { "VIOLATED" }
        )
    }
}

fn g_name(geometry: &Geometry) -> &'static str {
    match geometry {
        Geometry::AllToAll => "K^D",
        Geometry::Grid { .. } => "(2(K-1)D+1)^r",
    }
}

/// Non-adaptive depth bound `g_{K,L} >= wt`.
pub fn check_nonadaptive(profile: &ResourceProfile, wt: usize) -> Result<BoundCheck, BoundsError> {
    if profile.n_a > 0 {
        return Err(BoundsError::HasMeasurements(profile.n_a));
    }
    let lhs = profile.g(profile.l);
    Ok(BoundCheck::new(
        "nonadaptive",
        format!("g(K,L) with g = {}", g_name(&profile.geometry)),
        lhs,
        wt,
        profile,
    ))
}

/// Adaptive weight bound `(n_a + 1) g_{K,2L-1} >= wt`, with the conjectured
/// `(n_a + 1) g_{K,L}` as an advisory.
pub fn check_adaptive_weight(profile: &ResourceProfile, wt: usize) -> BoundCheck {
    let factor = profile.n_a as u128 + 1;
    let lhs = factor.saturating_mul(profile.g(profile.doubled_depth()));
    let mut out = BoundCheck::new(
        "adaptive-weight",
        "(n_a+1) g(K,2L-1)".to_string(),
        lhs,
        wt,
        profile,
    );
    let conj = factor.saturating_mul(profile.g(profile.l));
    out.advisory = Some(Advisory {
        formula: "(n_a+1) g(K,L) [conjectured]".to_string(),
        lhs: conj,
        satisfied: conj >= wt as u128,
    });
    if profile.n_a == 0 {
        out.warning = Some("no ancillas: the non-adaptive check is tighter".to_string());
    }
    out
}

/// Clifford adaptive bound `(n_a + 1) g_{K,L} >= wt_s`.
pub fn check_clifford_adaptive(profile: &ResourceProfile, wt_s: usize) -> BoundCheck {
    let lhs = (profile.n_a as u128 + 1).saturating_mul(profile.g(profile.l));
    BoundCheck::new("clifford-adaptive", "(n_a+1) g(K,L)".to_string(), lhs, wt_s, profile)
}

/// Correlation range bound `(n_a + w) g_{K,2L-1} + w - 1 >= CR_w`.
pub fn check_correlation(profile: &ResourceProfile, w: usize, cr_w: usize) -> Result<BoundCheck, BoundsError> {
    if w == 0 {
        return Err(BoundsError::InvalidParameter("w must be at least 1".into()));
    }
    if 2 * w > profile.n.max(1) {
        return Err(BoundsError::InvalidParameter(format!(
            "w = {w} leaves no room for two disjoint subsets of {} qubits",
            profile.n
        )));
    }
    let lhs = ((profile.n_a + w) as u128)
        .saturating_mul(profile.g(profile.doubled_depth()))
        .saturating_add(w as u128 - 1);
    Ok(BoundCheck::new(
        "correlation",
        format!("(n_a+{w}) g(K,2L-1) + {}", w - 1),
        lhs,
        cr_w,
        profile,
    ))
}

/// Permutation-invariant states: every pair is correlated, so `CR_1 = n`.
pub fn check_permutation_invariant(profile: &ResourceProfile) -> BoundCheck {
    let mut out = check_correlation(profile, 1, profile.n)
        .unwrap_or_else(|_| BoundCheck::new("correlation", String::new(), 0, profile.n, profile));
    out.check = "permutation-invariant".to_string();
    out.formula = "(n_a+1) g(K,2L-1)".to_string();
    out
}

/// Tolerable infidelity for one family: states within `delta^2 / 36` of the
/// target keep the resource lower bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToleranceEntry {
    pub family: String,
    pub n: usize,
    /// Correlation strength used.
    pub delta: f64,
    pub delta_source: String,
    /// `delta^2 / 36`.
    pub tolerance: f64,
    pub nonadaptive: String,
    pub adaptive: String,
    /// Value of the closed form when it is exact rather than asymptotic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form_value: Option<f64>,
}

/// Tolerable-error entry for `ghz`, `w`, `dicke(k)` and `hypergraph` with
/// subsets of size `w` for the W/Dicke families.
pub fn approximate_tolerance_table(family: &StateFamily, w: usize) -> Result<ToleranceEntry, BoundsError> {
    let n = family.num_qubits();
    let entry = |delta: f64, src: String, na: &str, ad: &str, exact: Option<f64>| ToleranceEntry {
        family: family.to_string(),
        n,
        delta,
        delta_source: src,
        tolerance: delta * delta / 36.0,
        nonadaptive: na.to_string(),
        adaptive: ad.to_string(),
        closed_form_value: exact,
    };
    match *family {
        StateFamily::Ghz(_) => Ok(entry(1.0, "Cor(Z_i,Z_j) = 1".into(), "1/36", "1/36", Some(1.0 / 36.0))),
        StateFamily::Hypergraph(_) => {
            let t = 2f64.powi(2 - n as i32);
            Ok(entry(
                t * (1.0 - t),
                "Cor(X_i,X_j) = 2^(2-n)(1-2^(2-n))".into(),
                "1/(9*4^n)",
                "1/(9*4^n)",
                Some(1.0 / (9.0 * 4f64.powi(n as i32))),
            ))
        }
        StateFamily::W(_) => {
            let delta = dicke_correlation_formula(n, 1, w)?;
            Ok(entry(
                delta,
                format!("Cor(Z_A1,Z_A2), |A_i| = {w}"),
                "O(1/n^eps)",
                "O(1)",
                None,
            ))
        }
        StateFamily::Dicke(_, k) => {
            let delta = dicke_correlation_formula(n, k, w)?;
            Ok(entry(
                delta,
                format!("Cor(Z_A1,Z_A2), |A_i| = {w}"),
                "O(k^2/n^2)",
                "O(k^2/n^2)",
                None,
            ))
        }
        _ => Err(BoundsError::UnknownFamily(family.to_string())),
    }
}

/// All applicable checks for a circuit whose verified output has stabilizer
/// weight `wt_s` and `CR_1 = cr1`.
pub fn check_all(profile: &ResourceProfile, wt_s: usize, cr1: Option<usize>) -> Vec<BoundCheck> {
    let mut out = Vec::new();
    if profile.n_a == 0 {
        out.push(check_nonadaptive(profile, wt_s).expect("no ancillas"));
    }
    out.push(check_adaptive_weight(profile, wt_s));
    out.push(check_clifford_adaptive(profile, wt_s));
    if let Some(cr) = cr1 {
        if profile.n >= 2 {
            out.push(check_correlation(profile, 1, cr).expect("w = 1 with n >= 2"));
        }
    }
    out
}
