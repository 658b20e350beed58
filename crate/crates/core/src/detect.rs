//! Entanglement criteria built on bound vectors and the reports that
//! combine them.
//!
//! Every criterion is one-sided: a violation proves the state lies outside
//! the bound's separability class, a non-violation proves nothing, so it
//! is always reported as inconclusive.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundResult, SeparabilityClass};
use crate::error::{Error, Result};
use crate::majorization::{
    compare, construct_bistochastic, f_divergence, hellinger_distance, schur_measure, FDivergence, SchurMeasure,
    TransferChain, TransferStep,
};
use crate::measurements::{measure, Povm, ProbabilityVector};
use crate::tensor::{DensityMatrix, HermitianOperator};

/// Numeric slack for the Schur, circle and witness tests.
pub const CRITERION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Criterion {
    Majorization,
    Schur { measure: SchurMeasure },
    Bistochastic,
    Circle { divergence: FDivergence },
    Witness,
}

impl Criterion {
    /// Majorization, Shannon, bistochastic, Hellinger circle and witnesses.
    pub fn standard() -> Vec<Criterion> {
        vec![
            Criterion::Majorization,
            Criterion::Schur { measure: SchurMeasure::Shannon },
            Criterion::Bistochastic,
            Criterion::Circle { divergence: FDivergence::HellingerGen },
            Criterion::Witness,
        ]
    }

    pub fn label(&self) -> String {
        match self {
            Criterion::Majorization => "majorization".into(),
            Criterion::Schur { measure } => measure.label(),
            Criterion::Bistochastic => "bistochastic".into(),
            Criterion::Circle { divergence } => format!("circle:{}", divergence.label()),
            Criterion::Witness => "witness".into(),
        }
    }

    /// Parses a comma separated list; `all` expands to [`Criterion::standard`].
    pub fn parse_list(s: &str) -> Result<Vec<Criterion>> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if item == "all" {
                out.extend(Criterion::standard());
            } else {
                out.push(item.parse()?);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let alpha = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| Error::InvalidParameter(format!("criterion {s:?} needs an order, e.g. {name}:2")))?;
            a.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad entropy order {a:?}")))
        };
        let c = match (name, arg) {
            ("majorization", None) => Criterion::Majorization,
            ("bistochastic", None) => Criterion::Bistochastic,
            ("witness", None) => Criterion::Witness,
            ("shannon" | "schur", None) => Criterion::Schur { measure: SchurMeasure::Shannon },
            ("renyi", a) => Criterion::Schur { measure: SchurMeasure::Renyi(alpha(a)?) },
            ("tsallis", a) => Criterion::Schur { measure: SchurMeasure::Tsallis(alpha(a)?) },
            ("circle", None) | ("hellinger", None) | ("circle", Some("hellinger")) => {
                Criterion::Circle { divergence: FDivergence::HellingerGen }
            }
            ("circle", Some("kl")) => Criterion::Circle { divergence: FDivergence::Kl },
            ("circle", Some("chi2")) => Criterion::Circle { divergence: FDivergence::Chi2 },
            _ => return Err(Error::InvalidParameter(format!("unknown criterion {s:?}"))),
        };
        if let Criterion::Schur { measure } = c {
            measure.validate()?;
        }
        Ok(c)
    }
}

/// What a violation of a bound proves about the state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Conclusion {
    Inconclusive,
    Entangled,
    /// Not a mixture of states from the named partition class.
    NotOfType(String),
    /// At most this many separable blocks.
    AtMostSeparable(usize),
    GenuinelyEntangled,
}

impl Conclusion {
    /// The claim a violation of a bound for `class` supports.
    pub fn from_violation(class: &SeparabilityClass) -> Conclusion {
        let n = match class {
            SeparabilityClass::Unconstrained => return Conclusion::Inconclusive,
            SeparabilityClass::Partition { partition } => partition.parties(),
            SeparabilityClass::KSeparable { parties, .. } => *parties,
            SeparabilityClass::Union { partitions } => partitions[0].parties(),
        };
        if n == 2 {
            return Conclusion::Entangled;
        }
        match class.clone().normalized() {
            SeparabilityClass::KSeparable { k: 2, .. } => Conclusion::GenuinelyEntangled,
            SeparabilityClass::KSeparable { k, .. } => Conclusion::AtMostSeparable(k - 1),
            SeparabilityClass::Partition { partition } if partition.is_singletons() => {
                Conclusion::AtMostSeparable(n - 1)
            }
            other => Conclusion::NotOfType(other.label()),
        }
    }

    fn rank(&self) -> (u8, usize) {
        match self {
            Conclusion::Inconclusive => (0, 0),
            Conclusion::Entangled => (1, 0),
            Conclusion::NotOfType(_) => (2, 0),
            Conclusion::AtMostSeparable(k) => (3, usize::MAX - k),
            Conclusion::GenuinelyEntangled => (4, 0),
        }
    }

    /// Strength order; equal ranks compare equal.
    pub fn strength_cmp(&self, other: &Conclusion) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conclusion::Inconclusive => f.write_str("inconclusive"),
            Conclusion::Entangled => f.write_str("entangled"),
            Conclusion::NotOfType(label) => write!(f, "not-type-{label}"),
            Conclusion::AtMostSeparable(k) => write!(f, "at-most-{k}-separable"),
            Conclusion::GenuinelyEntangled => f.write_str("genuinely-entangled"),
        }
    }
}

impl From<Conclusion> for String {
    fn from(c: Conclusion) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Conclusion {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Conclusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "inconclusive" | "no-violation" => return Ok(Conclusion::Inconclusive),
            "entangled" => return Ok(Conclusion::Entangled),
            "genuinely-entangled" => return Ok(Conclusion::GenuinelyEntangled),
            _ => {}
        }
        if let Some(label) = s.strip_prefix("not-type-") {
            if !label.is_empty() {
                return Ok(Conclusion::NotOfType(label.to_string()));
            }
        }
        if let Some(k) = s.strip_prefix("at-most-").and_then(|r| r.strip_suffix("-separable")) {
            if let Ok(k) = k.parse() {
                return Ok(Conclusion::AtMostSeparable(k));
            }
        }
        Err(Error::InvalidParameter(format!("unknown conclusion {s:?}")))
    }
}

/// Outcome of one criterion against one bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: Criterion,
    pub bound_id: String,
    pub violated: bool,
    /// First prefix size at which the distribution exceeds the bound, or for
    /// witnesses the first `k` with a negative expectation.
    pub prefix: Option<usize>,
    /// Signed margin, positive exactly when the criterion is violated (up to
    /// tolerance).
    pub gap: f64,
    pub conclusion: Conclusion,
    /// Set when the bound is an under-estimate, so a violation is not proof.
    pub heuristic: bool,
    /// T-transforms carrying the bound onto the distribution, when they exist.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<Vec<TransferStep>>,
}

/// Identifier used in reports: class label and method.
pub fn bound_id(bound: &BoundResult) -> String {
    format!("{}/{}", bound.class.label(), bound.method.label())
}

fn verdict(criterion: Criterion, bound: &BoundResult, violated: bool, prefix: Option<usize>, gap: f64) -> Verdict {
    Verdict {
        criterion,
        bound_id: bound_id(bound),
        violated,
        prefix,
        gap,
        conclusion: if violated { Conclusion::from_violation(&bound.class) } else { Conclusion::Inconclusive },
        heuristic: bound.is_heuristic(),
        certificate: None,
    }
}

fn majorization_prefix(dist: &ProbabilityVector, bound: &BoundResult) -> Option<usize> {
    compare(dist, &bound.omega).first_violation.map(|v| v.prefix)
}

/// Violation iff `dist ⊀ ω`.
pub fn check_majorization_criterion(dist: &ProbabilityVector, bound: &BoundResult) -> Verdict {
    let v = compare(dist, &bound.omega);
    let prefix = v.first_violation.map(|g| g.prefix);
    verdict(Criterion::Majorization, bound, !v.is_majorized(), prefix.or(Some(v.max_gap.prefix)), v.max_gap.gap)
}

/// Violation iff `Φ(dist) < Φ(ω) - tol` for the Schur-concave `Φ`.
pub fn check_schur_criterion(dist: &ProbabilityVector, bound: &BoundResult, measure: SchurMeasure) -> Result<Verdict> {
    let gap = schur_measure(measure, &bound.omega)? - schur_measure(measure, dist)?;
    Ok(verdict(
        Criterion::Schur { measure },
        bound,
        gap > CRITERION_TOL,
        majorization_prefix(dist, bound),
        gap,
    ))
}

/// Violation iff no chain of T-transforms carries `ω` onto `dist`; on
/// success the chain is attached as a certificate.
pub fn check_bistochastic_criterion(dist: &ProbabilityVector, bound: &BoundResult) -> Verdict {
    let max_gap = compare(dist, &bound.omega).max_gap;
    match construct_bistochastic(dist, &bound.omega) {
        Ok(chain) => {
            let mut v = verdict(Criterion::Bistochastic, bound, false, None, max_gap.gap);
            v.certificate = Some(chain.steps);
            v
        }
        Err(Error::NotMajorized { prefix, .. }) => {
            verdict(Criterion::Bistochastic, bound, true, Some(prefix), max_gap.gap)
        }
        Err(e) => unreachable!("construct_bistochastic only refuses with NotMajorized: {e}"),
    }
}

/// The certificate chain itself, for callers that want the matrix.
pub fn bistochastic_certificate(dist: &ProbabilityVector, bound: &BoundResult) -> Option<TransferChain> {
    construct_bistochastic(dist, &bound.omega).ok()
}

/// Hellinger distance from `ω` to the uniform vector: the radius of the
/// bound's circle.
pub fn circle_radius(bound: &BoundResult) -> f64 {
    hellinger_distance(&bound.omega, &ProbabilityVector::uniform(bound.omega.len()))
}

/// Violation iff `D_f(dist‖K) > D_f(ω‖K) + tol`, i.e. the distribution lies
/// outside the bound's circle around the uniform vector `K`.
pub fn check_circle_criterion(dist: &ProbabilityVector, bound: &BoundResult, divergence: FDivergence) -> Verdict {
    let m = dist.len().max(bound.omega.len());
    let center = ProbabilityVector::uniform(m);
    let d_dist = f_divergence(divergence, &dist.padded(m), &center);
    let d_bound = f_divergence(divergence, &bound.omega.padded(m), &center);
    let gap = if d_dist == d_bound { 0.0 } else { d_dist - d_bound };
    verdict(
        Criterion::Circle { divergence },
        bound,
        gap > CRITERION_TOL,
        majorization_prefix(dist, bound),
        gap,
    )
}

/// `W_k = Ω_k I - Σ_{i∈I_k} E_i`, nonnegative in expectation on the bound's
/// class.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessOperator {
    pub k: usize,
    pub subset: Vec<usize>,
    pub omega_k: f64,
    pub operator: HermitianOperator,
    /// `Ω_k` came from sampling and may be too small.
    pub heuristic: bool,
}

/// One witness per prefix size, using the bound's maximizing subsets or the
/// first `k` outcomes when none were recorded.
pub fn build_witnesses(povm: &Povm, bound: &BoundResult) -> Result<Vec<WitnessOperator>> {
    let m = povm.len();
    if bound.prefix_maxima.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "bound has {} outcomes, POVM has {m}",
            bound.prefix_maxima.len()
        )));
    }
    let identity = HermitianOperator::identity(povm.spec());
    (1..=m)
        .map(|k| {
            let subset = match &bound.best_subsets {
                Some(s) => s[k - 1].clone(),
                None => (0..k).collect(),
            };
            let omega_k = bound.omega_k(k);
            let operator = identity.scale(omega_k).sub(&povm.subset_sum(&subset))?;
            Ok(WitnessOperator { k, subset, omega_k, operator, heuristic: bound.is_heuristic() })
        })
        .collect()
}

/// `Tr(W ρ)`.
pub fn evaluate_witness(w: &WitnessOperator, rho: &DensityMatrix) -> Result<f64> {
    if w.operator.spec() != rho.spec() {
        return Err(Error::DimensionMismatch(format!(
            "witness acts on {:?}, state on {:?}",
            w.operator.spec().dims(),
            rho.spec().dims()
        )));
    }
    w.operator.trace_product(rho.op())
}

fn check_witness_criterion(povm: &Povm, rho: &DensityMatrix, bound: &BoundResult) -> Result<Verdict> {
    let witnesses = build_witnesses(povm, bound)?;
    let mut first = None;
    let mut worst = f64::INFINITY;
    for w in &witnesses {
        let v = evaluate_witness(w, rho)?;
        if v < -CRITERION_TOL && first.is_none() {
            first = Some(w.k);
        }
        worst = worst.min(v);
    }
    Ok(verdict(Criterion::Witness, bound, first.is_some(), first, -worst))
}

/// Radius of one bound's circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleRadius {
    pub bound_id: String,
    /// Number of blocks for partition and k-separable classes.
    pub k: Option<usize>,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub state_id: String,
    pub povm_id: String,
    pub distribution: ProbabilityVector,
    pub verdicts: Vec<Verdict>,
    pub conclusion: Conclusion,
    pub circle_radii: Vec<CircleRadius>,
    /// Hellinger distance of the distribution from the uniform vector.
    pub state_radius: f64,
    pub notes: Vec<String>,
}

impl DetectionReport {
    pub fn with_ids(mut self, state_id: impl Into<String>, povm_id: impl Into<String>) -> Self {
        self.state_id = state_id.into();
        self.povm_id = povm_id.into();
        self
    }

    pub fn violations(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| v.violated)
    }
}

fn class_blocks(class: &SeparabilityClass) -> Option<usize> {
    match class {
        SeparabilityClass::Unconstrained => None,
        SeparabilityClass::Partition { partition } => Some(partition.k()),
        SeparabilityClass::KSeparable { k, .. } => Some(*k),
        SeparabilityClass::Union { partitions } => partitions.first().map(|p| p.k()),
    }
}

/// Applies every criterion to every bound and keeps the strongest claim
/// backed by a certified bound.
pub fn run_detection(
    rho: &DensityMatrix,
    povm: &Povm,
    bounds: &[BoundResult],
    criteria: &[Criterion],
) -> Result<DetectionReport> {
    if rho.spec() != povm.spec() {
        return Err(Error::DimensionMismatch(format!(
            "state acts on {:?}, POVM on {:?}",
            rho.spec().dims(),
            povm.spec().dims()
        )));
    }
    for b in bounds {
        if b.omega.len() != povm.len() {
            return Err(Error::DimensionMismatch(format!(
                "bound {} has {} outcomes, POVM has {}",
                bound_id(b),
                b.omega.len(),
                povm.len()
            )));
        }
    }
    let dist = measure(rho, povm)?;
    let mut verdicts = Vec::new();
    if !criteria.is_empty() {
        for b in bounds {
            for &c in criteria {
                verdicts.push(match c {
                    Criterion::Majorization => check_majorization_criterion(&dist, b),
                    Criterion::Schur { measure } => check_schur_criterion(&dist, b, measure)?,
                    Criterion::Bistochastic => check_bistochastic_criterion(&dist, b),
                    Criterion::Circle { divergence } => check_circle_criterion(&dist, b, divergence),
                    Criterion::Witness => check_witness_criterion(povm, rho, b)?,
                });
            }
        }
    }

    let mut conclusion = Conclusion::Inconclusive;
    for v in verdicts.iter().filter(|v| v.violated && !v.heuristic) {
        if v.conclusion.strength_cmp(&conclusion) == Ordering::Greater {
            conclusion = v.conclusion.clone();
        }
    }

    let mut notes = vec![
        "a non-violation is inconclusive: every criterion is only necessary for membership in the bound's class"
            .to_string(),
        "circle criteria flag distributions with D_f(p||K) > D_f(omega||K), i.e. outside the bound's circle".to_string(),
    ];
    if verdicts.iter().any(|v| v.violated && v.heuristic) {
        notes.push("violations against sampled bounds are heuristic and do not enter the conclusion".to_string());
    }

    let circle_radii = bounds
        .iter()
        .map(|b| CircleRadius { bound_id: bound_id(b), k: class_blocks(&b.class), radius: circle_radius(b) })
        .collect();
    let state_radius = hellinger_distance(&dist, &ProbabilityVector::uniform(dist.len()));
    Ok(DetectionReport {
        state_id: String::new(),
        povm_id: String::new(),
        distribution: dist,
        verdicts,
        conclusion,
        circle_radii,
        state_radius,
        notes,
    })
}
