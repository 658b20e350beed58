//! The majorization order on probability vectors and the quantities that
//! respect it: lattice join, T-transform chains, Schur-concave entropies and
//! f-divergences.
//!
//! Convention: `x ≺ y` holds when every descending prefix sum of `x` is at
//! most the corresponding prefix sum of `y` (totals equal). Equivalently
//! `x = Q y` for a doubly stochastic `Q`, which is the direction
//! [`construct_bistochastic`] certifies.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::{sorted_desc, ProbabilityVector};

/// Prefix sums closer than this are treated as equal. A gap exactly at the
/// tolerance counts as a non-violation.
pub const MAJORIZATION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// First vector strictly majorized by the second.
    Less,
    /// Second vector strictly majorized by the first.
    Greater,
    /// Equal after sorting.
    Equal,
    Incomparable,
}

/// Difference of descending prefix sums at a 1-based prefix length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixGap {
    pub prefix: usize,
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorizationVerdict {
    pub relation: Relation,
    /// First prefix at which the first vector's sum exceeds the second's,
    /// i.e. where `x ≺ y` breaks.
    pub first_violation: Option<PrefixGap>,
    /// Largest `S_x(k) - S_y(k)` over all prefixes; positive means `x ⊀ y`.
    pub max_gap: PrefixGap,
}

impl MajorizationVerdict {
    /// `x ≺ y`, strictly or up to permutation.
    pub fn is_majorized(&self) -> bool {
        matches!(self.relation, Relation::Less | Relation::Equal)
    }

    /// `x ≺≺ y`.
    pub fn is_strict(&self) -> bool {
        self.relation == Relation::Less
    }
}

fn padded_sorted(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len().max(y.len());
    let mut xs = sorted_desc(x);
    let mut ys = sorted_desc(y);
    xs.resize(n, 0.0);
    ys.resize(n, 0.0);
    (xs, ys)
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

pub(crate) fn compare_slices(x: &[f64], y: &[f64]) -> MajorizationVerdict {
    let (xs, ys) = padded_sorted(x, y);
    let sx = prefix_sums(&xs);
    let sy = prefix_sums(&ys);
    let n = xs.len();
    let diffs: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a - b).collect();

    let totals_match = diffs[n - 1].abs() <= MAJORIZATION_TOL;
    let inner = &diffs[..n - 1];
    let x_below = totals_match && inner.iter().all(|&g| g <= MAJORIZATION_TOL);
    let y_below = totals_match && inner.iter().all(|&g| g >= -MAJORIZATION_TOL);
    let relation = match (x_below, y_below) {
        (true, true) => Relation::Equal,
        (true, false) => Relation::Less,
        (false, true) => Relation::Greater,
        (false, false) => Relation::Incomparable,
    };

    let first_violation = diffs
        .iter()
        .enumerate()
        .find(|(k, &g)| if *k == n - 1 { g.abs() > MAJORIZATION_TOL } else { g > MAJORIZATION_TOL })
        .map(|(k, &gap)| PrefixGap { prefix: k + 1, gap });

    let mut max_gap = PrefixGap { prefix: 1, gap: diffs[0] };
    for (k, &g) in diffs.iter().enumerate().skip(1) {
        if g > max_gap.gap {
            max_gap = PrefixGap { prefix: k + 1, gap: g };
        }
    }
    MajorizationVerdict { relation, first_violation, max_gap }
}

/// Majorization verdict for `x` against `y`; the shorter vector is
/// zero-padded first.
pub fn compare(x: &ProbabilityVector, y: &ProbabilityVector) -> MajorizationVerdict {
    compare_slices(x.as_slice(), y.as_slice())
}

/// Upper concave envelope of the points `(k, values[k])`, evaluated at
/// every integer `k`.
pub fn least_concave_majorant(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n <= 2 {
        return values.to_vec();
    }
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b when it lies on or below the chord from a to k
            let cross = (b - a) as f64 * (values[k] - values[a]) - (k - a) as f64 * (values[b] - values[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut out = vec![0.0; n];
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (values[b] - values[a]) / (b - a) as f64;
        for (k, slot) in out.iter_mut().enumerate().take(b + 1).skip(a) {
            *slot = values[a] + slope * (k - a) as f64;
        }
        out[b] = values[b];
    }
    out
}

/// Increments of a cumulative curve starting at zero.
pub(crate) fn increments(curve: &[f64]) -> Vec<f64> {
    curve.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Least upper bound of `x` and `y` in the majorization order: the
/// increments of the least concave majorant of the pointwise maximum of
/// their Lorenz curves.
pub fn lattice_join(x: &ProbabilityVector, y: &ProbabilityVector) -> ProbabilityVector {
    let (xs, ys) = padded_sorted(x.as_slice(), y.as_slice());
    let mut curve = vec![0.0];
    curve.extend(prefix_sums(&xs).iter().zip(prefix_sums(&ys)).map(|(a, b)| a.max(b)));
    let hull = least_concave_majorant(&curve);
    let mut inc = increments(&hull);
    for v in inc.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = inc.iter().sum();
    for v in inc.iter_mut() {
        *v /= total;
    }
    ProbabilityVector::new(inc).expect("join of distributions is a distribution")
}

/// One T-transform `λI + (1-λ)P_{ij}` in sorted coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferStep {
    pub lambda: f64,
    pub i: usize,
    pub j: usize,
}

/// T-transforms and their accumulated doubly stochastic matrix `Q`, with
/// `Q · y↓ = x↓`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferChain {
    pub steps: Vec<TransferStep>,
    pub matrix: DMatrix<f64>,
}

impl TransferChain {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.matrix.nrows();
        (0..n).map(|r| (0..n).map(|c| self.matrix[(r, c)] * v[c]).sum()).collect()
    }

    /// Largest deviation of any row or column sum from one.
    pub fn stochasticity_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max((self.matrix.row(i).sum() - 1.0).abs());
            worst = worst.max((self.matrix.column(i).sum() - 1.0).abs());
        }
        worst
    }
}

/// Builds at most `d - 1` T-transforms carrying `y↓` onto `x↓`. Refuses
/// with the violating prefix when `x ⊀ y`.
pub fn construct_bistochastic(x: &ProbabilityVector, y: &ProbabilityVector) -> Result<TransferChain> {
    let verdict = compare(x, y);
    if !verdict.is_majorized() {
        let v = verdict.first_violation.unwrap_or(verdict.max_gap);
        return Err(Error::NotMajorized { prefix: v.prefix, gap: v.gap });
    }
    let (target, mut cur) = padded_sorted(x.as_slice(), y.as_slice());
    let n = target.len();
    let mut matrix = DMatrix::<f64>::identity(n, n);
    let mut steps = Vec::new();
    const EQ: f64 = 1e-15;

    while steps.len() < n {
        let Some(j) = (0..n).rev().find(|&i| cur[i] > target[i] + EQ) else { break };
        let Some(k) = (j + 1..n).find(|&i| cur[i] < target[i] - EQ) else { break };
        let down = cur[j] - target[j];
        let up = target[k] - cur[k];
        let delta = down.min(up);
        let lambda = 1.0 - delta / (cur[j] - cur[k]);
        if down <= up {
            cur[k] += down;
            cur[j] = target[j];
        } else {
            cur[j] -= up;
            cur[k] = target[k];
        }
        // Q <- T Q, where T mixes rows j and k
        let rj = matrix.row(j).clone_owned();
        let rk = matrix.row(k).clone_owned();
        matrix.set_row(j, &(&rj * lambda + &rk * (1.0 - lambda)));
        matrix.set_row(k, &(&rk * lambda + &rj * (1.0 - lambda)));
        steps.push(TransferStep { lambda, i: j, j: k });
    }
    Ok(TransferChain { steps, matrix })
}

/// Nonnegative Schur-concave uncertainty measures, in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "alpha", rename_all = "kebab-case")]
pub enum SchurMeasure {
    Shannon,
    Renyi(f64),
    Tsallis(f64),
}

impl SchurMeasure {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SchurMeasure::Shannon => Ok(()),
            SchurMeasure::Renyi(a) | SchurMeasure::Tsallis(a) => {
                if a.is_nan() || a <= 0.0 || a == 1.0 || !a.is_finite() {
                    Err(Error::InvalidParameter(format!("entropy order must be positive and not 1, got {a}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            SchurMeasure::Shannon => "shannon".into(),
            SchurMeasure::Renyi(a) => format!("renyi:{a}"),
            SchurMeasure::Tsallis(a) => format!("tsallis:{a}"),
        }
    }
}

/// Evaluates the measure with the convention `0 ln 0 = 0`.
pub fn schur_measure(measure: SchurMeasure, x: &ProbabilityVector) -> Result<f64> {
    measure.validate()?;
    let p = x.as_slice();
    Ok(match measure {
        SchurMeasure::Shannon => -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>(),
        SchurMeasure::Renyi(a) => {
            let s: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| v.powf(a)).sum();
            s.ln() / (1.0 - a)
        }
        SchurMeasure::Tsallis(a) => {
            let s: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| v.powf(a)).sum();
            (1.0 - s) / (a - 1.0)
        }
    })
}

/// Convex generators for `D_f(x‖y) = Σ x_i f(y_i / x_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FDivergence {
    /// `f(t) = 1 - sqrt(t)`
    HellingerGen,
    /// `f(t) = -ln t`
    Kl,
    /// `f(t) = (t - 1)^2`
    Chi2,
}

impl FDivergence {
    pub const ALL: [FDivergence; 3] = [FDivergence::HellingerGen, FDivergence::Kl, FDivergence::Chi2];

    pub fn generator(&self, t: f64) -> f64 {
        match self {
            FDivergence::HellingerGen => 1.0 - t.sqrt(),
            FDivergence::Kl => -t.ln(),
            FDivergence::Chi2 => (t - 1.0) * (t - 1.0),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FDivergence::HellingerGen => "hellinger",
            FDivergence::Kl => "kl",
            FDivergence::Chi2 => "chi2",
        }
    }

    /// `x f(y / x)` extended to `x = 0` by its limit (the perspective).
    fn term(&self, x: f64, y: f64) -> f64 {
        match self {
            FDivergence::HellingerGen => x - (x * y).sqrt(),
            FDivergence::Kl => {
                if x == 0.0 {
                    0.0
                } else if y == 0.0 {
                    f64::INFINITY
                } else {
                    x * (x / y).ln()
                }
            }
            FDivergence::Chi2 => {
                if x == 0.0 {
                    if y == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (y - x) * (y - x) / x
                }
            }
        }
    }
}

pub(crate) fn f_divergence_slices(f: FDivergence, x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().max(y.len());
    (0..n)
        .map(|i| f.term(x.get(i).copied().unwrap_or(0.0), y.get(i).copied().unwrap_or(0.0)))
        .sum()
}

/// f-relative entropy `Σ x_i f(y_i / x_i)`; shorter vector zero-padded.
pub fn f_divergence(f: FDivergence, x: &ProbabilityVector, y: &ProbabilityVector) -> f64 {
    f_divergence_slices(f, x.as_slice(), y.as_slice())
}

/// Square root of the `1 - sqrt(t)` divergence.
pub fn hellinger_distance(x: &ProbabilityVector, y: &ProbabilityVector) -> f64 {
    let (a, b) = (x.as_slice(), y.as_slice());
    let n = a.len().max(b.len());
    let s: f64 = (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0.0).sqrt() - b.get(i).copied().unwrap_or(0.0).sqrt()).powi(2))
        .sum();
    (0.5 * s).sqrt()
}

/// `½ Σ |x_i - y_i|`.
pub fn variational_distance(x: &ProbabilityVector, y: &ProbabilityVector) -> f64 {
    let (a, b) = (x.as_slice(), y.as_slice());
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
