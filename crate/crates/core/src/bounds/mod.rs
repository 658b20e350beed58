//! State-independent bound vectors `ω` on measurement outcome distributions.
//!
//! For a POVM with `m` outcomes and a class of states, `Ω_k` is the largest
//! total probability any class member can put on `k` outcomes. The bound
//! vector is `ω = (Ω_1, Ω_2 - Ω_1, ..., Ω_m - Ω_{m-1})`, after the `Ω`
//! sequence has been made nondecreasing and replaced by its least concave
//! majorant so that `ω` is sorted descending. Every class member's
//! distribution is then majorized by `ω`.
//!
//! Because the objective `Σ_{α∈I} <ψ|E_α|ψ>` is linear in `ρ`, the maximum
//! over mixtures of a class is attained on its pure members, which is why
//! every routine here only optimizes over (product) pure states.

mod cache;
mod partition;
mod product;
mod sampled;
mod search;
mod seesaw;
mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorization::{increments, lattice_join, least_concave_majorant};
use crate::measurements::{Povm, ProbabilityVector};
use crate::tensor::{HilbertSpec, PureState, C64};

pub use cache::{povm_hash, BoundCache, CacheEntry, CacheKey, TOOL_VERSION};
pub use partition::PartitionSpec;
pub use product::{product_uur_bound, sampled_product_uur_bound};
pub use sampled::sampled_bound;
pub use search::ENUMERATION_LIMIT;
pub use seesaw::{seesaw_bound, seesaw_bound_warm};
pub use spectral::spectral_bound;

/// How a bound was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Closed form supplied by the caller.
    Analytic,
    /// Exact top eigenvalues of outcome-subset sums.
    Spectral,
    /// Alternating block optimization.
    Seesaw,
    /// Maximum over random states; an under-estimate.
    Sampled,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::Spectral => "spectral",
            Method::Seesaw => "seesaw",
            Method::Sampled => "sampled",
        }
    }
}

/// The family of states a bound applies to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeparabilityClass {
    /// All states.
    Unconstrained,
    /// Mixtures of pure states that factor across this partition.
    Partition { partition: PartitionSpec },
    /// Mixtures of pure states that factor into `k` blocks, any grouping.
    KSeparable { k: usize, parties: usize },
    /// Mixtures drawn from any of the listed partition classes.
    Union { partitions: Vec<PartitionSpec> },
}

impl SeparabilityClass {
    pub fn label(&self) -> String {
        match self {
            SeparabilityClass::Unconstrained => "all".into(),
            SeparabilityClass::Partition { partition } => partition.label(),
            SeparabilityClass::KSeparable { k, .. } => format!("{k}-separable"),
            SeparabilityClass::Union { partitions } => {
                partitions.iter().map(|p| p.label()).collect::<Vec<_>>().join("+")
            }
        }
    }

    /// Collapses a union covering every `k`-block partition into `KSeparable`.
    pub(crate) fn normalized(self) -> Self {
        if let SeparabilityClass::Union { partitions } = &self {
            if let Some(first) = partitions.first() {
                let (n, k) = (first.parties(), first.k());
                if partitions.iter().all(|p| p.k() == k) {
                    let mut all = PartitionSpec::all_with_blocks(n, k);
                    let mut have = partitions.clone();
                    all.sort();
                    have.sort();
                    have.dedup();
                    if all == have {
                        return SeparabilityClass::KSeparable { k, parties: n };
                    }
                }
            }
        }
        self
    }
}

/// A pure state that factors across the blocks of a partition.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    pub blocks: Vec<(Vec<usize>, PureState)>,
}

impl ProductState {
    /// Haar-random state on each block.
    pub fn random<R: rand::Rng + ?Sized>(spec: &HilbertSpec, partition: &PartitionSpec, rng: &mut R) -> Result<Self> {
        let blocks = partition
            .blocks()
            .iter()
            .map(|b| Ok((b.clone(), PureState::haar_random(&spec.restrict(b)?, rng))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { blocks })
    }

    /// The full state vector, with party order restored.
    pub fn to_pure(&self, spec: &HilbertSpec) -> PureState {
        let dims = spec.dims();
        let n = spec.total_dim();
        let v = nalgebra::DVector::from_fn(n, |idx, _| {
            let digits = spec.digits(idx);
            let mut amp = C64::new(1.0, 0.0);
            for (parties, psi) in &self.blocks {
                let mut local = 0;
                for &p in parties {
                    local = local * dims[p] + digits[p];
                }
                amp *= psi.amplitudes()[local];
            }
            amp
        });
        PureState::normalized(spec.clone(), v).expect("product of unit vectors is a unit vector")
    }
}

/// A bound vector together with how it was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub omega: ProbabilityVector,
    /// `Ω_1..Ω_m` as maximized, made nondecreasing, last entry exactly 1.
    pub prefix_maxima: Vec<f64>,
    pub partition: Option<PartitionSpec>,
    pub class: SeparabilityClass,
    pub method: Method,
    pub restarts: usize,
    /// Whether every outcome subset was examined for every prefix size.
    pub exhaustive: bool,
    pub converged: bool,
    /// Maximizing outcome subset for each prefix size.
    pub best_subsets: Option<Vec<Vec<usize>>>,
    /// A state attaining (or approaching) each `Ω_k`.
    #[serde(skip)]
    pub best_states: Option<Vec<ProductState>>,
}

/// Knobs shared by the optimizing bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { restarts: 32, tol: 1e-10, max_iters: 500, seed: 0 }
    }
}

impl BoundOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidParameter(format!("tolerance {} must be nonnegative", self.tol)));
        }
        Ok(())
    }
}

/// Repairs a raw `Ω` sequence and returns it with the matching `ω`.
pub(crate) fn assemble_omega(raw: &[f64]) -> (Vec<f64>, ProbabilityVector) {
    let m = raw.len();
    let mut prefix = Vec::with_capacity(m);
    let mut running = 0.0f64;
    for &v in raw {
        running = running.max(v.clamp(0.0, 1.0));
        prefix.push(running);
    }
    if let Some(last) = prefix.last_mut() {
        *last = 1.0;
    }
    let mut curve = Vec::with_capacity(m + 1);
    curve.push(0.0);
    curve.extend_from_slice(&prefix);
    let hull = least_concave_majorant(&curve);
    let inc: Vec<f64> = increments(&hull).into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = inc.iter().sum();
    let omega = ProbabilityVector::new(inc.into_iter().map(|v| v / total).collect())
        .expect("increments of a normalized concave curve");
    (prefix, omega)
}

impl BoundResult {
    /// Wraps a known bound vector. `omega` is sorted descending; the prefix
    /// maxima are its cumulative sums and witness subsets default to the
    /// first `k` outcomes.
    pub fn analytic(omega: ProbabilityVector, class: SeparabilityClass) -> BoundResult {
        let sorted = omega.sorted_desc();
        let mut acc = 0.0;
        let raw: Vec<f64> = sorted
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        let (prefix_maxima, omega) = assemble_omega(&raw);
        let partition = match &class {
            SeparabilityClass::Partition { partition } => Some(partition.clone()),
            _ => None,
        };
        BoundResult {
            omega,
            prefix_maxima,
            partition,
            class,
            method: Method::Analytic,
            restarts: 0,
            exhaustive: true,
            converged: true,
            best_subsets: None,
            best_states: None,
        }
    }

    /// `Ω_k` for a 1-based prefix size.
    pub fn omega_k(&self, k: usize) -> f64 {
        self.prefix_maxima[k - 1]
    }

    /// Whether `Ω_k` is a certified upper bound rather than an estimate.
    pub fn is_heuristic(&self) -> bool {
        self.method == Method::Sampled
    }
}

/// Join of several bounds: pointwise-maximal prefix maxima, `ω` the lattice
/// join of the members' vectors.
pub(crate) fn join_results(members: &[BoundResult], class: SeparabilityClass) -> BoundResult {
    let first = &members[0];
    let m = first.prefix_maxima.len();
    let mut raw = vec![0.0f64; m];
    let mut subsets = first.best_subsets.clone();
    let mut states = first.best_states.clone();
    for k in 0..m {
        let mut best = 0usize;
        for (i, b) in members.iter().enumerate() {
            if b.prefix_maxima[k] > members[best].prefix_maxima[k] {
                best = i;
            }
        }
        raw[k] = members[best].prefix_maxima[k];
        if let (Some(s), Some(src)) = (subsets.as_mut(), members[best].best_subsets.as_ref()) {
            s[k] = src[k].clone();
        }
        if let (Some(s), Some(src)) = (states.as_mut(), members[best].best_states.as_ref()) {
            s[k] = src[k].clone();
        }
    }
    let (prefix_maxima, _) = assemble_omega(&raw);
    let omega = members[1..].iter().fold(first.omega.clone(), |acc, b| lattice_join(&acc, &b.omega));
    BoundResult {
        omega,
        prefix_maxima,
        partition: None,
        class: class.normalized(),
        method: members.iter().map(|b| b.method).max_by_key(|m| *m as u8).unwrap_or(Method::Seesaw),
        restarts: members.iter().map(|b| b.restarts).max().unwrap_or(0),
        exhaustive: members.iter().all(|b| b.exhaustive),
        converged: members.iter().all(|b| b.converged),
        best_subsets: subsets,
        best_states: states,
    }
}

/// Bound for k-separable states together with its per-partition members.
#[derive(Clone, Debug, PartialEq)]
pub struct KSeparableBound {
    pub omega_k: BoundResult,
    pub family: Vec<BoundResult>,
    pub dims_equal: bool,
}

/// `ω_k` as the lattice join of the see-saw bounds of every partition into
/// exactly `k` blocks.
pub fn kseparable_bound(povm: &Povm, k: usize, opts: &BoundOptions) -> Result<KSeparableBound> {
    let n = povm.spec().parties();
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in 2..={n}, got {k}")));
    }
    let partitions = PartitionSpec::all_with_blocks(n, k);
    let family = partitions
        .iter()
        .map(|p| seesaw_bound(povm, p, opts))
        .collect::<Result<Vec<_>>>()?;
    let omega_k = join_results(&family, SeparabilityClass::KSeparable { k, parties: n });
    Ok(KSeparableBound { omega_k, family, dims_equal: povm.spec().all_dims_equal() })
}

/// Tripartite bounds `ω_23 = ω_{AB,C} ∨ ω_{AC,B}` and `ω_123 = ω_23 ∨ ω_{BC,A}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripartiteLattice {
    pub ab_c: BoundResult,
    pub ac_b: BoundResult,
    pub bc_a: BoundResult,
    pub omega_23: BoundResult,
    pub omega_123: BoundResult,
}

pub fn lattice_bound_123(povm: &Povm, opts: &BoundOptions) -> Result<TripartiteLattice> {
    if povm.spec().parties() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "tripartite lattice needs 3 parties, POVM has {}",
            povm.spec().parties()
        )));
    }
    let cut = |s: &str| -> Result<BoundResult> { seesaw_bound(povm, &PartitionSpec::parse(s, 3)?, opts) };
    let ab_c = cut("AB|C")?;
    let ac_b = cut("AC|B")?;
    let bc_a = cut("A|BC")?;
    let omega_23 = join_results(
        &[ab_c.clone(), ac_b.clone()],
        SeparabilityClass::Union {
            partitions: vec![ab_c.partition.clone().unwrap(), ac_b.partition.clone().unwrap()],
        },
    );
    let omega_123 = join_results(
        &[ab_c.clone(), ac_b.clone(), bc_a.clone()],
        SeparabilityClass::Union {
            partitions: vec![
                ab_c.partition.clone().unwrap(),
                ac_b.partition.clone().unwrap(),
                bc_a.partition.clone().unwrap(),
            ],
        },
    );
    Ok(TripartiteLattice { ab_c, ac_b, bc_a, omega_23, omega_123 })
}
