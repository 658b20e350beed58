//! POVMs, outcome distributions and the reference bases.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{kron, DensityMatrix, HermitianOperator, HilbertSpec, PureState, C64};

/// Probabilities with magnitude below this are set to exactly zero.
pub const PROB_CLAMP: f64 = 1e-12;
/// Allowed deviation of a distribution's total from one.
pub const SUM_TOL: f64 = 1e-10;
/// Tolerance for POVM positivity and completeness.
pub const POVM_TOL: f64 = 1e-10;

/// Finite outcome distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(Error::InvalidDistribution(format!("non-finite entry {p}")));
            }
            if p.abs() < PROB_CLAMP {
                *p = 0.0;
            } else if *p < 0.0 {
                return Err(Error::InvalidDistribution(format!("negative entry {p:e}")));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// `(1, 0, ..., 0)`.
    pub fn point_mass(n: usize) -> Self {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sorted_desc(&self) -> Vec<f64> {
        sorted_desc(&self.0)
    }

    /// Appends zeros up to `len`; never truncates.
    pub fn padded(&self, len: usize) -> ProbabilityVector {
        let mut v = self.0.clone();
        if v.len() < len {
            v.resize(len, 0.0);
        }
        Self(v)
    }

    pub fn permuted(&self, perm: &[usize]) -> ProbabilityVector {
        Self(perm.iter().map(|&i| self.0[i]).collect())
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.0
    }
}

pub(crate) fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Positive operators summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    spec: HilbertSpec,
    elements: Vec<HermitianOperator>,
    labels: Option<Vec<String>>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>, labels: Option<Vec<String>>) -> Result<Self> {
        if elements.len() < 2 {
            return Err(Error::InvalidPovm("a POVM needs at least two elements".into()));
        }
        let spec = elements[0].spec().clone();
        if elements.iter().any(|e| e.spec() != &spec) {
            return Err(Error::InvalidPovm("elements act on different spaces".into()));
        }
        if let Some(l) = &labels {
            if l.len() != elements.len() {
                return Err(Error::InvalidPovm(format!("{} labels for {} elements", l.len(), elements.len())));
            }
        }
        let mut total = HermitianOperator::zeros(&spec);
        for (i, e) in elements.iter().enumerate() {
            let min = e.min_eigenvalue();
            if min < -POVM_TOL {
                return Err(Error::InvalidPovm(format!("element {i} has eigenvalue {min:e}")));
            }
            total = total.add(e)?;
        }
        let dev = total.max_abs_diff(&HermitianOperator::identity(&spec));
        if dev > POVM_TOL {
            return Err(Error::InvalidPovm(format!("elements sum to identity only within {dev:e}")));
        }
        Ok(Self { spec, elements, labels })
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Sum of the listed elements.
    pub fn subset_sum(&self, subset: &[usize]) -> HermitianOperator {
        let n = self.spec.total_dim();
        let mut acc = DMatrix::<C64>::zeros(n, n);
        for &i in subset {
            acc += self.elements[i].matrix();
        }
        HermitianOperator::from_hermitian(self.spec.clone(), acc)
    }

    /// Raw outcome probabilities `<psi|E_j|psi>` without clamping.
    pub fn probabilities_pure(&self, psi: &PureState) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| crate::tensor::quadratic_form(e.matrix(), psi.amplitudes()))
            .collect()
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<Povm> {
        let elements = perm.iter().map(|&i| self.elements[i].clone()).collect();
        let labels = self.labels.as_ref().map(|l| perm.iter().map(|&i| l[i].clone()).collect());
        Povm::new(elements, labels)
    }
}

fn clamp_probability(p: f64) -> f64 {
    if p.abs() < PROB_CLAMP {
        0.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

/// Outcome distribution `tr(rho E_j)`.
pub fn measure(rho: &DensityMatrix, povm: &Povm) -> Result<ProbabilityVector> {
    if rho.spec() != povm.spec() {
        return Err(Error::DimensionMismatch(format!(
            "state on {:?} measured with POVM on {:?}",
            rho.spec().dims(),
            povm.spec().dims()
        )));
    }
    let probs = povm
        .elements
        .iter()
        .map(|e| rho.op().trace_product(e).map(clamp_probability))
        .collect::<Result<Vec<_>>>()?;
    ProbabilityVector::new(probs)
}

/// Distribution of a pure state, clamped like [`measure`].
pub fn measure_pure(psi: &PureState, povm: &Povm) -> Result<ProbabilityVector> {
    if psi.spec() != povm.spec() {
        return Err(Error::DimensionMismatch("state and POVM spaces differ".into()));
    }
    ProbabilityVector::new(povm.probabilities_pure(psi).into_iter().map(clamp_probability).collect())
}

/// Kronecker product of distributions, first factor most significant.
pub fn tensor_dist(ps: &[ProbabilityVector]) -> Result<ProbabilityVector> {
    if ps.len() < 2 {
        return Err(Error::InvalidParameter("tensor_dist needs at least two distributions".into()));
    }
    let mut acc = ps[0].0.clone();
    for p in &ps[1..] {
        acc = acc.iter().flat_map(|a| p.0.iter().map(move |b| a * b)).collect();
    }
    ProbabilityVector::new(acc)
}

/// Projective measurement onto the computational basis of `spec`.
pub fn computational_basis(spec: &HilbertSpec) -> Povm {
    let n = spec.total_dim();
    let elements = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            HermitianOperator::diagonal(spec, &d).expect("diagonal length matches")
        })
        .collect();
    let labels = (0..n)
        .map(|i| spec.digits(i).iter().map(|d| d.to_string()).collect::<Vec<_>>().join(""))
        .collect();
    Povm { spec: spec.clone(), elements, labels: Some(labels) }
}

/// Generalized Bell state with shift `s` and clock `t`:
/// `(1/sqrt d) sum_j w^(t j) |j>|j+s>`, `w = exp(2 pi i / d)`.
pub fn bell_state(d: usize, s: usize, t: usize) -> Result<PureState> {
    let spec = HilbertSpec::new(vec![d, d])?;
    let norm = 1.0 / (d as f64).sqrt();
    let mut v = DVector::<C64>::zeros(d * d);
    for j in 0..d {
        let phase = 2.0 * PI * ((t * j) % d) as f64 / d as f64;
        v[j * d + (j + s) % d] = C64::from_polar(norm, phase);
    }
    PureState::normalized(spec, v)
}

/// Projectors onto the `d^2` generalized Bell states. Outcome `alpha`
/// (1-based) corresponds to `(s, t)` with `alpha = s d + t + 1`, so the
/// first element projects onto `(1/sqrt d) sum_j |jj>`.
pub fn bell_basis(d: usize) -> Result<Povm> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("Bell basis needs d >= 2, got {d}")));
    }
    let mut elements = Vec::with_capacity(d * d);
    let mut labels = Vec::with_capacity(d * d);
    for s in 0..d {
        for t in 0..d {
            elements.push(HermitianOperator::projector(&bell_state(d, s, t)?));
            labels.push(format!("B{}", s * d + t + 1));
        }
    }
    Povm::new(elements, Some(labels))
}

/// All pairwise Kronecker products, `a`'s outcome index most significant.
pub fn product_povm(a: &Povm, b: &Povm) -> Povm {
    let mut elements = Vec::with_capacity(a.len() * b.len());
    let mut labels = Vec::with_capacity(a.len() * b.len());
    for (i, ea) in a.elements.iter().enumerate() {
        for (j, eb) in b.elements.iter().enumerate() {
            elements.push(kron(ea, eb));
            let la = a.labels.as_ref().map_or_else(|| i.to_string(), |l| l[i].clone());
            let lb = b.labels.as_ref().map_or_else(|| j.to_string(), |l| l[j].clone());
            labels.push(format!("{la}.{lb}"));
        }
    }
    Povm { spec: a.spec.concat(&b.spec), elements, labels: Some(labels) }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Random `m`-outcome POVM: `E_i = S^(-1/2) G_i S^(-1/2)` with `G_i` Wishart
/// and `S = sum G_i`.
pub fn random_povm<R: Rng + ?Sized>(spec: &HilbertSpec, m: usize, rng: &mut R) -> Result<Povm> {
    if m < 2 {
        return Err(Error::InvalidParameter("a POVM needs at least two outcomes".into()));
    }
    let n = spec.total_dim();
    let gs: Vec<DMatrix<C64>> = (0..m)
        .map(|_| {
            let a = gaussian_matrix(n, n, rng);
            &a * a.adjoint()
        })
        .collect();
    let mut s = DMatrix::<C64>::zeros(n, n);
    for g in &gs {
        s += g;
    }
    let (vals, vecs) = HermitianOperator::from_hermitian(spec.clone(), s).eigh();
    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        vals.iter().map(|v| C64::new(1.0 / v.sqrt(), 0.0)),
    ));
    let t = &vecs * inv_sqrt * vecs.adjoint();
    let mut elements: Vec<HermitianOperator> = gs
        .iter()
        .map(|g| HermitianOperator::from_hermitian(spec.clone(), &t * g * &t))
        .collect();
    // absorb the residual of the inverse square root into the last element
    let mut head = DMatrix::<C64>::zeros(n, n);
    for e in &elements[..m - 1] {
        head += e.matrix();
    }
    let last = DMatrix::<C64>::identity(n, n) - head;
    elements[m - 1] = HermitianOperator::from_hermitian(spec.clone(), last);
    Povm::new(elements, None)
}

/// Haar-random orthonormal basis of a single party.
pub fn random_basis<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<DVector<C64>> {
    loop {
        let mut basis: Vec<DVector<C64>> = Vec::with_capacity(d);
        let mut ok = true;
        for _ in 0..d {
            let mut v = gaussian_matrix(d, 1, rng).column(0).into_owned();
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
            let norm = v.norm();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            basis.push(v / C64::new(norm, 0.0));
        }
        if ok {
            return basis;
        }
    }
}

/// Projective measurement onto a product of independent Haar-random local
/// bases; every element is a product projector.
pub fn random_product_basis<R: Rng + ?Sized>(spec: &HilbertSpec, rng: &mut R) -> Result<Povm> {
    let mut povm: Option<Povm> = None;
    for &d in spec.dims() {
        let local_spec = HilbertSpec::single(d)?;
        let elements = random_basis(d, rng)
            .into_iter()
            .map(|v| HermitianOperator::projector(&PureState::normalized(local_spec.clone(), v).expect("unit vector")))
            .collect();
        let local = Povm { spec: local_spec, elements, labels: None };
        povm = Some(match povm {
            None => local,
            Some(acc) => product_povm(&acc, &local),
        });
    }
    let povm = povm.expect("spec has at least one party");
    Povm::new(povm.elements, povm.labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::pure_to_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn werner(d: usize, q: f64) -> DensityMatrix {
        let spec = HilbertSpec::new(vec![d, d]).unwrap();
        let b1 = HermitianOperator::projector(&bell_state(d, 0, 0).unwrap());
        let mixed = HermitianOperator::identity(&spec).scale((1.0 - q) / (d * d) as f64);
        DensityMatrix::new(mixed.add(&b1.scale(q)).unwrap()).unwrap()
    }

    fn random_density<R: Rng>(spec: &HilbertSpec, rng: &mut R) -> DensityMatrix {
        let n = spec.total_dim();
        let a = gaussian_matrix(n, n, rng);
        let w = &a * a.adjoint();
        let tr: f64 = w.diagonal().iter().map(|z| z.re).sum();
        DensityMatrix::new(HermitianOperator::from_hermitian(spec.clone(), w / C64::new(tr, 0.0))).unwrap()
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new(vec![]).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.4]).is_err());
        assert!(ProbabilityVector::new(vec![1.1, -0.1]).is_err());
        let p = ProbabilityVector::new(vec![1.0 + 5e-13, -5e-13]).unwrap();
        assert_eq!(p.as_slice()[1], 0.0);
    }

    #[test]
    fn povm_validation() {
        let spec = HilbertSpec::single(2).unwrap();
        let half = HermitianOperator::identity(&spec).scale(0.5);
        assert!(Povm::new(vec![half.clone()], None).is_err());
        assert!(Povm::new(vec![half.clone(), half.scale(0.9)], None).is_err());
        let neg = HermitianOperator::diagonal(&spec, &[1.5, 1.0]).unwrap();
        let comp = HermitianOperator::diagonal(&spec, &[-0.5, 0.0]).unwrap();
        assert!(Povm::new(vec![neg, comp], None).is_err());
        assert!(Povm::new(vec![half.clone(), half], None).is_ok());
    }

    #[test]
    fn maximally_mixed_under_bell_is_uniform() {
        let povm = bell_basis(2).unwrap();
        let rho = DensityMatrix::maximally_mixed(povm.spec());
        let p = measure(&rho, &povm).unwrap();
        for &x in p.as_slice() {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn werner_distribution_matches_closed_form() {
        for d in [2, 3, 4] {
            let povm = bell_basis(d).unwrap();
            for q in [0.0, 0.25, 0.5, 1.0] {
                let p = measure(&werner(d, q), &povm).unwrap();
                let base = (1.0 - q) / (d * d) as f64;
                let base = if base.abs() < PROB_CLAMP { 0.0 } else { base };
                assert!((p.as_slice()[0] - (q + base)).abs() < 1e-12);
                for &x in &p.as_slice()[1..] {
                    assert!((x - base).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn projective_measurement_reads_rotated_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = HilbertSpec::single(3).unwrap();
        let basis = random_basis(3, &mut rng);
        let elements = basis
            .iter()
            .map(|v| HermitianOperator::projector(&PureState::normalized(spec.clone(), v.clone()).unwrap()))
            .collect();
        let povm = Povm::new(elements, None).unwrap();
        let rho = random_density(&spec, &mut rng);
        let p = measure(&rho, &povm).unwrap();
        // oracle: diagonal of U^dagger rho U
        let u = DMatrix::from_columns(&basis);
        let rotated = u.adjoint() * rho.op().matrix() * &u;
        for i in 0..3 {
            assert!((p.as_slice()[i] - rotated[(i, i)].re).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = HilbertSpec::new(vec![2, 2]).unwrap();
        let povm = random_povm(&spec, 5, &mut rng).unwrap();
        for _ in 0..20 {
            let rho = random_density(&spec, &mut rng);
            let p = measure(&rho, &povm).unwrap();
            assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn measurement_is_permutation_covariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = HilbertSpec::single(3).unwrap();
        let povm = random_povm(&spec, 4, &mut rng).unwrap();
        let perm = [2, 0, 3, 1];
        let permuted = povm.permuted(&perm).unwrap();
        let rho = random_density(&spec, &mut rng);
        let p = measure(&rho, &povm).unwrap();
        let q = measure(&rho, &permuted).unwrap();
        assert_eq!(p.permuted(&perm), q);
    }

    #[test]
    fn tensor_dist_examples() {
        let a = ProbabilityVector::new(vec![1.0, 0.0]).unwrap();
        let b = ProbabilityVector::uniform(2);
        assert_eq!(tensor_dist(&[a, b]).unwrap().as_slice(), &[0.5, 0.5, 0.0, 0.0]);
        let u = tensor_dist(&[ProbabilityVector::uniform(3), ProbabilityVector::uniform(4)]).unwrap();
        for &x in u.as_slice() {
            assert!((x - 1.0 / 12.0).abs() < 1e-15);
        }
        assert!(tensor_dist(&[ProbabilityVector::uniform(3)]).is_err());
    }

    #[test]
    fn tensor_dist_is_associative() {
        let x = ProbabilityVector::new(vec![0.2, 0.8]).unwrap();
        let y = ProbabilityVector::new(vec![0.1, 0.3, 0.6]).unwrap();
        let z = ProbabilityVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        let flat = tensor_dist(&[x.clone(), y.clone(), z.clone()]).unwrap();
        let left = tensor_dist(&[tensor_dist(&[x.clone(), y.clone()]).unwrap(), z.clone()]).unwrap();
        let right = tensor_dist(&[x, tensor_dist(&[y, z]).unwrap()]).unwrap();
        assert!((flat.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..18 {
            assert!((flat.as_slice()[i] - left.as_slice()[i]).abs() < 1e-15);
            assert!((flat.as_slice()[i] - right.as_slice()[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn bell_basis_structure() {
        let b2 = bell_basis(2).unwrap();
        assert_eq!(b2.len(), 4);
        let s = 0.5;
        let first = b2.elements()[0].matrix();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((first[(i, j)] - C64::new(s, 0.0)).norm() < 1e-15);
        }
        for d in 2..=4 {
            let b = bell_basis(d).unwrap();
            let total = b.subset_sum(&(0..d * d).collect::<Vec<_>>());
            assert!(total.max_abs_diff(&HermitianOperator::identity(b.spec())) < 1e-12);
            for e in b.elements() {
                assert!((e.trace() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bell_states_orthonormal_d3() {
        let states: Vec<PureState> =
            (0..3).flat_map(|s| (0..3).map(move |t| bell_state(3, s, t).unwrap())).collect();
        for (a, sa) in states.iter().enumerate() {
            for (b, sb) in states.iter().enumerate() {
                let ip = sa.inner(sb).norm();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-12, "<{a}|{b}> = {ip}");
            }
        }
    }

    #[test]
    fn product_povm_layout_and_factorization() {
        let bell = bell_basis(2).unwrap();
        let comp = computational_basis(&HilbertSpec::single(2).unwrap());
        let p = product_povm(&bell, &comp);
        assert_eq!(p.len(), 8);
        assert_eq!(p.spec().dims(), &[2, 2, 2]);
        let total = p.subset_sum(&(0..8).collect::<Vec<_>>());
        assert!(total.max_abs_diff(&HermitianOperator::identity(p.spec())) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sa = HilbertSpec::single(2).unwrap();
        let sb = HilbertSpec::single(3).unwrap();
        let a = random_povm(&sa, 3, &mut rng).unwrap();
        let b = random_povm(&sb, 4, &mut rng).unwrap();
        let ab = product_povm(&a, &b);
        for _ in 0..5 {
            let rho = random_density(&sa, &mut rng);
            let sigma = random_density(&sb, &mut rng);
            let joint = measure(&rho.kron(&sigma), &ab).unwrap();
            let want = tensor_dist(&[measure(&rho, &a).unwrap(), measure(&sigma, &b).unwrap()]).unwrap();
            for (x, y) in joint.as_slice().iter().zip(want.as_slice()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_product_basis_is_projective_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let spec = HilbertSpec::new(vec![2, 2, 2]).unwrap();
        let povm = random_product_basis(&spec, &mut rng).unwrap();
        assert_eq!(povm.len(), 8);
        for e in povm.elements() {
            let (vals, _) = e.eigh();
            assert!((vals[7] - 1.0).abs() < 1e-10);
            assert!(vals[6].abs() < 1e-10);
        }
        let psi = PureState::haar_random(&spec, &mut rng);
        let p = measure(&pure_to_density(&psi).unwrap(), &povm).unwrap();
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}
