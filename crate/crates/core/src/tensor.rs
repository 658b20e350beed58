//! Dense complex linear algebra over small multipartite Hilbert spaces.
//!
//! Basis indices are row-major over the parties: party 0 is the most
//! significant digit, so `kron(a, b)` places `a`'s index in the high digits.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Entrywise asymmetry absorbed by symmetrization at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation of a density matrix trace from one.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed deviation of a pure state norm from one.
pub const NORM_TOL: f64 = 1e-12;

/// Local dimensions of an n-partite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct HilbertSpec {
    dims: Vec<usize>,
}

impl HilbertSpec {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::DimensionMismatch("a Hilbert space needs at least one party".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::DimensionMismatch(format!("local dimension {d} is below 2")));
        }
        Ok(Self { dims })
    }

    /// A single party of dimension `d`.
    pub fn single(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &HilbertSpec) -> HilbertSpec {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        HilbertSpec { dims }
    }

    /// The spec of the listed parties, in the listed order.
    pub fn restrict(&self, parties: &[usize]) -> Result<HilbertSpec> {
        let dims = parties
            .iter()
            .map(|&p| {
                self.dims
                    .get(p)
                    .copied()
                    .ok_or_else(|| Error::DimensionMismatch(format!("party {p} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        HilbertSpec::new(dims)
    }

    /// Per-party digits of a flat basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn all_dims_equal(&self) -> bool {
        self.dims.windows(2).all(|w| w[0] == w[1])
    }
}

impl TryFrom<Vec<usize>> for HilbertSpec {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        HilbertSpec::new(dims)
    }
}

impl From<HilbertSpec> for Vec<usize> {
    fn from(spec: HilbertSpec) -> Self {
        spec.dims
    }
}

fn max_asymmetry(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn symmetrize(m: &DMatrix<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Dense Hermitian operator on a multipartite space.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    spec: HilbertSpec,
    matrix: DMatrix<C64>,
}

impl HermitianOperator {
    /// Validates shape and Hermiticity; drift below [`HERMITIAN_TOL`] is
    /// symmetrized away, anything larger is rejected.
    pub fn new(spec: HilbertSpec, matrix: DMatrix<C64>) -> Result<Self> {
        let n = spec.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but the space has dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asym = max_asymmetry(&matrix);
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self { spec, matrix: symmetrize(&matrix) })
    }

    /// For results of exact Hermitian-preserving arithmetic.
    pub(crate) fn from_hermitian(spec: HilbertSpec, matrix: DMatrix<C64>) -> Self {
        debug_assert_eq!(matrix.nrows(), spec.total_dim());
        Self { spec, matrix: symmetrize(&matrix) }
    }

    pub fn identity(spec: &HilbertSpec) -> Self {
        let n = spec.total_dim();
        Self { spec: spec.clone(), matrix: DMatrix::identity(n, n) }
    }

    pub fn zeros(spec: &HilbertSpec) -> Self {
        let n = spec.total_dim();
        Self { spec: spec.clone(), matrix: DMatrix::zeros(n, n) }
    }

    /// Real diagonal operator.
    pub fn diagonal(spec: &HilbertSpec, diag: &[f64]) -> Result<Self> {
        let n = spec.total_dim();
        if diag.len() != n {
            return Err(Error::DimensionMismatch(format!("{} diagonal entries for dimension {n}", diag.len())));
        }
        let mut matrix = DMatrix::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            matrix[(i, i)] = C64::new(v, 0.0);
        }
        Ok(Self { spec: spec.clone(), matrix })
    }

    /// `|psi><psi|` without the normalization check of [`pure_to_density`].
    pub fn projector(psi: &PureState) -> Self {
        let v = &psi.amplitudes;
        let matrix = v * v.adjoint();
        Self::from_hermitian(psi.spec.clone(), matrix)
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    fn check_same_spec(&self, other: &HermitianOperator) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::DimensionMismatch(format!(
                "operator spaces {:?} and {:?} differ",
                self.spec.dims(),
                other.spec.dims()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        self.check_same_spec(other)?;
        Ok(Self { spec: self.spec.clone(), matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        self.check_same_spec(other)?;
        Ok(Self { spec: self.spec.clone(), matrix: &self.matrix - &other.matrix })
    }

    pub fn scale(&self, s: f64) -> HermitianOperator {
        Self { spec: self.spec.clone(), matrix: &self.matrix * C64::new(s, 0.0) }
    }

    /// `tr(self * other)`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &HermitianOperator) -> Result<f64> {
        self.check_same_spec(other)?;
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
                acc += (self.matrix[(i, j)] * other.matrix[(i, j)].conj()).re;
            }
        }
        Ok(acc)
    }

    /// `<psi|self|psi>`.
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        if psi.spec != self.spec {
            return Err(Error::DimensionMismatch("state and operator spaces differ".into()));
        }
        Ok(quadratic_form(&self.matrix, &psi.amplitudes))
    }

    /// Eigenvalues ascending with matching eigenvector columns.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let n = self.dim();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn quadratic_form(m: &DMatrix<C64>, v: &DVector<C64>) -> f64 {
    let n = v.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let vi = v[i].conj();
        if vi == C64::new(0.0, 0.0) {
            continue;
        }
        let mut row = C64::new(0.0, 0.0);
        for j in 0..n {
            row += m[(i, j)] * v[j];
        }
        acc += vi * row;
    }
    acc.re
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    spec: HilbertSpec,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(spec: HilbertSpec, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != spec.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                spec.total_dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(Self { spec, amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(spec: HilbertSpec, amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(spec, amplitudes / C64::new(norm, 0.0))
    }

    pub fn basis(spec: &HilbertSpec, index: usize) -> Result<Self> {
        let n = spec.total_dim();
        if index >= n {
            return Err(Error::DimensionMismatch(format!("basis index {index} out of range {n}")));
        }
        let mut v = DVector::zeros(n);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self { spec: spec.clone(), amplitudes: v })
    }

    /// Haar-distributed state from normalized complex Gaussians.
    pub fn haar_random<R: Rng + ?Sized>(spec: &HilbertSpec, rng: &mut R) -> Self {
        let n = spec.total_dim();
        loop {
            let v = DVector::from_fn(n, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            if let Ok(psi) = Self::normalized(spec.clone(), v) {
                return psi;
            }
        }
    }

    pub fn spec(&self) -> &HilbertSpec {
        &self.spec
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn kron(&self, other: &PureState) -> PureState {
        PureState {
            spec: self.spec.concat(&other.spec),
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }
}

/// Density matrix: trace one, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = op.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { op })
    }

    pub fn maximally_mixed(spec: &HilbertSpec) -> Self {
        let n = spec.total_dim() as f64;
        Self { op: HermitianOperator::identity(spec).scale(1.0 / n) }
    }

    /// Convex combination; weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidState("empty mixture".into()))?;
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("mixture weights must be nonnegative and sum to 1 (sum {total})")));
        }
        let mut acc = HermitianOperator::zeros(first.1.spec());
        for (w, rho) in parts {
            acc = acc.add(&rho.op.scale(*w))?;
        }
        Self::new(acc)
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { op: kron(&self.op, &other.op) }
    }

    pub fn spec(&self) -> &HilbertSpec {
        self.op.spec()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }
}

/// Kronecker product; the result's parties are `a`'s followed by `b`'s.
pub fn kron(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator {
        spec: a.spec.concat(&b.spec),
        matrix: a.matrix.kronecker(&b.matrix),
    }
}

/// `|psi><psi|`.
pub fn pure_to_density(psi: &PureState) -> Result<DensityMatrix> {
    let norm = psi.amplitudes.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
    }
    Ok(DensityMatrix { op: HermitianOperator::projector(psi) })
}

/// Sandwiches `op` with single-party pure states on the listed slots,
/// leaving an operator on the remaining parties (in their original order).
pub fn partial_contract(
    op: &HermitianOperator,
    fixed: &std::collections::BTreeMap<usize, PureState>,
) -> Result<HermitianOperator> {
    let blocks: Vec<(Vec<usize>, &PureState)> =
        fixed.iter().map(|(&p, psi)| (vec![p], psi)).collect();
    let refs: Vec<(&[usize], &PureState)> =
        blocks.iter().map(|(b, psi)| (b.as_slice(), *psi)).collect();
    contract_blocks(op, &refs)
}

/// Generalization of [`partial_contract`] where each fixed state may span a
/// group of parties. Each group must be listed in ascending party order and
/// its state must live on those parties' joint space.
pub fn contract_blocks(
    op: &HermitianOperator,
    fixed: &[(&[usize], &PureState)],
) -> Result<HermitianOperator> {
    let spec = op.spec();
    let n = spec.parties();
    let mut owner = vec![None; n];
    for (bi, (parties, psi)) in fixed.iter().enumerate() {
        if parties.is_empty() || parties.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DimensionMismatch("fixed party groups must be nonempty and ascending".into()));
        }
        for &p in parties.iter() {
            if p >= n {
                return Err(Error::DimensionMismatch(format!("party {p} out of range")));
            }
            if owner[p].is_some() {
                return Err(Error::DimensionMismatch(format!("party {p} fixed twice")));
            }
            owner[p] = Some(bi);
        }
        let expected = spec.restrict(parties)?;
        if psi.spec() != &expected {
            return Err(Error::DimensionMismatch(format!(
                "fixed state has dims {:?}, parties need {:?}",
                psi.spec().dims(),
                expected.dims()
            )));
        }
    }
    let remaining: Vec<usize> = (0..n).filter(|&p| owner[p].is_none()).collect();
    if remaining.is_empty() {
        return Err(Error::DimensionMismatch(
            "every party is fixed; use an expectation value instead".into(),
        ));
    }
    let rem_spec = spec.restrict(&remaining)?;
    let dims = spec.dims();

    let total = spec.total_dim();
    let mut rem_index = vec![0usize; total];
    let mut weight = vec![C64::new(1.0, 0.0); total];
    for idx in 0..total {
        let digits = spec.digits(idx);
        let mut r = 0;
        for &p in &remaining {
            r = r * dims[p] + digits[p];
        }
        rem_index[idx] = r;
        let mut w = C64::new(1.0, 0.0);
        for (parties, psi) in fixed {
            let mut local = 0;
            for &p in parties.iter() {
                local = local * dims[p] + digits[p];
            }
            w *= psi.amplitudes[local];
        }
        weight[idx] = w;
    }

    let m = rem_spec.total_dim();
    let mut out = DMatrix::<C64>::zeros(m, m);
    let zero = C64::new(0.0, 0.0);
    for i in 0..total {
        let wi = weight[i].conj();
        if wi == zero {
            continue;
        }
        for j in 0..total {
            let wj = weight[j];
            if wj == zero {
                continue;
            }
            out[(rem_index[i], rem_index[j])] += wi * op.matrix[(i, j)] * wj;
        }
    }
    Ok(HermitianOperator::from_hermitian(rem_spec, out))
}

/// Largest eigenvalue and a unit eigenvector for it. For a degenerate top
/// eigenvalue any vector of the eigenspace may be returned.
pub fn top_eigpair(op: &HermitianOperator) -> (f64, PureState) {
    let (values, vectors) = op.eigh();
    let last = values.len() - 1;
    let v: DVector<C64> = vectors.column(last).into_owned();
    let psi = PureState::normalized(op.spec.clone(), v)
        .expect("eigenvectors from a Hermitian eigensolver are nonzero");
    (values[last], psi)
}
