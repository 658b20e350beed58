//! Bounds on the joint distribution `p¹(ρ) ⊗ p²(ρ) ⊗ ...` of several
//! measurements applied to copies of the same state.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::search::{search_subsets, Candidate};
use super::{assemble_omega, BoundOptions, BoundResult, Method, PartitionSpec, ProductState, SeparabilityClass};
use crate::error::{Error, Result};
use crate::measurements::Povm;
use crate::seed::derive_seed;
use crate::tensor::{top_eigpair, HermitianOperator, PureState, C64};

fn check_povms(povms: &[Povm]) -> Result<()> {
    if povms.len() < 2 {
        return Err(Error::InvalidParameter("need at least two POVMs".into()));
    }
    let spec = povms[0].spec();
    if povms.iter().any(|p| p.spec() != spec) {
        return Err(Error::DimensionMismatch("all POVMs must act on the same space".into()));
    }
    Ok(())
}

/// Per-POVM outcome indices of a flat product outcome, first POVM most
/// significant.
fn unflatten(mut idx: usize, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (slot, &s) in out.iter_mut().zip(sizes).rev() {
        *slot = idx % s;
        idx /= s;
    }
    out
}

struct Objective<'a> {
    povms: &'a [Povm],
    tuples: Vec<Vec<usize>>,
}

impl Objective<'_> {
    fn probs(&self, psi: &PureState) -> Vec<Vec<f64>> {
        self.povms.iter().map(|p| p.probabilities_pure(psi)).collect()
    }

    fn value(&self, probs: &[Vec<f64>]) -> f64 {
        self.tuples
            .iter()
            .map(|t| t.iter().enumerate().map(|(l, &o)| probs[l][o]).product::<f64>())
            .sum()
    }

    /// Hermitian operator `G` with `∂f/∂<ψ| = G|ψ>`: every factor in turn
    /// is replaced by its POVM element, the others by their probabilities.
    fn gradient(&self, probs: &[Vec<f64>]) -> HermitianOperator {
        let spec = self.povms[0].spec();
        let n = spec.total_dim();
        let mut g = DMatrix::<C64>::zeros(n, n);
        for t in &self.tuples {
            for (l, &o) in t.iter().enumerate() {
                let w: f64 = t
                    .iter()
                    .enumerate()
                    .filter(|(l2, _)| *l2 != l)
                    .map(|(l2, &o2)| probs[l2][o2])
                    .product();
                if w != 0.0 {
                    g += self.povms[l].elements()[o].matrix() * C64::new(w, 0.0);
                }
            }
        }
        HermitianOperator::from_hermitian(spec.clone(), g)
    }

    fn ascend(&self, mut psi: PureState, opts: &BoundOptions) -> (f64, PureState, bool) {
        let mut probs = self.probs(&psi);
        let mut value = self.value(&probs);
        for _ in 0..opts.max_iters {
            let g = self.gradient(&probs);
            let (_, top) = top_eigpair(&g);
            let top_probs = self.probs(&top);
            let top_value = self.value(&top_probs);
            let (next, next_probs, next_value) = if top_value > value {
                (top, top_probs, top_value)
            } else {
                // projected gradient step with backtracking
                let grad = g.matrix() * psi.amplitudes();
                let mut step = 1.0;
                let mut found = None;
                while step > 1e-12 {
                    let cand = psi.amplitudes() + &grad * C64::new(step, 0.0);
                    if let Ok(c) = PureState::normalized(psi.spec().clone(), cand) {
                        let cp = self.probs(&c);
                        let cv = self.value(&cp);
                        if cv > value {
                            found = Some((c, cp, cv));
                            break;
                        }
                    }
                    step *= 0.5;
                }
                match found {
                    Some(f) => f,
                    None => return (value, psi, true),
                }
            };
            let gain = next_value - value;
            psi = next;
            probs = next_probs;
            value = next_value;
            if gain < opts.tol {
                return (value, psi, true);
            }
        }
        (value, psi, false)
    }
}

/// Bound `ω` with `p¹(ρ) ⊗ ... ⊗ pᴸ(ρ) ≺ ω` for every state `ρ`, the
/// product outcomes ordered lexicographically.
pub fn product_uur_bound(povms: &[Povm], opts: &BoundOptions) -> Result<BoundResult> {
    check_povms(povms)?;
    opts.validate()?;
    let spec = povms[0].spec().clone();
    let sizes: Vec<usize> = povms.iter().map(|p| p.len()).collect();
    let total: usize = sizes.iter().product();
    let all: Vec<usize> = (0..spec.parties()).collect();

    let eval = |_k: usize, subset: &[usize]| {
        let obj = Objective { povms, tuples: subset.iter().map(|&i| unflatten(i, &sizes)).collect() };
        let seed = derive_seed(opts.seed, &subset.iter().map(|&i| i as u64).collect::<Vec<_>>());
        let mut best: Option<(f64, PureState, bool)> = None;
        for r in 0..opts.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[r as u64]));
            let start = PureState::haar_random(&spec, &mut rng);
            let cand = obj.ascend(start, opts);
            if best.as_ref().is_none_or(|b| cand.0 > b.0) {
                best = Some(cand);
            }
        }
        let (value, psi, converged) = best.expect("restarts >= 1");
        Candidate { value, state: Some(ProductState { blocks: vec![(all.clone(), psi)] }), converged }
    };
    let out = search_subsets(total, eval, &[]);
    let (prefix_maxima, omega) = assemble_omega(&out.raw);
    Ok(BoundResult {
        omega,
        prefix_maxima,
        partition: Some(PartitionSpec::single_block(spec.parties())),
        class: SeparabilityClass::Unconstrained,
        method: Method::Seesaw,
        restarts: opts.restarts,
        exhaustive: out.exhaustive,
        converged: out.converged,
        best_subsets: Some(out.subsets),
        best_states: out.states.into_iter().collect(),
    })
}

/// Sampling oracle for [`product_uur_bound`] over Haar-random pure states.
pub fn sampled_product_uur_bound(povms: &[Povm], samples: usize, seed: u64) -> Result<BoundResult> {
    check_povms(povms)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    let spec = povms[0].spec().clone();
    let total: usize = povms.iter().map(|p| p.len()).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = vec![f64::NEG_INFINITY; total];
    for _ in 0..samples {
        let psi = PureState::haar_random(&spec, &mut rng);
        let mut joint = vec![1.0];
        for p in povms {
            let probs = p.probabilities_pure(&psi);
            joint = joint.iter().flat_map(|a| probs.iter().map(move |b| a * b)).collect();
        }
        joint.sort_by(|a, b| b.total_cmp(a));
        let mut acc = 0.0;
        for (k, v) in joint.iter().enumerate() {
            acc += v;
            best[k] = best[k].max(acc);
        }
    }
    let (prefix_maxima, omega) = assemble_omega(&best);
    Ok(BoundResult {
        omega,
        prefix_maxima,
        partition: Some(PartitionSpec::single_block(spec.parties())),
        class: SeparabilityClass::Unconstrained,
        method: Method::Sampled,
        restarts: samples,
        exhaustive: false,
        converged: true,
        best_subsets: None,
        best_states: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorization::compare;
    use crate::measurements::{computational_basis, measure, tensor_dist};
    use crate::tensor::{pure_to_density, DensityMatrix, HilbertSpec};

    fn hadamard_basis() -> Povm {
        let spec = HilbertSpec::single(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(spec.clone(), nalgebra::DVector::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)])).unwrap();
        let minus = PureState::new(spec, nalgebra::DVector::from_vec(vec![C64::new(s, 0.0), C64::new(-s, 0.0)])).unwrap();
        Povm::new(vec![HermitianOperator::projector(&plus), HermitianOperator::projector(&minus)], None).unwrap()
    }

    #[test]
    fn identical_bases_share_an_eigenstate() {
        let comp = computational_basis(&HilbertSpec::single(3).unwrap());
        let b = product_uur_bound(&[comp.clone(), comp], &BoundOptions { restarts: 4, ..Default::default() }).unwrap();
        assert!((b.omega.as_slice()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mutually_unbiased_qubit_bases_match_sampling() {
        let comp = computational_basis(&HilbertSpec::single(2).unwrap());
        let had = hadamard_basis();
        let povms = [comp, had];
        let b = product_uur_bound(&povms, &BoundOptions { restarts: 8, ..Default::default() }).unwrap();
        let s = sampled_product_uur_bound(&povms, 100_000, 5).unwrap();
        // closed form for the top entry: ((1 + 1/sqrt 2) / 2)^2
        let c = (1.0 + std::f64::consts::FRAC_1_SQRT_2) / 2.0;
        assert!((b.omega_k(1) - c * c).abs() < 1e-8);
        for k in 1..=4 {
            assert!((b.omega_k(k) - s.omega_k(k)).abs() < 1e-3, "k={k}");
            assert!(b.omega_k(k) >= s.omega_k(k) - 1e-9);
        }
    }

    #[test]
    fn random_states_obey_the_relation() {
        let comp = computational_basis(&HilbertSpec::single(2).unwrap());
        let povms = [comp, hadamard_basis()];
        let b = product_uur_bound(&povms, &BoundOptions { restarts: 8, ..Default::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = HilbertSpec::single(2).unwrap();
        for i in 0..100 {
            let a = pure_to_density(&PureState::haar_random(&spec, &mut rng)).unwrap();
            let c = pure_to_density(&PureState::haar_random(&spec, &mut rng)).unwrap();
            let w = (i as f64) / 100.0;
            let rho = DensityMatrix::mixture(&[(w, &a), (1.0 - w, &c)]).unwrap();
            let joint = tensor_dist(&[measure(&rho, &povms[0]).unwrap(), measure(&rho, &povms[1]).unwrap()]).unwrap();
            assert!(compare(&joint, &b.omega).is_majorized());
        }
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = computational_basis(&HilbertSpec::single(2).unwrap());
        let b = computational_basis(&HilbertSpec::single(3).unwrap());
        assert!(product_uur_bound(&[a.clone(), b], &BoundOptions::default()).is_err());
        assert!(product_uur_bound(&[a], &BoundOptions::default()).is_err());
    }
}
