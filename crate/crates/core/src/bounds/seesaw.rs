//! Alternating maximization over product states.
//!
//! With every block but one held fixed, `<ψ|A|ψ>` restricted to the free
//! block is the quadratic form of the partially contracted operator, so the
//! optimal free factor is its top eigenvector. Sweeping the blocks in a fixed
//! order never decreases the objective; a fixed point satisfies the
//! stationarity eigenvalue equations for every block at once.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::search::{search_subsets, Candidate};
use super::{assemble_omega, BoundOptions, BoundResult, Method, PartitionSpec, ProductState, SeparabilityClass};
use crate::error::{Error, Result};
use crate::measurements::Povm;
use crate::seed::derive_seed;
use crate::tensor::{contract_blocks, top_eigpair, HermitianOperator, HilbertSpec};

/// Best value of `<ψ|op|ψ>` over states factoring across `partition`.
pub(crate) fn maximize_product(
    op: &HermitianOperator,
    partition: &PartitionSpec,
    opts: &BoundOptions,
    seed: u64,
    warm: Option<&ProductState>,
) -> Candidate {
    let spec = op.spec();
    if partition.k() == 1 {
        let (value, psi) = top_eigpair(op);
        let state = ProductState { blocks: vec![(partition.blocks()[0].clone(), psi)] };
        return Candidate { value, state: Some(state), converged: true };
    }

    let mut best: Option<Candidate> = None;
    let mut starts: Vec<Option<ProductState>> = Vec::with_capacity(opts.restarts + 1);
    if let Some(w) = warm {
        starts.push(Some(w.clone()));
    }
    starts.extend((0..opts.restarts).map(|_| None));

    for (r, start) in starts.into_iter().enumerate() {
        let state = match start {
            Some(s) => s,
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[r as u64]));
                ProductState::random(spec, partition, &mut rng).expect("partition matches spec")
            }
        };
        let cand = ascend(op, spec, state, opts);
        if best.as_ref().is_none_or(|b| cand.value > b.value) {
            best = Some(cand);
        }
    }
    best.expect("at least one restart")
}

fn ascend(op: &HermitianOperator, spec: &HilbertSpec, mut state: ProductState, opts: &BoundOptions) -> Candidate {
    let mut value = op.expectation(&state.to_pure(spec)).expect("state lives on the operator space");
    let nblocks = state.blocks.len();
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let mut sweep_value = value;
        for b in 0..nblocks {
            let fixed: Vec<(&[usize], &crate::tensor::PureState)> = state
                .blocks
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != b)
                .map(|(_, (parties, psi))| (parties.as_slice(), psi))
                .collect();
            let reduced = contract_blocks(op, &fixed).expect("blocks partition the parties");
            let (lam, psi) = top_eigpair(&reduced);
            state.blocks[b].1 = psi;
            sweep_value = lam;
        }
        let gain = sweep_value - value;
        value = value.max(sweep_value);
        if gain < opts.tol {
            converged = true;
            break;
        }
    }
    Candidate { value, state: Some(state), converged }
}

/// Bound for mixtures of states factoring across `partition`.
pub fn seesaw_bound(povm: &Povm, partition: &PartitionSpec, opts: &BoundOptions) -> Result<BoundResult> {
    seesaw_bound_warm(povm, partition, opts, None)
}

/// Like [`seesaw_bound`], additionally starting one ascent per prefix size
/// from the best state recorded in `warm` (typically a sampled bound for the
/// same partition). The result then dominates `warm` prefix by prefix.
pub fn seesaw_bound_warm(
    povm: &Povm,
    partition: &PartitionSpec,
    opts: &BoundOptions,
    warm: Option<&BoundResult>,
) -> Result<BoundResult> {
    opts.validate()?;
    let spec = povm.spec();
    if partition.parties() != spec.parties() {
        return Err(Error::DimensionMismatch(format!(
            "partition {} covers {} parties, POVM has {}",
            partition,
            partition.parties(),
            spec.parties()
        )));
    }
    let m = povm.len();
    let warm_pairs: Vec<Option<(Vec<usize>, ProductState)>> = (0..m)
        .map(|k| {
            let w = warm?;
            let subset = w.best_subsets.as_ref()?.get(k)?.clone();
            let state = w.best_states.as_ref()?.get(k)?.clone();
            Some((subset, state))
        })
        .collect();
    let extra: Vec<Option<Vec<usize>>> = warm_pairs.iter().map(|p| p.as_ref().map(|(s, _)| s.clone())).collect();

    let eval = |k: usize, subset: &[usize]| {
        let op = povm.subset_sum(subset);
        let warm_state = warm_pairs[k - 1]
            .as_ref()
            .filter(|(s, _)| s.as_slice() == subset)
            .map(|(_, st)| st);
        let seed = derive_seed(opts.seed, &subset.iter().map(|&i| i as u64).collect::<Vec<_>>());
        maximize_product(&op, partition, opts, seed, warm_state)
    };
    let out = search_subsets(m, eval, &extra);
    let (prefix_maxima, omega) = assemble_omega(&out.raw);
    let class = if partition.k() == 1 {
        SeparabilityClass::Unconstrained
    } else {
        SeparabilityClass::Partition { partition: partition.clone() }
    };
    Ok(BoundResult {
        omega,
        prefix_maxima,
        partition: Some(partition.clone()),
        class,
        method: Method::Seesaw,
        restarts: opts.restarts,
        exhaustive: out.exhaustive,
        converged: out.converged,
        best_subsets: Some(out.subsets),
        best_states: out.states.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::sampled_bound;
    use crate::majorization::compare;
    use crate::measurements::{bell_basis, computational_basis, product_povm, random_povm};
    use crate::tensor::PureState;

    fn quick() -> BoundOptions {
        BoundOptions { restarts: 8, ..BoundOptions::default() }
    }

    #[test]
    fn bell2_product_bound_is_half() {
        let povm = bell_basis(2).unwrap();
        let b = seesaw_bound(&povm, &PartitionSpec::parse("A|B", 2).unwrap(), &quick()).unwrap();
        assert!((b.omega_k(1) - 0.5).abs() < 1e-9);
        for (w, want) in b.omega.as_slice().iter().zip([0.5, 0.5, 0.0, 0.0]) {
            assert!((w - want).abs() < 1e-9);
        }
        assert!(b.converged);
        assert!(b.exhaustive);
    }

    #[test]
    fn example_two_measurement_saturates_on_ab_c() {
        let d = 2;
        let povm = product_povm(&bell_basis(d).unwrap(), &computational_basis(&HilbertSpec::single(d).unwrap()));
        let b = seesaw_bound(&povm, &PartitionSpec::parse("AB|C", 3).unwrap(), &quick()).unwrap();
        assert!((b.omega.as_slice()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_block_agrees_with_spectral() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = HilbertSpec::new(vec![2, 2]).unwrap();
        let povm = random_povm(&spec, 4, &mut rng).unwrap();
        let s = crate::bounds::spectral_bound(&povm).unwrap();
        let b = seesaw_bound(&povm, &PartitionSpec::single_block(2), &quick()).unwrap();
        for k in 1..=4 {
            assert!((s.omega_k(k) - b.omega_k(k)).abs() < 1e-12);
        }
        assert_eq!(b.class, SeparabilityClass::Unconstrained);
    }

    #[test]
    fn constrained_bound_is_majorized_by_unconstrained() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = HilbertSpec::new(vec![2, 2]).unwrap();
        let povm = random_povm(&spec, 5, &mut rng).unwrap();
        let s = crate::bounds::spectral_bound(&povm).unwrap();
        let b = seesaw_bound(&povm, &PartitionSpec::parse("A|B", 2).unwrap(), &quick()).unwrap();
        assert!(compare(&b.omega, &s.omega).is_majorized());
        for k in 1..=5 {
            assert!(b.omega_k(k) <= s.omega_k(k) + 1e-9);
        }
    }

    #[test]
    fn refinement_lowers_every_prefix() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = HilbertSpec::new(vec![2, 2, 2]).unwrap();
        let povm = random_povm(&spec, 4, &mut rng).unwrap();
        let fine = seesaw_bound(&povm, &PartitionSpec::singletons(3), &quick()).unwrap();
        let coarse = seesaw_bound(&povm, &PartitionSpec::parse("AB|C", 3).unwrap(), &quick()).unwrap();
        for k in 1..=4 {
            assert!(fine.omega_k(k) <= coarse.omega_k(k) + 1e-9);
        }
    }

    #[test]
    fn warm_start_dominates_the_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let spec = HilbertSpec::new(vec![2, 2]).unwrap();
        let povm = random_povm(&spec, 4, &mut rng).unwrap();
        let part = PartitionSpec::parse("A|B", 2).unwrap();
        let sampled = sampled_bound(&povm, &part, 2000, 1).unwrap();
        let opts = BoundOptions { restarts: 1, max_iters: 1, ..BoundOptions::default() };
        let b = seesaw_bound_warm(&povm, &part, &opts, Some(&sampled)).unwrap();
        for k in 1..=4 {
            assert!(b.omega_k(k) >= sampled.omega_k(k) - 1e-9);
        }
    }

    #[test]
    fn best_states_attain_their_prefix_values() {
        let povm = bell_basis(2).unwrap();
        let part = PartitionSpec::parse("A|B", 2).unwrap();
        let b = seesaw_bound(&povm, &part, &quick()).unwrap();
        let states = b.best_states.as_ref().unwrap();
        let subsets = b.best_subsets.as_ref().unwrap();
        let psi: PureState = states[0].to_pure(povm.spec());
        let p = povm.probabilities_pure(&psi);
        let got: f64 = subsets[0].iter().map(|&i| p[i]).sum();
        assert!((got - b.omega_k(1)).abs() < 1e-9);
    }

    #[test]
    fn mismatched_partition_is_rejected() {
        let povm = bell_basis(2).unwrap();
        assert!(seesaw_bound(&povm, &PartitionSpec::singletons(3), &quick()).is_err());
        let bad = BoundOptions { restarts: 0, ..BoundOptions::default() };
        assert!(seesaw_bound(&povm, &PartitionSpec::singletons(2), &bad).is_err());
    }
}
