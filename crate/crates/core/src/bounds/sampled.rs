//! Random-sampling estimate of a separability-constrained bound. Every
//! sampled state is a genuine class member, so each estimated `Ω_k` is a
//! lower bound on the true one; it serves as an independent check on the
//! see-saw optimizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{assemble_omega, BoundResult, Method, PartitionSpec, ProductState, SeparabilityClass};
use crate::error::{Error, Result};
use crate::measurements::Povm;

pub fn sampled_bound(povm: &Povm, partition: &PartitionSpec, samples: usize, seed: u64) -> Result<BoundResult> {
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is required".into()));
    }
    let spec = povm.spec();
    if partition.parties() != spec.parties() {
        return Err(Error::DimensionMismatch(format!(
            "partition {} does not match a {}-party POVM",
            partition,
            spec.parties()
        )));
    }
    let m = povm.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = vec![f64::NEG_INFINITY; m];
    let mut subsets: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut states: Vec<Option<ProductState>> = vec![None; m];
    let mut order: Vec<usize> = (0..m).collect();

    for _ in 0..samples {
        let state = ProductState::random(spec, partition, &mut rng)?;
        let probs = povm.probabilities_pure(&state.to_pure(spec));
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        let mut acc = 0.0;
        for k in 0..m {
            acc += probs[order[k]];
            if acc > best[k] {
                best[k] = acc;
                let mut s = order[..=k].to_vec();
                s.sort_unstable();
                subsets[k] = s;
                states[k] = Some(state.clone());
            }
        }
    }

    let (prefix_maxima, omega) = assemble_omega(&best);
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
        method: Method::Sampled,
        restarts: samples,
        exhaustive: false,
        converged: true,
        best_subsets: Some(subsets),
        best_states: states.into_iter().collect(),
    })
}
