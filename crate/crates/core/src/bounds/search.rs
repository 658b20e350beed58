//! Outcome-subset search shared by the spectral and see-saw bounds.

use rayon::prelude::*;

use super::ProductState;

/// Outcome counts up to this are searched exhaustively for every prefix size.
pub const ENUMERATION_LIMIT: usize = 20;

/// Values this close to one are treated as saturated: `Ω_k ≤ 1` always, so
/// every larger prefix is one as well.
const SATURATED: f64 = 1.0 - 1e-12;

#[derive(Clone, Debug)]
pub(crate) struct Candidate {
    pub value: f64,
    pub state: Option<ProductState>,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct SearchOutcome {
    pub raw: Vec<f64>,
    pub subsets: Vec<Vec<usize>>,
    pub states: Vec<Option<ProductState>>,
    pub exhaustive: bool,
    pub converged: bool,
}

/// Lexicographic k-subsets of `0..m`.
pub(crate) fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + m - k {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        i -= 1;
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Evaluates all candidates in parallel; the best value wins, ties go to
/// the earliest candidate.
fn best_of<F>(k: usize, cands: Vec<Vec<usize>>, eval: &F) -> Option<(Vec<usize>, Candidate)>
where
    F: Fn(usize, &[usize]) -> Candidate + Sync,
{
    let results: Vec<Candidate> = cands.par_iter().map(|s| eval(k, s)).collect();
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if best.is_none_or(|b| r.value > results[b].value) {
            best = Some(i);
        }
    }
    best.map(|b| (cands[b].clone(), results[b].clone()))
}

/// Finds, for every prefix size `k = 1..=m`, the outcome subset of size `k`
/// maximizing `eval`. Exhaustive up to [`ENUMERATION_LIMIT`] outcomes,
/// greedy growth plus single-swap local search above it. `extra[k-1]`, when
/// present, is always evaluated in the greedy path.
pub(crate) fn search_subsets<F>(m: usize, eval: F, extra: &[Option<Vec<usize>>]) -> SearchOutcome
where
    F: Fn(usize, &[usize]) -> Candidate + Sync,
{
    let exhaustive = m <= ENUMERATION_LIMIT;
    let mut out = SearchOutcome {
        raw: Vec::with_capacity(m),
        subsets: Vec::with_capacity(m),
        states: Vec::with_capacity(m),
        exhaustive,
        converged: true,
    };
    for k in 1..=m {
        if let Some(&prev) = out.raw.last() {
            if prev >= SATURATED {
                let mut s = out.subsets[k - 2].clone();
                let next = (0..m).find(|i| !s.contains(i)).expect("k <= m");
                s.push(next);
                s.sort_unstable();
                out.raw.push(1.0);
                out.subsets.push(s);
                let st = out.states[k - 2].clone();
                out.states.push(st);
                continue;
            }
        }
        let (subset, cand) = if exhaustive {
            best_of(k, combinations(m, k), &eval).expect("at least one subset")
        } else {
            greedy(k, m, out.subsets.last(), extra.get(k - 1).and_then(|e| e.as_ref()), &eval)
        };
        out.converged &= cand.converged;
        out.raw.push(cand.value);
        out.subsets.push(subset);
        out.states.push(cand.state);
    }
    out
}

fn greedy<F>(k: usize, m: usize, base: Option<&Vec<usize>>, extra: Option<&Vec<usize>>, eval: &F) -> (Vec<usize>, Candidate)
where
    F: Fn(usize, &[usize]) -> Candidate + Sync,
{
    let base: Vec<usize> = base.cloned().unwrap_or_default();
    let mut cands: Vec<Vec<usize>> = (0..m)
        .filter(|i| !base.contains(i))
        .map(|i| {
            let mut s = base.clone();
            s.push(i);
            s.sort_unstable();
            s
        })
        .collect();
    if let Some(e) = extra {
        if e.len() == k && !cands.contains(e) {
            cands.push(e.clone());
        }
    }
    let (mut subset, mut cand) = best_of(k, cands, eval).expect("k <= m leaves a candidate");

    for _ in 0..2 * m {
        let outside: Vec<usize> = (0..m).filter(|i| !subset.contains(i)).collect();
        let swaps: Vec<Vec<usize>> = subset
            .iter()
            .flat_map(|&i| {
                let subset = &subset;
                outside.iter().map(move |&j| {
                    let mut s: Vec<usize> = subset.iter().copied().filter(|&x| x != i).collect();
                    s.push(j);
                    s.sort_unstable();
                    s
                })
            })
            .collect();
        match best_of(k, swaps, eval) {
            Some((s, c)) if c.value > cand.value + 1e-12 => {
                subset = s;
                cand = c;
            }
            _ => break,
        }
    }
    (subset, cand)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn combinations_are_complete_and_ordered() {
        for m in 1..=7 {
            for k in 1..=m {
                let c = combinations(m, k);
                assert_eq!(c.len(), binom(m, k));
                assert!(c.windows(2).all(|w| w[0] < w[1]));
            }
        }
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn exhaustive_finds_weighted_top_subsets() {
        let weights = [0.1, 0.4, 0.2, 0.3];
        let out = search_subsets(
            4,
            |_, s| Candidate { value: s.iter().map(|&i| weights[i]).sum(), state: None, converged: true },
            &[],
        );
        assert!(out.exhaustive);
        assert_eq!(out.subsets[0], vec![1]);
        assert_eq!(out.subsets[1], vec![1, 3]);
        assert!((out.raw[2] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn greedy_path_matches_additive_objective() {
        let weights: Vec<f64> = (0..25).map(|i| ((i * 7) % 25) as f64 / 300.0).collect();
        let out = search_subsets(
            25,
            |_, s| Candidate { value: s.iter().map(|&i| weights[i]).sum(), state: None, converged: true },
            &[],
        );
        assert!(!out.exhaustive);
        let mut sorted = weights.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for k in 1..=5 {
            let want: f64 = sorted[..k].iter().sum();
            assert!((out.raw[k - 1] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn saturation_short_circuits() {
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let out = search_subsets(
            5,
            |_, s| {
                calls.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                Candidate { value: if s.contains(&2) { 1.0 } else { 0.5 }, state: None, converged: true }
            },
            &[],
        );
        assert_eq!(calls.load(std::sync::atomic::Ordering::Relaxed), 5);
        assert_eq!(out.raw, vec![1.0; 5]);
        assert!(out.subsets[4].len() == 5);
    }
}
