//! Acceptance suite: each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use majorfame_core::bounds::{sampled_bound, seesaw_bound, seesaw_bound_warm, BoundOptions, BoundResult};
use majorfame_core::detect::{
    build_witnesses, check_bistochastic_criterion, check_circle_criterion, check_majorization_criterion,
    check_schur_criterion, circle_radius, evaluate_witness,
};
use majorfame_core::majorization::{compare, construct_bistochastic, f_divergence, lattice_join, Relation};
use majorfame_core::measurements::{bell_basis, computational_basis, measure, product_povm, random_povm, random_product_basis};
use majorfame_core::{
    build_state, DensityMatrix, FDivergence, HilbertSpec, PartitionSpec, Povm, ProbabilityVector, PureState,
    SchurMeasure, SeparabilityClass, StateSpec,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, Duration, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn werner(d: usize, q: f64) -> DensityMatrix {
    build_state(&StateSpec::Werner { d, q }).unwrap()
}

fn grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

fn pv(v: Vec<f64>) -> ProbabilityVector {
    let s: f64 = v.iter().sum();
    ProbabilityVector::new(v.into_iter().map(|x| x / s).collect()).unwrap()
}

/// Random distribution with a spread of shapes: sometimes sparse,
/// sometimes nearly flat.
fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> ProbabilityVector {
    let power = [0.5, 1.0, 2.0, 4.0][rng.random_range(0..4)];
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powf(power)).collect();
    if rng.random_bool(0.2) {
        let i = rng.random_range(0..n);
        v[i] = 0.0;
    }
    if v.iter().sum::<f64>() == 0.0 {
        v[0] = 1.0;
    }
    pv(v)
}

fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// `Q` as a convex mixture of at most `n` random permutation matrices.
fn random_bistochastic(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let terms = rng.random_range(1..=n);
    let weights = pv((0..terms).map(|_| rng.random::<f64>() + 1e-3).collect());
    let mut q = vec![vec![0.0; n]; n];
    for &w in weights.as_slice() {
        let p = random_permutation(rng, n);
        for (i, &j) in p.iter().enumerate() {
            q[i][j] += w;
        }
    }
    q
}

fn apply(q: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    q.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn bell_ab_analytic(d: usize) -> BoundResult {
    let mut w = vec![1.0 / d as f64; d];
    w.resize(d * d, 0.0);
    BoundResult::analytic(
        ProbabilityVector::new(w).unwrap(),
        SeparabilityClass::Partition { partition: PartitionSpec::singletons(2) },
    )
}

fn example2_povm(d: usize) -> Povm {
    product_povm(&bell_basis(d).unwrap(), &computational_basis(&HilbertSpec::single(d).unwrap()))
}

/// Random mixture of pure states that factor across `partition`.
fn random_class_state(rng: &mut ChaCha8Rng, spec: &HilbertSpec, partition: &PartitionSpec) -> DensityMatrix {
    let terms = rng.random_range(1..=4);
    let weights = pv((0..terms).map(|_| rng.random::<f64>() + 1e-3).collect());
    let parts: Vec<DensityMatrix> = (0..terms)
        .map(|_| {
            let blocks: Vec<PureState> = partition
                .blocks()
                .iter()
                .map(|b| PureState::haar_random(&spec.restrict(b).unwrap(), rng))
                .collect();
            // blocks of these partitions are contiguous and ordered, so the
            // Kronecker product already has the right party order
            let psi = blocks[1..].iter().fold(blocks[0].clone(), |acc, b| acc.kron(b));
            majorfame_core::tensor::pure_to_density(&psi).unwrap()
        })
        .collect();
    let refs: Vec<(f64, &DensityMatrix)> = weights.as_slice().iter().copied().zip(parts.iter()).collect();
    DensityMatrix::mixture(&refs).unwrap()
}

fn c1_werner_d2() -> Outcome {
    let povm = bell_basis(2).unwrap();
    let ab = PartitionSpec::singletons(2);
    let bound = seesaw_bound(&povm, &ab, &BoundOptions { restarts: 32, ..Default::default() }).map_err(|e| e.to_string())?;
    let flagged: Vec<f64> = grid()
        .into_iter()
        .filter(|&q| check_majorization_criterion(&measure(&werner(2, q), &povm).unwrap(), &bound).violated)
        .collect();
    let expected: Vec<f64> = grid().into_iter().filter(|&q| q > 1.0 / 3.0).collect();
    check(flagged == expected, format!("flagged set differs: first {:?}", flagged.first()))?;
    check(flagged.first() == Some(&0.34), format!("first flagged {:?}", flagged.first()))?;
    let margin = check_majorization_criterion(&measure(&werner(2, 1.0 / 3.0), &povm).unwrap(), &bound).gap;
    check(margin.abs() <= 1e-9, format!("margin at 1/3 is {margin:e}"))?;
    Ok(format!("first flagged q = 0.34, margin at 1/3 = {margin:.1e}"))
}

fn c2_hellinger_d3() -> Outcome {
    let povm = bell_basis(3).unwrap();
    let bound = seesaw_bound(&povm, &PartitionSpec::singletons(2), &BoundOptions::default()).map_err(|e| e.to_string())?;
    let first = grid().into_iter().find(|&q| {
        check_circle_criterion(&measure(&werner(3, q), &povm).unwrap(), &bound, FDivergence::HellingerGen).violated
    });
    match first {
        Some(q) if (q - 0.25).abs() <= 0.01 => Ok(format!("crossing at q = {q}")),
        Some(q) => Err(format!("crossing at q = {q}, expected 0.25 ± 0.01")),
        None => Err("no crossing on the grid".into()),
    }
}

fn c3_radii() -> Outcome {
    let mut worst = 0.0f64;
    for d in 2..=5 {
        let r = circle_radius(&bell_ab_analytic(d));
        worst = worst.max((r * r - (1.0 - 1.0 / (d as f64).sqrt())).abs());
    }
    check(worst <= 1e-9, format!("max radius² error {worst:e}"))?;
    Ok(format!("max radius² error {worst:.1e}"))
}

fn c4_seesaw_analytic() -> Outcome {
    let opts = BoundOptions::default();
    let mut notes = Vec::new();
    for d in [2, 3] {
        let b = seesaw_bound(&bell_basis(d).unwrap(), &PartitionSpec::singletons(2), &opts).map_err(|e| e.to_string())?;
        let err = (b.omega_k(1) - 1.0 / d as f64).abs();
        check(err <= 1e-6, format!("Bell({d}) A|B: Ω_1 = {}", b.omega_k(1)))?;
        notes.push(format!("Bell({d}) Ω_1 err {err:.1e}"));
    }
    for d in [2, 3] {
        let povm = example2_povm(d);
        let b = seesaw_bound(&povm, &PartitionSpec::parse("AB|C", 3).unwrap(), &opts).map_err(|e| e.to_string())?;
        let mut target = vec![0.0; povm.len()];
        target[0] = 1.0;
        let err = b.omega.as_slice().iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        check(err <= 1e-9, format!("Bell({d})⊗comp({d}) AB|C: ω error {err:e}"))?;
        notes.push(format!("AB|C d={d} err {err:.1e}"));
    }
    Ok(notes.join(", "))
}

fn c5_seesaw_vs_sampling() -> Outcome {
    let spec = HilbertSpec::new(vec![2, 2]).unwrap();
    let ab = PartitionSpec::singletons(2);
    let mut worst_gap = 0.0f64;
    let mut worst_dom = f64::INFINITY;
    for i in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let m = 4 + (i as usize % 3);
        let povm = random_povm(&spec, m, &mut rng).map_err(|e| e.to_string())?;
        let sampled = sampled_bound(&povm, &ab, 100_000, 2000 + i).map_err(|e| e.to_string())?;
        let opts = BoundOptions { seed: i, ..Default::default() };
        let ss = seesaw_bound_warm(&povm, &ab, &opts, Some(&sampled)).map_err(|e| e.to_string())?;
        for k in 1..=m {
            let (a, b) = (ss.omega_k(k), sampled.omega_k(k));
            worst_gap = worst_gap.max((a - b).abs());
            worst_dom = worst_dom.min(a - b);
        }
    }
    check(worst_dom >= -1e-9, format!("see-saw below sampled by {:e}", -worst_dom))?;
    check(worst_gap <= 2e-3, format!("max |Ω_ss − Ω_sampled| = {worst_gap:.3e}"))?;
    Ok(format!("max |Ω_ss − Ω_sampled| = {worst_gap:.2e}, min(ss − sampled) = {worst_dom:.1e}"))
}

fn c6_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut transitive_checks = 0;
    let mut lub_checks = 0usize;
    let mut attempts = 0usize;
    let vecs: Vec<ProbabilityVector> = (0..1000).map(|_| {
        let n = rng.random_range(2..=8);
        random_dist(&mut rng, n)
    }).collect();
    for (idx, x) in vecs.iter().enumerate() {
        let n = x.len();
        if compare(x, x).relation != Relation::Equal {
            failures.push(format!("reflexivity #{idx}"));
        }
        if !compare(&ProbabilityVector::uniform(n), x).is_majorized()
            || !compare(x, &ProbabilityVector::point_mass(n)).is_majorized()
        {
            failures.push(format!("bracketing #{idx}"));
        }
        let perm = x.permuted(&random_permutation(&mut rng, n));
        if compare(x, &perm).relation != Relation::Equal {
            failures.push(format!("permutation equality #{idx}"));
        }
        // chain z ≻ y ≻ x built with doubly stochastic maps
        let q1 = random_bistochastic(&mut rng, n);
        let q2 = random_bistochastic(&mut rng, n);
        let y = pv(apply(&q1, x.as_slice()));
        let w = pv(apply(&q2, y.as_slice()));
        if !(compare(&y, x).is_majorized() && compare(&w, &y).is_majorized() && compare(&w, x).is_majorized()) {
            failures.push(format!("transitivity chain #{idx}"));
        }
        transitive_checks += 1;
        // antisymmetry: mutual majorization only for rearrangements
        let other = &vecs[(idx * 7 + 3) % vecs.len()];
        let (a, b) = (compare(x, other), compare(other, x));
        if a.is_majorized() && b.is_majorized() {
            let (xs, os) = (x.padded(n.max(other.len())).sorted_desc(), other.padded(n.max(other.len())).sorted_desc());
            if xs.iter().zip(&os).any(|(p, q)| (p - q).abs() > 1e-9) {
                failures.push(format!("antisymmetry #{idx}"));
            }
        }
        // join: upper bound and minimality against sampled upper bounds
        let y = random_dist(&mut rng, n);
        let j = lattice_join(x, &y);
        if !compare(x, &j).is_majorized() || !compare(&y, &j).is_majorized() {
            failures.push(format!("join upper bound #{idx}"));
        }
        let mut found = 0;
        let mut tries = 0;
        while found < 15 && tries < 20_000 {
            tries += 1;
            let z = random_dist(&mut rng, n);
            if compare(x, &z).is_majorized() && compare(&y, &z).is_majorized() {
                found += 1;
                if !compare(&j, &z).is_majorized() {
                    failures.push(format!("join minimality #{idx}"));
                }
            }
        }
        lub_checks += found;
        attempts += tries;
    }
    // transitivity on random triples that happen to be comparable
    for i in 0..1000 {
        let (a, b, c) = (&vecs[i], &vecs[(i + 1) % 1000], &vecs[(i + 2) % 1000]);
        if compare(a, b).is_majorized() && compare(b, c).is_majorized() {
            transitive_checks += 1;
            if !compare(a, c).is_majorized() {
                failures.push(format!("transitivity triple #{i}"));
            }
        }
    }
    check(lub_checks >= 10_000, format!("only {lub_checks} common upper bounds sampled in {attempts} tries"))?;
    check(failures.is_empty(), format!("{} failures, first {:?}", failures.len(), failures.first()))?;
    Ok(format!("0 failures; {transitive_checks} transitivity and {lub_checks} join-minimality checks"))
}

fn c7_hlp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_stoch = 0.0f64;
    let mut worst_repro = 0.0f64;
    for i in 0..1000 {
        let n = rng.random_range(2..=8);
        let y = random_dist(&mut rng, n);
        let x = pv(apply(&random_bistochastic(&mut rng, n), y.as_slice()));
        let chain = construct_bistochastic(&x, &y).map_err(|e| format!("comparable pair #{i} refused: {e}"))?;
        check(chain.steps.len() < n, format!("pair #{i}: {} steps for d = {n}", chain.steps.len()))?;
        worst_stoch = worst_stoch.max(chain.stochasticity_error());
        if chain.matrix.iter().any(|&v| v < -1e-12) {
            return Err(format!("pair #{i}: negative entry in Q"));
        }
        let got = chain.apply(&y.sorted_desc());
        let want = x.sorted_desc();
        worst_repro = worst_repro.max(got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    check(worst_stoch <= 1e-12, format!("row/column sum error {worst_stoch:e}"))?;
    check(worst_repro <= 1e-12, format!("|Qy − x| = {worst_repro:e}"))?;
    let mut refused = 0;
    let mut agree = 0;
    let mut total = 0;
    while refused < 1000 {
        let n = rng.random_range(2..=8);
        let (x, y) = (random_dist(&mut rng, n), random_dist(&mut rng, n));
        let verdict = compare(&x, &y);
        let built = construct_bistochastic(&x, &y).is_ok();
        total += 1;
        if built == verdict.is_majorized() {
            agree += 1;
        }
        if verdict.relation == Relation::Incomparable {
            if built {
                return Err("incomparable pair accepted".into());
            }
            refused += 1;
        }
    }
    check(agree == total, format!("verdict agreement {agree}/{total}"))?;
    Ok(format!(
        "stochasticity err {worst_stoch:.1e}, reproduction err {worst_repro:.1e}, {refused} refusals, agreement {agree}/{total}"
    ))
}

fn c8_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(2..=8);
        let x = pv((0..n).map(|_| rng.random::<f64>() + 1e-3).collect());
        let y = pv((0..n).map(|_| rng.random::<f64>() + 1e-3).collect());
        let q = random_bistochastic(&mut rng, n);
        let (qx, qy) = (pv(apply(&q, x.as_slice())), pv(apply(&q, y.as_slice())));
        for f in FDivergence::ALL {
            worst = worst.max(f_divergence(f, &qx, &qy) - f_divergence(f, &x, &y));
        }
    }
    check(worst <= 1e-12, format!("D_f increased by {worst:e}"))?;
    Ok(format!("max D_f(Qx‖Qy) − D_f(x‖y) = {worst:.1e}"))
}

fn four_criteria(dist: &ProbabilityVector, bound: &BoundResult) -> Vec<(String, bool)> {
    vec![
        ("majorization".into(), check_majorization_criterion(dist, bound).violated),
        ("shannon".into(), check_schur_criterion(dist, bound, SchurMeasure::Shannon).unwrap().violated),
        ("bistochastic".into(), check_bistochastic_criterion(dist, bound).violated),
        ("hellinger".into(), check_circle_criterion(dist, bound, FDivergence::HellingerGen).violated),
    ]
}

fn c9_soundness() -> Outcome {
    let spec = HilbertSpec::new(vec![2, 2, 2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let povms = [example2_povm(2), random_product_basis(&spec, &mut rng).unwrap()];
    let opts = BoundOptions::default();
    let mut false_positives = Vec::new();
    let mut checks = 0;
    for partition in [PartitionSpec::singletons(3), PartitionSpec::parse("AB|C", 3).unwrap()] {
        let states: Vec<DensityMatrix> = (0..200).map(|_| random_class_state(&mut rng, &spec, &partition)).collect();
        for (pi, povm) in povms.iter().enumerate() {
            let bound = seesaw_bound(povm, &partition, &opts).map_err(|e| e.to_string())?;
            for (si, rho) in states.iter().enumerate() {
                let dist = measure(rho, povm).unwrap();
                for (name, violated) in four_criteria(&dist, &bound) {
                    checks += 1;
                    if violated {
                        false_positives.push(format!("{partition} povm {pi} state {si} {name}"));
                    }
                }
            }
        }
    }
    check(false_positives.is_empty(), format!("{} false positives, first {:?}", false_positives.len(), false_positives.first()))?;
    Ok(format!("0 false positives in {checks} checks"))
}

fn c10_witnesses() -> Outcome {
    let spec = HilbertSpec::new(vec![2, 2, 2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let _ = random_product_basis(&spec, &mut rng);
    let ab_c = PartitionSpec::parse("AB|C", 3).unwrap();
    let povm = example2_povm(2);
    let mut w = vec![0.0; 8];
    w[0] = 1.0;
    let bound = BoundResult::analytic(
        ProbabilityVector::new(w).unwrap(),
        SeparabilityClass::Partition { partition: ab_c.clone() },
    );
    let witnesses = build_witnesses(&povm, &bound).map_err(|e| e.to_string())?;
    let mut min_value = f64::INFINITY;
    for _ in 0..200 {
        let rho = random_class_state(&mut rng, &spec, &ab_c);
        for wk in &witnesses {
            min_value = min_value.min(evaluate_witness(wk, &rho).unwrap());
        }
    }
    check(min_value >= -1e-9, format!("biseparable witness value {min_value:e}"))?;

    let bell = bell_basis(2).unwrap();
    let w1 = &build_witnesses(&bell, &bell_ab_analytic(2)).map_err(|e| e.to_string())?[0];
    let mut worst = 0.0f64;
    for q in grid() {
        let v = evaluate_witness(w1, &werner(2, q)).unwrap();
        worst = worst.max((v - (0.5 - q - (1.0 - q) / 4.0)).abs());
        check((v < -1e-12) == (q > 1.0 / 3.0), format!("sign of Tr(W_1 ρ) wrong at q = {q}"))?;
    }
    check(worst <= 1e-12, format!("trace formula error {worst:e}"))?;
    Ok(format!("min biseparable value {min_value:.1e}, formula error {worst:.1e}"))
}

fn c11_hierarchy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut broken = Vec::new();
    let mut violations = 0;
    for i in 0..500 {
        let n = rng.random_range(2..=9);
        let dist = random_dist(&mut rng, n);
        let omega = if i % 2 == 0 {
            random_dist(&mut rng, n)
        } else {
            // half the pairs are comparable so that non-violations occur too
            let mut v = dist.sorted_desc();
            let t = rng.random::<f64>();
            v[0] += t * (1.0 - v[0]);
            for x in v[1..].iter_mut() {
                *x *= 1.0 - t;
            }
            pv(v)
        };
        let bound = BoundResult::analytic(omega, SeparabilityClass::Unconstrained);
        let maj = check_majorization_criterion(&dist, &bound).violated;
        violations += maj as usize;
        if check_bistochastic_criterion(&dist, &bound).violated != maj {
            broken.push(format!("#{i} bistochastic"));
        }
        for m in [SchurMeasure::Shannon, SchurMeasure::Renyi(2.0), SchurMeasure::Tsallis(2.0)] {
            if check_schur_criterion(&dist, &bound, m).unwrap().violated && !maj {
                broken.push(format!("#{i} {}", m.label()));
            }
        }
        if check_circle_criterion(&dist, &bound, FDivergence::HellingerGen).violated && !maj {
            broken.push(format!("#{i} hellinger"));
        }
    }
    check(broken.is_empty(), format!("{} broken implications, first {:?}", broken.len(), broken.first()))?;
    Ok(format!("0 broken implications ({violations}/500 majorization violations)"))
}

fn main() {
    let criteria: [Check; 11] = [
        ("Werner d=2 majorization threshold", Duration::from_secs(5), c1_werner_d2),
        ("Werner d=3 Hellinger circle crossing", Duration::from_secs(30), c2_hellinger_d3),
        ("circle radii of Bell bounds", Duration::from_secs(1), c3_radii),
        ("see-saw vs analytic bounds", Duration::from_secs(60), c4_seesaw_analytic),
        ("see-saw vs sampling oracle", Duration::from_secs(300), c5_seesaw_vs_sampling),
        ("majorization algebra", Duration::from_secs(30), c6_algebra),
        ("HLP equivalence", Duration::from_secs(60), c7_hlp),
        ("f-divergence monotonicity", Duration::from_secs(30), c8_monotonicity),
        ("detector soundness", Duration::from_secs(300), c9_soundness),
        ("witness suite", Duration::from_secs(120), c10_witnesses),
        ("criterion hierarchy", Duration::from_secs(60), c11_hierarchy),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > *limit => Err(format!("{msg}; took {elapsed:.1?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{elapsed:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
