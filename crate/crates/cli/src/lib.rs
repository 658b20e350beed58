//! `majorfame` command-line front end.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use majorfame_core::bounds::{
    kseparable_bound, sampled_bound, seesaw_bound, spectral_bound, BoundCache, BoundOptions, BoundResult, CacheKey,
    Method, PartitionSpec,
};
use majorfame_core::catalog::{parse_povm, POVM_CATALOG};
use majorfame_core::detect::{bound_id, build_witnesses, circle_radius, evaluate_witness, run_detection, Conclusion, Criterion, DetectionReport};
use majorfame_core::majorization::hellinger_distance;
use majorfame_core::measurements::measure;
use majorfame_core::states::STATE_CATALOG;
use majorfame_core::{build_state, DensityMatrix, Povm, ProbabilityVector, StateSpec};

#[derive(Debug, Parser)]
#[command(name = "majorfame", version, about = "Majorization-based entanglement detection")]
pub struct Cli {
    /// Directory for cached bounds.
    #[arg(long, global = true, env = "MAJORFAME_CACHE")]
    pub cache: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute bound vectors for a measurement.
    Bound {
        #[command(flatten)]
        bounds: BoundArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Test a state against bounds with the selected criteria.
    Detect {
        /// State expression or density-matrix file; with --sweep, `{q}` is
        /// replaced by each grid value.
        #[arg(long)]
        state: String,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Comma separated criteria, or `all`.
        #[arg(long, default_value = "all")]
        criteria: String,
        /// Exit with status 1 unless the conclusion matches.
        #[arg(long)]
        expect: Option<String>,
        /// Evaluate on an evenly spaced grid of this many points in [0, 1].
        #[arg(long, num_args = 0..=1, default_missing_value = "101")]
        sweep: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Radii of the bounds' circles around the uniform distribution.
    Radii {
        #[arg(long)]
        state: Option<String>,
        #[command(flatten)]
        bounds: BoundArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Witness operators `Ω_k I - Σ E` and their expectations.
    Witness {
        #[arg(long)]
        state: Option<String>,
        #[command(flatten)]
        bounds: BoundArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Built-in state and measurement families.
    States {
        #[command(subcommand)]
        action: StatesAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum StatesAction {
    List,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Seesaw,
    Sampled,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Measurement expression or POVM file.
    #[arg(long)]
    pub povm: String,
    /// Partition such as "AB|C"; repeatable. Defaults to full separability.
    #[arg(long)]
    pub partition: Vec<String>,
    /// k-separable bound; repeatable.
    #[arg(long)]
    pub k: Vec<usize>,
    #[arg(long, value_enum, default_value = "seesaw")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// See-saw sweeps per restart.
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample count for the sampled method.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Exit with status 3 if any optimization did not converge.
    #[arg(long)]
    pub strict: bool,
    /// Only use cached bounds.
    #[arg(long)]
    pub no_compute: bool,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

/// How a successful run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    ExpectationFailed,
    NotConverged,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::ExpectationFailed => 1,
            Status::NotConverged => 3,
        }
    }
}

enum Target {
    Partition(PartitionSpec),
    K(usize),
    All,
}

impl Target {
    fn label(&self) -> String {
        match self {
            Target::Partition(p) => p.label(),
            Target::K(k) => format!("k={k}"),
            Target::All => "all".into(),
        }
    }
}

fn targets(args: &BoundArgs, parties: usize) -> Result<Vec<Target>> {
    let mut out = Vec::new();
    for p in &args.partition {
        out.push(Target::Partition(PartitionSpec::parse(p, parties)?));
    }
    for &k in &args.k {
        out.push(Target::K(k));
    }
    if out.is_empty() {
        out.push(if args.method == MethodArg::Spectral || parties == 1 {
            Target::All
        } else {
            Target::Partition(PartitionSpec::singletons(parties))
        });
    }
    Ok(out)
}

fn compute(povm: &Povm, target: &Target, args: &BoundArgs) -> Result<BoundResult> {
    let opts = BoundOptions { restarts: args.restarts, max_iters: args.max_iters, seed: args.seed, ..Default::default() };
    let parties = povm.spec().parties();
    Ok(match (args.method, target) {
        (MethodArg::Spectral, Target::All) => spectral_bound(povm)?,
        (MethodArg::Spectral, Target::Partition(p)) if p.k() == 1 => spectral_bound(povm)?,
        (MethodArg::Spectral, _) => bail!("the spectral method only computes unconstrained bounds"),
        (MethodArg::Seesaw, Target::K(k)) => kseparable_bound(povm, *k, &opts)?.omega_k,
        (MethodArg::Seesaw, Target::Partition(p)) => seesaw_bound(povm, p, &opts)?,
        (MethodArg::Seesaw, Target::All) => seesaw_bound(povm, &PartitionSpec::single_block(parties), &opts)?,
        (MethodArg::Sampled, Target::Partition(p)) => sampled_bound(povm, p, args.samples, args.seed)?,
        (MethodArg::Sampled, Target::All) => {
            sampled_bound(povm, &PartitionSpec::single_block(parties), args.samples, args.seed)?
        }
        (MethodArg::Sampled, Target::K(_)) => bail!("k-separable bounds need the seesaw method"),
    })
}

fn method_of(m: MethodArg) -> Method {
    match m {
        MethodArg::Seesaw => Method::Seesaw,
        MethodArg::Sampled => Method::Sampled,
        MethodArg::Spectral => Method::Spectral,
    }
}

/// Bounds for every requested target, through the cache when one is set.
fn obtain_bounds(povm: &Povm, args: &BoundArgs, cache: Option<&PathBuf>) -> Result<Vec<BoundResult>> {
    let cache = cache.map(BoundCache::new).transpose()?;
    if args.no_compute && cache.is_none() {
        bail!("--no-compute needs a cache directory (--cache or MAJORFAME_CACHE)");
    }
    let mut out = Vec::new();
    for target in targets(args, povm.spec().parties())? {
        let (restarts, samples) = match args.method {
            MethodArg::Seesaw => (args.restarts, None),
            MethodArg::Sampled => (0, Some(args.samples)),
            MethodArg::Spectral => (0, None),
        };
        let key = CacheKey::new(povm, target.label(), method_of(args.method), args.seed, restarts, samples);
        if let Some(hit) = cache.as_ref().and_then(|c| c.get(&key)) {
            eprintln!("cache hit: {}", target.label());
            out.push(hit.result);
            continue;
        }
        if args.no_compute {
            bail!("no cached bound for {} and --no-compute is set", target.label());
        }
        let result = compute(povm, &target, args)?;
        if let Some(c) = &cache {
            let path = c.put(&key, &result)?;
            eprintln!("cached {} at {}", target.label(), path.display());
        }
        out.push(result);
    }
    Ok(out)
}

fn convergence_status(bounds: &[BoundResult], strict: bool) -> Status {
    if strict && bounds.iter().any(|b| !b.converged) {
        eprintln!("warning: an optimization did not converge");
        Status::NotConverged
    } else {
        Status::Ok
    }
}

fn load_state(text: &str) -> Result<DensityMatrix> {
    let spec = StateSpec::parse(text)?;
    build_state(&spec).with_context(|| format!("building state {text:?}"))
}

fn load_povm(text: &str) -> Result<Povm> {
    parse_povm(text).with_context(|| format!("loading measurement {text:?}"))
}

fn emit(output: &OutputArgs, body: &str) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

#[derive(Serialize)]
struct BoundReport<'a> {
    bound_id: String,
    #[serde(flatten)]
    result: &'a BoundResult,
}

fn cmd_bound(cli: &Cli, bounds: &BoundArgs, output: &OutputArgs) -> Result<Status> {
    let povm = load_povm(&bounds.povm)?;
    let results = obtain_bounds(&povm, bounds, cli.cache.as_ref())?;
    let body = match output.format {
        Format::Json => {
            let reports: Vec<BoundReport> = results.iter().map(|r| BoundReport { bound_id: bound_id(r), result: r }).collect();
            to_json(&reports)?
        }
        Format::Csv => {
            let mut rows = Vec::new();
            for r in &results {
                for (k, (w, p)) in r.omega.as_slice().iter().zip(&r.prefix_maxima).enumerate() {
                    rows.push(vec![
                        bound_id(r),
                        (k + 1).to_string(),
                        w.to_string(),
                        p.to_string(),
                        r.converged.to_string(),
                    ]);
                }
            }
            csv_string(&["bound_id", "k", "omega", "prefix_max", "converged"], rows)?
        }
    };
    emit(output, &body)?;
    Ok(convergence_status(&results, bounds.strict))
}

fn verdict_rows(q: Option<f64>, report: &DetectionReport) -> Vec<Vec<String>> {
    report
        .verdicts
        .iter()
        .map(|v| {
            let mut row = Vec::new();
            if let Some(q) = q {
                row.push(q.to_string());
            }
            row.extend([
                v.criterion.label(),
                v.bound_id.clone(),
                v.violated.to_string(),
                v.prefix.map_or(String::new(), |p| p.to_string()),
                v.gap.to_string(),
                v.conclusion.to_string(),
            ]);
            row
        })
        .collect()
}

const VERDICT_HEADER: [&str; 6] = ["criterion", "bound_id", "violated", "prefix", "gap", "conclusion"];

#[allow(clippy::too_many_arguments)]
fn cmd_detect(
    cli: &Cli,
    state: &str,
    bounds: &BoundArgs,
    criteria: &str,
    expect: Option<&str>,
    sweep: Option<usize>,
    output: &OutputArgs,
) -> Result<Status> {
    let criteria = Criterion::parse_list(criteria)?;
    let expect: Option<Conclusion> = expect.map(str::parse).transpose()?;
    let povm = load_povm(&bounds.povm)?;
    let results = obtain_bounds(&povm, bounds, cli.cache.as_ref())?;

    let body;
    let mut conclusions = Vec::new();
    if let Some(points) = sweep {
        if points < 2 {
            bail!("a sweep needs at least 2 grid points");
        }
        if !state.contains("{q}") {
            bail!("--sweep needs a state with a {{q}} placeholder, e.g. \"werner(3,{{q}})\"");
        }
        let mut reports = Vec::new();
        for i in 0..points {
            let q = i as f64 / (points - 1) as f64;
            let text = state.replace("{q}", &q.to_string());
            let rho = load_state(&text)?;
            let report = run_detection(&rho, &povm, &results, &criteria)?.with_ids(text, &bounds.povm);
            conclusions.push(report.conclusion.clone());
            reports.push((q, report));
        }
        body = match output.format {
            Format::Json => to_json(&reports.iter().map(|(_, r)| r).collect::<Vec<_>>())?,
            Format::Csv => {
                let rows = reports.iter().flat_map(|(q, r)| verdict_rows(Some(*q), r)).collect();
                let mut header = vec!["q"];
                header.extend(VERDICT_HEADER);
                csv_string(&header, rows)?
            }
        };
    } else {
        let rho = load_state(state)?;
        let report = run_detection(&rho, &povm, &results, &criteria)?.with_ids(state, &bounds.povm);
        conclusions.push(report.conclusion.clone());
        body = match output.format {
            Format::Json => to_json(&report)?,
            Format::Csv => csv_string(&VERDICT_HEADER, verdict_rows(None, &report))?,
        };
    }
    emit(output, &body)?;

    if let Some(want) = expect {
        if let Some(got) = conclusions.iter().find(|c| **c != want) {
            eprintln!("expected conclusion {want}, got {got}");
            return Ok(Status::ExpectationFailed);
        }
    }
    Ok(convergence_status(&results, bounds.strict))
}

#[derive(Serialize)]
struct RadiusRow {
    bound_id: String,
    k: Option<usize>,
    radius: f64,
}

fn cmd_radii(cli: &Cli, state: Option<&str>, bounds: &BoundArgs, output: &OutputArgs) -> Result<Status> {
    let povm = load_povm(&bounds.povm)?;
    let results = obtain_bounds(&povm, bounds, cli.cache.as_ref())?;
    let mut rows: Vec<RadiusRow> = results
        .iter()
        .map(|b| RadiusRow {
            bound_id: bound_id(b),
            k: b.partition.as_ref().map(|p| p.k()).or(match &b.class {
                majorfame_core::SeparabilityClass::KSeparable { k, .. } => Some(*k),
                _ => None,
            }),
            radius: circle_radius(b),
        })
        .collect();
    if let Some(s) = state {
        let dist = measure(&load_state(s)?, &povm)?;
        let radius = hellinger_distance(&dist, &ProbabilityVector::uniform(dist.len()));
        rows.push(RadiusRow { bound_id: format!("state:{s}"), k: None, radius });
    }
    let body = match output.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => csv_string(
            &["bound_id", "k", "radius"],
            rows.iter()
                .map(|r| vec![r.bound_id.clone(), r.k.map_or(String::new(), |k| k.to_string()), r.radius.to_string()])
                .collect(),
        )?,
    };
    emit(output, &body)?;
    Ok(convergence_status(&results, bounds.strict))
}

#[derive(Serialize)]
struct WitnessRow {
    bound_id: String,
    k: usize,
    subset: Vec<usize>,
    omega_k: f64,
    heuristic: bool,
    operator: MatrixJson,
    value: Option<f64>,
}

/// Same layout as a state file: dims plus row-major `[re, im]` entries.
#[derive(Serialize)]
struct MatrixJson {
    dims: Vec<usize>,
    matrix: Vec<[f64; 2]>,
}

fn cmd_witness(cli: &Cli, state: Option<&str>, bounds: &BoundArgs, output: &OutputArgs) -> Result<Status> {
    let povm = load_povm(&bounds.povm)?;
    let results = obtain_bounds(&povm, bounds, cli.cache.as_ref())?;
    let rho = state.map(load_state).transpose()?;
    let mut rows = Vec::new();
    for b in &results {
        for w in build_witnesses(&povm, b)? {
            let value = rho.as_ref().map(|r| evaluate_witness(&w, r)).transpose()?;
            let n = w.operator.dim();
            let m = w.operator.matrix();
            let matrix = (0..n * n).map(|i| {
                let z = m[(i / n, i % n)];
                [z.re, z.im]
            });
            rows.push(WitnessRow {
                bound_id: bound_id(b),
                k: w.k,
                subset: w.subset.clone(),
                omega_k: w.omega_k,
                heuristic: w.heuristic,
                operator: MatrixJson { dims: w.operator.spec().dims().to_vec(), matrix: matrix.collect() },
                value,
            });
        }
    }
    let body = match output.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => csv_string(
            &["bound_id", "k", "subset", "omega_k", "value", "heuristic"],
            rows.iter()
                .map(|r| {
                    vec![
                        r.bound_id.clone(),
                        r.k.to_string(),
                        r.subset.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
                        r.omega_k.to_string(),
                        r.value.map_or(String::new(), |v| v.to_string()),
                        r.heuristic.to_string(),
                    ]
                })
                .collect(),
        )?,
    };
    emit(output, &body)?;
    Ok(convergence_status(&results, bounds.strict))
}

fn cmd_states_list() -> Result<Status> {
    let mut out = String::from("States:\n");
    for (syntax, desc) in STATE_CATALOG {
        out += &format!("  {syntax:<34} {desc}\n");
    }
    out += "\nMeasurements:\n";
    for (syntax, desc) in POVM_CATALOG {
        out += &format!("  {syntax:<34} {desc}\n");
    }
    std::io::stdout().write_all(out.as_bytes())?;
    Ok(Status::Ok)
}

pub fn run(cli: &Cli) -> Result<Status> {
    match &cli.command {
        Command::Bound { bounds, output } => cmd_bound(cli, bounds, output),
        Command::Detect { state, bounds, criteria, expect, sweep, output } => {
            cmd_detect(cli, state, bounds, criteria, expect.as_deref(), *sweep, output)
        }
        Command::Radii { state, bounds, output } => cmd_radii(cli, state.as_deref(), bounds, output),
        Command::Witness { state, bounds, output } => cmd_witness(cli, state.as_deref(), bounds, output),
        Command::States { action: StatesAction::List } => cmd_states_list(),
    }
}
