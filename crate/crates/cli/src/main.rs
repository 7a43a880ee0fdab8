mod output;
mod poly;

use std::f64::consts::E;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cbinfluence::forms::{random_form, RandomFormSpec};
use cbinfluence::freecomb::{
    enumerate_star_pairings, fuss_catalan, moment_upper_bound, trace_moment_exact, DEFAULT_MOMENT_CAP,
    DEFAULT_PAIRING_CAP,
};
use cbinfluence::quantum::{
    gen_address_form, gen_forrelation_circuit, gen_random_circuit, QuantumQueryCircuit, DEFAULT_EXTRACT_CAP,
};
use cbinfluence::simulate::{error_profile, SimulationPolicy, SweepRow, DEFAULT_PROFILE_CAP};
use cbinfluence::witness::{
    aa_witness, root_influence_witness, scalar_phase_witness_address, sign_baseline, EndBlock, WitnessReport,
    DEFAULT_SCHEDULE,
};
use cbinfluence::{BlockMultilinearForm, CubePoint, Seed};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use output::{resolve, write_atomic, Format, Report};

#[derive(Parser)]
#[command(name = "cbinfluence", version, about = "Influence, cb-norm witnesses and query simulation for block-multilinear forms")]
struct Cli {
    /// Output format for reports.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Output file; relative paths honour CBINFLUENCE_OUTPUT_DIR.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Master seed.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Override the size cap of exhaustive or combinatorial steps.
    #[arg(long, global = true)]
    cap: Option<u64>,
    /// Record wall-clock time in witness reports (breaks byte-identical reruns).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a form or circuit file.
    #[command(subcommand)]
    Gen(GenKind),
    /// Extract the block-multilinear form of a circuit.
    Extract {
        circuit: PathBuf,
        /// Use Fourier inversion over the cube instead of algebraic expansion.
        #[arg(long)]
        fourier: bool,
    },
    /// Variance and influence table of a form.
    Influence { form: PathBuf },
    /// Lower-bound witness for the completely bounded norm.
    Witness {
        form: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Single matrix dimension; overrides --schedule.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SCHEDULE)]
        schedule: Vec<usize>,
        /// Sign vectors per block for sign-baseline.
        #[arg(long, default_value_t = 64)]
        trials: usize,
    },
    /// Exact error profile of the greedy influence decision tree.
    Simulate {
        form: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 16)]
        budget: usize,
        /// Comma-separated budgets for a sweep.
        #[arg(long, value_delimiter = ',')]
        budgets: Vec<usize>,
        /// Variance threshold; defaults to eps²·delta.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Exact free moment φ((pp*)^m) and its Fuss–Catalan bound.
    Trace {
        /// JSON file or inline terms such as "2:1,2 -1:2,1" (1-based variables).
        poly: String,
        m: usize,
    },
    /// Count (and optionally list) the colored non-crossing pairings NC₂*(d, m).
    Pairings {
        d: usize,
        m: usize,
        #[arg(long)]
        list: bool,
    },
    /// Check MaxInf ≥ Var²/(e(d+1)⁴); exits with status 2 if it fails.
    Check { form: PathBuf },
}

#[derive(Subcommand)]
enum GenKind {
    /// Address form with d address blocks and 2^d data variables.
    Address {
        #[arg(long)]
        d: usize,
    },
    /// k-fold Forrelation circuit on n = 2^j items.
    Forrelation {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Sparse Gaussian form, normalized to variance 1.
    RandomForm {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        /// Allow lower-degree terms and a constant.
        #[arg(long)]
        general: bool,
        #[arg(long)]
        max_degree: Option<usize>,
        /// Keep raw Gaussian coefficients.
        #[arg(long)]
        unnormalized: bool,
    },
    /// Circuit with Haar-orthogonal unitaries.
    RandomCircuit {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        s: usize,
        #[arg(long)]
        d: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    SignBaseline,
    ScalarPhase,
    RootFirst,
    RootLast,
    Aa,
}

/// What a command produced: a report, an optional artifact file, and
/// whether a checked property failed.
struct Outcome {
    report: Report,
    artifact: Option<String>,
    violation: Option<String>,
}

impl Outcome {
    fn report(report: Report) -> Self {
        Outcome {
            report,
            artifact: None,
            violation: None,
        }
    }
}

fn read_form(path: &Path) -> Result<BlockMultilinearForm> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    BlockMultilinearForm::from_json(&text).with_context(|| format!("parsing form {}", path.display()))
}

fn read_circuit(path: &Path) -> Result<QuantumQueryCircuit> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    QuantumQueryCircuit::from_json(&text).with_context(|| format!("parsing circuit {}", path.display()))
}

fn max_influence_json(f: &BlockMultilinearForm) -> Value {
    let best = f.max_influence();
    json!({"block": best.block + 1, "index": best.index + 1, "value": best.value})
}

fn form_summary(kind: &str, f: &BlockMultilinearForm) -> Value {
    json!({
        "kind": kind,
        "d": f.d(),
        "n": f.n(),
        "num_terms": f.num_terms(),
        "constant": f.constant(),
        "variance": f.variance(),
        "max_influence": max_influence_json(f),
    })
}

fn form_artifact(kind: &str, f: &BlockMultilinearForm) -> Outcome {
    Outcome {
        report: Report::new(form_summary(kind, f)),
        artifact: Some(f.to_json() + "\n"),
        violation: None,
    }
}

fn circuit_artifact(kind: &str, c: &QuantumQueryCircuit) -> Result<Outcome> {
    let summary = json!({
        "kind": kind,
        "n": c.n(),
        "s": c.s(),
        "d": c.d(),
        "dim": c.dim(),
        "value_at_ones": c.eval(&CubePoint::ones(c.d(), c.n()))?,
    });
    Ok(Outcome {
        report: Report::new(summary),
        artifact: Some(c.to_json() + "\n"),
        violation: None,
    })
}

fn cmd_gen(kind: &GenKind, seed: &Seed) -> Result<Outcome> {
    match *kind {
        GenKind::Address { d } => Ok(form_artifact("address", &gen_address_form(d)?)),
        GenKind::Forrelation { n, k } => circuit_artifact("forrelation", &gen_forrelation_circuit(n, k)?),
        GenKind::RandomForm {
            d,
            n,
            density,
            general,
            max_degree,
            unnormalized,
        } => {
            let spec = RandomFormSpec {
                density,
                homogeneous: !general,
                max_degree: max_degree.unwrap_or(usize::MAX),
                normalize: !unnormalized,
            };
            Ok(form_artifact("random-form", &random_form(d, n, &spec, seed)?))
        }
        GenKind::RandomCircuit { n, s, d } => circuit_artifact("random-circuit", &gen_random_circuit(n, s, d, seed)?),
    }
}

fn cmd_extract(path: &Path, fourier: bool, cap: Option<u64>) -> Result<Outcome> {
    let c = read_circuit(path)?;
    let f = if fourier {
        c.extract_form_fourier(cap.map_or(DEFAULT_EXTRACT_CAP, |v| v as usize))?
    } else {
        c.extract_form()?
    };
    Ok(form_artifact("extracted", &f))
}

fn cmd_influence(path: &Path) -> Result<Outcome> {
    let f = read_form(path)?;
    let rows: Vec<Value> = (0..f.d())
        .flat_map(|b| (0..f.n()).map(move |i| (b, i)))
        .map(|(b, i)| json!({"block": b + 1, "index": i + 1, "influence": f.influence(b, i)}))
        .collect();
    let block_sums: Vec<f64> = (0..f.d()).map(|b| f.block_influence_sum(b)).collect();
    let root_sums: Vec<f64> = (0..f.d())
        .map(|b| (0..f.n()).map(|i| f.influence(b, i).sqrt()).sum())
        .collect();
    let value = json!({
        "d": f.d(),
        "n": f.n(),
        "constant": f.constant(),
        "variance": f.variance(),
        "max_influence": max_influence_json(&f),
        "block_influence_sums": block_sums,
        "root_influence_sums": root_sums,
        "influences": rows,
    });
    Ok(Outcome::report(Report::new(value).with_rows("influences")))
}

fn witness_report(f: &BlockMultilinearForm, method: Method, schedule: &[usize], trials: usize, seed: &Seed) -> Result<WitnessReport> {
    Ok(match method {
        Method::SignBaseline => sign_baseline(f, trials, seed)?,
        Method::ScalarPhase => {
            let d = f.d().saturating_sub(1);
            if d == 0 || gen_address_form(d).ok().as_ref() != Some(f) {
                bail!("scalar-phase applies only to the address form");
            }
            scalar_phase_witness_address(d)?
        }
        Method::RootFirst => root_influence_witness(f, EndBlock::First, schedule, seed)?,
        Method::RootLast => root_influence_witness(f, EndBlock::Last, schedule, seed)?,
        Method::Aa => aa_witness(f, schedule, seed)?,
    })
}

fn cmd_witness(
    path: &Path,
    method: Method,
    dim: Option<usize>,
    schedule: &[usize],
    trials: usize,
    seed: &Seed,
    timing: bool,
) -> Result<Outcome> {
    let f = read_form(path)?;
    let schedule = dim.map_or_else(|| schedule.to_vec(), |n| vec![n]);
    let start = Instant::now();
    let mut report = witness_report(&f, method, &schedule, trials, seed)?;
    if timing {
        report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let violation = (!report.is_certified()).then(|| {
        format!(
            "unitarity residual {:.3e} exceeds the certification threshold",
            report.unitarity_residual
        )
    });
    Ok(Outcome {
        report: Report::new(serde_json::to_value(&report)?).with_rows("runs"),
        artifact: None,
        violation,
    })
}

fn cmd_simulate(
    path: &Path,
    eps: f64,
    delta: f64,
    budget: usize,
    budgets: &[usize],
    threshold: Option<f64>,
    cap: Option<u64>,
) -> Result<Outcome> {
    let f = read_form(path)?;
    let cap = cap.map_or(DEFAULT_PROFILE_CAP, |v| v as usize);
    let policy_for = |b: usize| match threshold {
        Some(t) => SimulationPolicy::with_threshold(eps, delta, t, b),
        None => SimulationPolicy::new(eps, delta, b),
    };
    let main = error_profile(&f, &policy_for(budget)?, cap)?;
    let sweep_budgets = if budgets.is_empty() { vec![budget] } else { budgets.to_vec() };
    let sweep = sweep_budgets
        .iter()
        .map(|&b| {
            let p = if b == budget { main.clone() } else { error_profile(&f, &policy_for(b)?, cap)? };
            Ok(SweepRow {
                budget: b,
                epsilon: eps,
                achieved_failing_fraction: p.failing_fraction,
                mean_queries: p.mean_queries,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let value = json!({"profile": main, "sweep": sweep});
    Ok(Outcome::report(Report::new(value).with_rows("sweep")))
}

fn cmd_trace(spec: &str, m: usize, cap: Option<u64>) -> Result<Outcome> {
    let p = poly::load(spec)?;
    let d = p
        .homogeneous_degree()
        .context("trace moments need a homogeneous polynomial")?;
    let moment = trace_moment_exact(&p, m, cap.map_or(DEFAULT_MOMENT_CAP, u128::from))?;
    let bound = moment_upper_bound(&p, m)?;
    let holds = moment.as_f64() <= bound.as_f64() * (1.0 + 1e-12);
    let value = json!({
        "polynomial": poly::PolyJson::from(&p),
        "degree": d,
        "m": m,
        "l2_norm_sq": p.terms().map(|(_, c)| c * c).sum::<f64>(),
        "fuss_catalan": fuss_catalan(d.max(1), m)?.to_string(),
        "moment": moment,
        "bound": bound,
        "holds": holds,
    });
    Ok(Outcome {
        report: Report::new(value),
        artifact: None,
        violation: (!holds).then(|| format!("moment {moment} exceeds bound {bound}")),
    })
}

fn cmd_pairings(d: usize, m: usize, list: bool, cap: Option<u64>) -> Result<Outcome> {
    let pairings = enumerate_star_pairings(d, m, cap.map_or(DEFAULT_PAIRING_CAP, |v| v as usize))?;
    let mut value = json!({
        "d": d,
        "m": m,
        "count": pairings.len(),
        "fuss_catalan": fuss_catalan(d, m)?.to_string(),
    });
    if list {
        let listing: Vec<String> = pairings
            .iter()
            .map(|p| {
                p.pairs
                    .iter()
                    .map(|(a, b)| format!("({},{})", a + 1, b + 1))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        value["pairings"] = json!(listing);
    }
    let mut report = Report::new(value).with_headline("count");
    if list {
        report = report.with_rows("pairings");
    }
    Ok(Outcome::report(report))
}

fn cmd_check(path: &Path) -> Result<Outcome> {
    let f = read_form(path)?;
    let d1 = f.d() as f64 + 1.0;
    let bound = f.variance().powi(2) / (E * d1.powi(4));
    let max_inf = f.max_influence().value;
    let holds = max_inf >= bound;
    let value = json!({
        "d": f.d(),
        "n": f.n(),
        "variance": f.variance(),
        "max_influence": max_influence_json(&f),
        "bound": bound,
        "slack": max_inf - bound,
        "holds": holds,
    });
    Ok(Outcome {
        report: Report::new(value),
        artifact: None,
        violation: (!holds).then(|| format!("MaxInf {max_inf} < Var²/(e(d+1)⁴) = {bound}")),
    })
}

fn run(cli: &Cli) -> Result<Outcome> {
    let seed = Seed::new(cli.seed);
    match &cli.command {
        Command::Gen(kind) => cmd_gen(kind, &seed),
        Command::Extract { circuit, fourier } => cmd_extract(circuit, *fourier, cli.cap),
        Command::Influence { form } => cmd_influence(form),
        Command::Witness {
            form,
            method,
            dim,
            schedule,
            trials,
        } => cmd_witness(form, *method, *dim, schedule, *trials, &seed, cli.timing),
        Command::Simulate {
            form,
            eps,
            delta,
            budget,
            budgets,
            threshold,
        } => cmd_simulate(form, *eps, *delta, *budget, budgets, *threshold, cli.cap),
        Command::Trace { poly, m } => cmd_trace(poly, *m, cli.cap),
        Command::Pairings { d, m, list } => cmd_pairings(*d, *m, *list, cli.cap),
        Command::Check { form } => cmd_check(form),
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<()> {
    let rendered = outcome.report.render(cli.format)?;
    let target = cli.output.as_deref().map(resolve);
    match (&outcome.artifact, target) {
        // Artifacts go to the file, the summary to stdout.
        (Some(artifact), Some(path)) => {
            write_atomic(&path, artifact)?;
            print!("{rendered}");
        }
        (Some(artifact), None) => {
            print!("{artifact}");
            eprint!("{rendered}");
        }
        (None, Some(path)) => write_atomic(&path, &rendered)?,
        (None, None) => print!("{rendered}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // A cap of zero is never meaningful; catch it before any work.
    if cli.cap == Some(0) {
        eprintln!("error: --cap must be positive");
        return ExitCode::FAILURE;
    }
    match run(&cli).and_then(|outcome| emit(&cli, &outcome).map(|()| outcome)) {
        Ok(outcome) => match outcome.violation {
            Some(msg) => {
                eprintln!("violation: {msg}");
                ExitCode::from(2)
            }
            None => ExitCode::SUCCESS,
        },
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
