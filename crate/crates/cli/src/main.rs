use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use nodesparse::linalg;
use nodesparse::harness::{self, ExperimentConfig, Rule};
use nodesparse::model::{self, Assignment, GroundTruth, NoiseFamily, NoiseSpec, SymmetricMatrix};
use nodesparse::refine::{self, Estimator, RefineInputs};
use nodesparse::spectral;
use nodesparse::support::{self, GroupLassoOptions, RecoverOptions, SdpOptions, SelectOptions, SupportMethod};
use nodesparse::Error;

#[derive(Parser)]
#[command(name = "nodesparse", version, about = "Shared low-rank plus node-sparse network estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic observation set and write it as matrix files.
    Generate(GenerateArgs),
    /// Recover the perturbed nodes of a treated subject.
    Recover(RecoverArgs),
    /// Estimate the shared low-rank matrix from masked copies.
    Refine(RefineArgs),
    /// Run a Monte-Carlo experiment and write per-trial CSV.
    Experiment(ExperimentArgs),
    /// Exhaustive least-squares support of a small matrix.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    /// Incoherence rule in `n`.
    #[arg(long, default_value = "ln(n)")]
    mu: String,
    /// Eigenvalue rule in `n` and the 1-based index `i`.
    #[arg(long, default_value = "3*sqrt(n) + (3 - i)*ln(n)")]
    eigenvalues: String,
    #[arg(long, default_value_t = 10)]
    m: usize,
    /// Signal scale rule in `n`.
    #[arg(long, default_value = "2*n^(-1/4)*ln(n)^(1/4)")]
    sigma_b: String,
    #[arg(long, default_value = "gaussian-iid")]
    noise: String,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.8)]
    sigma_min: f64,
    #[arg(long, default_value_t = 1.3)]
    sigma_max: f64,
    #[arg(long, default_value_t = 1)]
    control: usize,
    /// Copies of the treated subject (all share one perturbation).
    #[arg(long, default_value_t = 1)]
    treated: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 3)]
    sdp_rank: usize,
    #[arg(long, default_value_t = 1e-6)]
    sdp_feas_tol: f64,
    #[arg(long, default_value_t = 3)]
    sdp_restarts: usize,
    #[arg(long, default_value_t = 1.0)]
    gl_rho: f64,
    #[arg(long, default_value_t = 1e-6)]
    gl_tol: f64,
    #[arg(long, default_value_t = 5000)]
    gl_max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> RecoverOptions {
        RecoverOptions {
            sdp: SdpOptions {
                rank: self.sdp_rank,
                feas_tol: self.sdp_feas_tol,
                restarts: self.sdp_restarts,
                ..SdpOptions::default()
            },
            glasso: GroupLassoOptions {
                rho: self.gl_rho,
                tol: self.gl_tol,
                max_iter: self.gl_max_iter,
                ..GroupLassoOptions::default()
            },
            ..RecoverOptions::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RefineChoice {
    Spec,
    Mhat1,
    Mhat2,
    All,
}

impl RefineChoice {
    fn estimators(self) -> Vec<Estimator> {
        match self {
            RefineChoice::Spec => vec![Estimator::Spec],
            RefineChoice::Mhat1 => vec![Estimator::Mhat1],
            RefineChoice::Mhat2 => vec![Estimator::Mhat2],
            RefineChoice::All => Estimator::ALL.to_vec(),
        }
    }
}

#[derive(Args)]
struct RecoverArgs {
    /// Control-group matrix files.
    #[arg(long, num_args = 1.., required = true)]
    control: Vec<PathBuf>,
    /// Copies of one treated subject.
    #[arg(long, num_args = 1.., required = true)]
    treated: Vec<PathBuf>,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value = "sdp")]
    method: String,
    /// Support size; with --m-auto, the starting point of the search.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    m_auto: bool,
    #[arg(long)]
    no_screen: bool,
    #[arg(long, default_value_t = spectral::DEFAULT_C_SCREEN)]
    c_screen: f64,
    #[arg(long, default_value_t = spectral::DEFAULT_C_S)]
    c_s: f64,
    #[arg(long, default_value_t = 3.0)]
    c_thresh: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also estimate the low-rank matrix with the recovered nodes removed.
    #[arg(long, value_enum)]
    refine: Option<RefineChoice>,
    /// Directory for refined matrices.
    #[arg(long)]
    refine_out: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    /// Sources of the upper triangle.
    #[arg(long, num_args = 1.., required = true)]
    upper: Vec<PathBuf>,
    /// Sources of the lower triangle and diagonal.
    #[arg(long, num_args = 1.., required = true)]
    lower: Vec<PathBuf>,
    /// Two further copies for the correction factor.
    #[arg(long, num_args = 2)]
    extra: Vec<PathBuf>,
    /// Comma-separated nodes to zero out first.
    #[arg(long, value_delimiter = ',')]
    mask: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, value_enum, default_value = "all")]
    estimator: RefineChoice,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Aggregated means and bootstrap intervals.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    no_runtime: bool,
}

#[derive(Args)]
struct OracleArgs {
    file: PathBuf,
    #[arg(long)]
    m: usize,
}

enum Failure {
    Config(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type CliResult = Result<Value, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Recover(a) => recover(&a),
        Command::Refine(a) => refine_cmd(&a),
        Command::Experiment(a) => experiment(&a),
        Command::Oracle(a) => oracle(&a),
    };
    match out {
        Ok(v) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Prints to stdout; a closed pipe is not an error worth reporting.
fn emit(v: &Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn eval(rule: &str, n: usize, i: usize) -> Result<f64, Failure> {
    Ok(Rule::parse(rule)?.eval(n, i, 0.0)?)
}

fn generate(a: &GenerateArgs) -> CliResult {
    let family: NoiseFamily = a.noise.parse()?;
    let spec = match family {
        NoiseFamily::GaussianEntryHetero | NoiseFamily::GaussianRowHetero => {
            NoiseSpec::heteroscedastic(family, a.sigma_min, a.sigma_max)
        }
        _ => NoiseSpec::new(family, a.sigma),
    };
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (u, mu) = model::generate_ustar(a.n, a.r, eval(&a.mu, a.n, 0)?, &mut rng)?;
    let mut lam = (1..=a.r).map(|i| eval(&a.eigenvalues, a.n, i)).collect::<Result<Vec<_>, _>>()?;
    lam.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
    let pert = model::generate_bstar(a.n, a.m, eval(&a.sigma_b, a.n, 0)?, &mut rng)?;
    let support_set = pert.support.clone();
    let truth = Arc::new(GroundTruth::new(u, lam.clone(), vec![pert])?);
    let obs = model::assemble_observations(truth.clone(), &spec, a.control, a.treated, Assignment::Shared, &mut rng)?;
    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    let mut control = Vec::new();
    for (i, y) in obs.g0.iter().enumerate() {
        let p = a.out.join(format!("control_{i}.txt"));
        model::write_matrix(&p, y.as_matrix())?;
        control.push(p.display().to_string());
    }
    let mut treated = Vec::new();
    for (j, y) in obs.g1.iter().enumerate() {
        let p = a.out.join(format!("treated_{j}.txt"));
        model::write_matrix(&p, y.as_matrix())?;
        treated.push(p.display().to_string());
    }
    model::write_matrix(&a.out.join("mstar.txt"), truth.mstar().as_matrix())?;
    model::write_matrix(&a.out.join("bstar.txt"), truth.perturbations()[0].matrix.as_matrix())?;
    let meta = json!({
        "n": a.n,
        "r": a.r,
        "eigenvalues": lam,
        "mu": mu,
        "support": support_set,
        "noise": family.name(),
        "seed": a.seed,
        "control": control,
        "treated": treated,
    });
    std::fs::write(a.out.join("truth.json"), serde_json::to_string_pretty(&meta).expect("json")).map_err(Error::from)?;
    Ok(meta)
}

fn read_all(paths: &[PathBuf]) -> Result<Vec<SymmetricMatrix>, Failure> {
    Ok(paths.iter().map(|p| model::read_matrix(p)).collect::<Result<Vec<_>, _>>()?)
}

fn mask_all(ms: &[SymmetricMatrix], idx: &[usize]) -> Result<Vec<SymmetricMatrix>, Failure> {
    Ok(ms.iter().map(|m| refine::mask_rows_cols(m, idx)).collect::<Result<Vec<_>, _>>()?)
}

fn recover(a: &RecoverArgs) -> CliResult {
    let method: SupportMethod = a.method.parse()?;
    let controls = read_all(&a.control)?;
    let treated = read_all(&a.treated)?;
    let obs = model::ObservationSet::new(controls, treated)?;
    let n = obs.n;
    let dec = spectral::spectral_init(&obs.g0, a.r)?;
    let kept = if a.no_screen {
        (0..n).collect()
    } else {
        spectral::select_low_coherence(&dec, a.c_screen)?.kept
    };
    let tau = spectral::estimate_noise_scale(&obs.g0[0], &dec, a.c_s)?;
    let residuals = obs
        .g1
        .iter()
        .map(|y| spectral::form_residual(y, &dec, &kept))
        .collect::<Result<Vec<_>, _>>()?;
    let mats: Vec<SymmetricMatrix> = residuals.iter().map(|r| r.matrix.clone()).collect();
    let opts = a.solver.options();
    let default_m = ((2.0 * (n as f64).ln()).ceil() as usize).min(kept.len().saturating_sub(1)).max(1);
    let mut selection = Value::Null;
    let m = if a.m_auto {
        let sel_opts = SelectOptions {
            c_thresh: a.c_thresh,
            sdp: opts.sdp.clone(),
            ..SelectOptions::default()
        };
        let avg = SymmetricMatrix::mean(&mats)?;
        // Averaging k copies divides the noise variance by k.
        let sigma_hat = tau / (mats.len() as f64).sqrt();
        let sel = support::select_m(&avg, sigma_hat, a.m.unwrap_or(default_m), &sel_opts)?;
        selection = json!({ "m": sel.m, "capped": sel.capped, "trace": sel.trace });
        sel.m
    } else {
        a.m.ok_or_else(|| Failure::Config("either --m or --m-auto is required".into()))?
    };
    let rec = support::recover(method, &mats, m, Some(tau), &opts)?;
    let indices = rec.estimate.translated(&residuals[0]);
    let mut report = json!({
        "method": method.name(),
        "n": n,
        "m": m,
        "support": indices,
        "scores": rec.estimate.scores,
        "tau": tau,
        "kept_count": kept.len(),
        "converged": rec.converged,
        "m_selection": selection,
    });
    if let Some(sol) = &rec.sdp {
        report["sdp"] = json!({
            "objective": sol.objective,
            "trace_residual": sol.trace_residual,
            "sum_residual": sol.sum_residual,
            "negativity": sol.negativity,
            "diag_excess": sol.diag_excess,
            "iterations": sol.iterations,
            "restart_objectives": sol.restart_objectives,
        });
    }
    if let Some(choice) = a.refine {
        let treated = mask_all(&obs.g1, &indices)?;
        let control = mask_all(&obs.g0, &indices)?;
        let mut pool: Vec<SymmetricMatrix> = treated.into_iter().chain(control).collect();
        let extra = if pool.len() >= 4 {
            let b = pool.pop().expect("len >= 4");
            let a = pool.pop().expect("len >= 4");
            Some((a, b))
        } else {
            None
        };
        let split = pool.len().div_ceil(2);
        let inputs = RefineInputs {
            upper: &pool[..split],
            lower: &pool[split..],
            extra: extra.as_ref().map(|(a, b)| (a, b)),
        };
        if inputs.lower.is_empty() {
            return Err(Failure::Config("refinement needs at least two observed matrices".into()));
        }
        report["refine"] = run_refine(&inputs, a.r, &choice.estimators(), a.refine_out.as_deref())?;
    }
    if !rec.converged {
        emit(&report);
        return Err(Failure::Solver("support solver did not converge".into()));
    }
    Ok(report)
}

fn run_refine(inputs: &RefineInputs<'_>, r: usize, which: &[Estimator], out: Option<&Path>) -> Result<Value, Failure> {
    let mut obj = serde_json::Map::new();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
    }
    for &e in which {
        let entry = match refine::refine(e, inputs, r) {
            Ok(res) => {
                let m = res.matrix.as_matrix();
                let vals = linalg::top_symmetric_eigenpairs(m, r).map(|(_, v)| v).unwrap_or_default();
                let mut v = json!({ "status": "ok", "max_abs": linalg::max_abs(m), "eigenvalues": vals });
                if let Some(dir) = out {
                    let p = dir.join(format!("{}.txt", e.name()));
                    model::write_matrix(&p, m)?;
                    v["path"] = json!(p.display().to_string());
                }
                v
            }
            Err(err) => json!({ "status": "error", "error": err.to_string() }),
        };
        obj.insert(e.name().to_string(), entry);
    }
    Ok(Value::Object(obj))
}

fn refine_cmd(a: &RefineArgs) -> CliResult {
    let upper = mask_all(&read_all(&a.upper)?, &a.mask)?;
    let lower = mask_all(&read_all(&a.lower)?, &a.mask)?;
    let extra = if a.extra.is_empty() {
        None
    } else {
        let e = mask_all(&read_all(&a.extra)?, &a.mask)?;
        Some((e[0].clone(), e[1].clone()))
    };
    let inputs = RefineInputs {
        upper: &upper,
        lower: &lower,
        extra: extra.as_ref().map(|(x, y)| (x, y)),
    };
    let report = run_refine(&inputs, a.r, &a.estimator.estimators(), a.out.as_deref())?;
    let failed: Vec<String> = report
        .as_object()
        .expect("object")
        .iter()
        .filter(|(_, v)| v["status"] == "error")
        .map(|(k, _)| k.clone())
        .collect();
    if !failed.is_empty() {
        emit(&report);
        return Err(Failure::Solver(format!("estimator(s) failed: {}", failed.join(", "))));
    }
    Ok(report)
}

fn experiment(a: &ExperimentArgs) -> CliResult {
    let mut cfg: ExperimentConfig = match (&a.preset, &a.config) {
        (Some(p), _) => harness::preset(p)?,
        (None, Some(path)) => harness::read_config(path)?,
        (None, None) => return Err(Failure::Config("--preset or --config is required".into())),
    };
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.no_runtime {
        cfg.record_runtime = false;
    }
    let res = match a.threads {
        Some(t) => harness::run_experiment_with_threads(&cfg, t)?,
        None => harness::run_experiment(&cfg)?,
    };
    harness::write_results(&res, &a.out)?;
    if let Some(p) = &a.summary {
        std::fs::write(p, res.summary_csv()).map_err(Error::from)?;
    }
    let cells: Vec<Value> = res
        .aggregates
        .iter()
        .map(|g| {
            json!({
                "n": g.n, "method": g.method, "param": g.param, "count": g.count,
                "failures": g.failures, "mean": g.mean, "ci": [g.ci_low, g.ci_high],
            })
        })
        .collect();
    Ok(json!({ "experiment": cfg.name, "rows": res.rows.len(), "out": a.out.display().to_string(), "cells": cells }))
}

fn oracle(a: &OracleArgs) -> CliResult {
    let y = model::read_matrix(&a.file)?;
    let est = support::lse_bruteforce(&y, a.m)?;
    Ok(json!({ "support": est.indices, "m": a.m, "n": y.n() }))
}
