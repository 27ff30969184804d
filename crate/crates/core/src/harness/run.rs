use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{aggregate, ExperimentConfig, ExperimentResult, Placement, PerturbationKind, ResultRow, Screening, Task};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{
    assemble_observations, generate_bstar_adversarial, generate_bstar_within, generate_ustar, sample_noise, Assignment,
    GroundTruth, NoiseSpec, Perturbation, SymmetricMatrix,
};
use crate::refine::{self, Estimator, RefineInputs, Refined};
use crate::spectral::{estimate_noise_scale, form_residual, select_low_coherence, spectral_init, RankRDecomposition};
use crate::support::{self, glasso, RecoverOptions, SupportMethod};

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the RNG stream for one (cell, trial) unit.
pub fn child_seed(base: u64, cell: u64, trial: u64) -> u64 {
    splitmix(splitmix(splitmix(base) ^ cell) ^ trial.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Output of one method on one unit.
struct Outcome {
    value: f64,
    runtime_ms: f64,
    converged: bool,
}

impl Outcome {
    fn failed(runtime_ms: f64) -> Self {
        Self {
            value: f64::NAN,
            runtime_ms,
            converged: false,
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64() * 1e3)
}

/// Runs every unit on the global rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let labels = cfg.labels();
    let units: Vec<(usize, usize, usize)> = (0..cfg.n.len())
        .flat_map(|ni| (0..cfg.params.len()).flat_map(move |pi| (0..cfg.trials).map(move |t| (ni, pi, t))))
        .collect();
    let rows: Vec<ResultRow> = units
        .par_iter()
        .map(|&(ni, pi, trial)| {
            let (n, c) = (cfg.n[ni], cfg.params[pi]);
            let cell = (ni * cfg.params.len() + pi) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(cfg.seed, cell, trial as u64));
            let outcomes = run_unit(cfg, n, c, &mut rng)
                .unwrap_or_else(|_| labels.iter().map(|_| Outcome::failed(0.0)).collect());
            labels
                .iter()
                .zip(outcomes)
                .map(|(label, o)| ResultRow {
                    n,
                    method: label.clone(),
                    param: c,
                    trial,
                    value: o.value,
                    runtime_ms: if cfg.record_runtime { o.runtime_ms } else { 0.0 },
                    converged: o.converged,
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    let aggregates = aggregate(&rows, cfg.ci_level, cfg.resamples, cfg.seed);
    Ok(ExperimentResult { rows, aggregates })
}

/// Same as [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(cfg))
}

/// One outcome per label of `cfg.labels()`, in that order. Errors here mean
/// the data could not be generated.
fn run_unit(cfg: &ExperimentConfig, n: usize, c: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Outcome>> {
    match cfg.task {
        Task::Support => support_unit(cfg, n, c, rng),
        Task::Refine => refine_unit(cfg, n, c, rng),
        Task::Tau => tau_unit(cfg, n, c, rng),
        Task::Path => path_unit(cfg, n, c, rng),
    }
}

fn noise_spec(cfg: &ExperimentConfig, n: usize, c: f64) -> Result<NoiseSpec> {
    let mut spec = match cfg.noise {
        crate::model::NoiseFamily::GaussianEntryHetero | crate::model::NoiseFamily::GaussianRowHetero => {
            NoiseSpec::heteroscedastic(cfg.noise, cfg.sigma_min, cfg.sigma_max)
        }
        family => NoiseSpec::new(family, cfg.sigma.eval(n, 0, c)?),
    };
    if let Some(l) = cfg.truncation {
        spec = spec.with_truncation(l);
    }
    spec.validate()?;
    Ok(spec)
}

/// `U*`, magnitude-sorted eigenvalues, and the first row outside the coherent block.
fn low_rank_part(cfg: &ExperimentConfig, n: usize, c: f64, rng: &mut ChaCha8Rng) -> Result<(Matrix, Vec<f64>, usize)> {
    let mu = cfg.mu.eval(n, 0, c)?;
    let (u, _) = generate_ustar(n, cfg.r, mu, rng)?;
    let mut lam = (1..=cfg.r)
        .map(|i| cfg.eigenvalues.eval(n, i, c))
        .collect::<Result<Vec<f64>>>()?;
    lam.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    let top = (n as f64 / mu).floor() as usize;
    let top = if n - top < cfg.r { 0 } else { top };
    Ok((u, lam, top))
}

fn support_size(cfg: &ExperimentConfig, n: usize, c: f64) -> Result<usize> {
    Ok(cfg.m.eval(n, 0, c)?.round() as usize)
}

fn support_unit(cfg: &ExperimentConfig, n: usize, c: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Outcome>> {
    let spec = noise_spec(cfg, n, c)?;
    let r = cfg.r;
    let (u, lam, top) = if cfg.low_rank {
        low_rank_part(cfg, n, c, rng)?
    } else {
        (Matrix::identity(n, r), vec![0.0; r], 0)
    };
    let pert: Perturbation = match cfg.perturbation {
        PerturbationKind::Gaussian => {
            let m = support_size(cfg, n, c)?;
            let candidates: Vec<usize> = match cfg.placement {
                Placement::Random => (0..n).collect(),
                Placement::LowBlock => (top..n).collect(),
            };
            generate_bstar_within(n, m, cfg.sigma_b.eval(n, 0, c)?, &candidates, rng)?
        }
        PerturbationKind::Adversarial => generate_bstar_adversarial(n, rng)?.perturbation,
    };
    let truth_support = pert.support.clone();
    let m = truth_support.len();
    let truth = Arc::new(GroundTruth::new(u, lam, vec![pert])?);
    let obs = assemble_observations(truth, &spec, cfg.control_copies, cfg.treated_copies, Assignment::Shared, rng)?;
    let dec = if cfg.low_rank {
        spectral_init(&obs.g0, r)?
    } else {
        RankRDecomposition::symmetric(Matrix::zeros(n, r), vec![0.0; r])
    };
    let tau = estimate_noise_scale(&obs.g0[0], &dec, cfg.c_s).ok();
    let opts = RecoverOptions {
        sdp: cfg.sdp.clone(),
        glasso: cfg.glasso.clone(),
        path_points: cfg.path_points,
    };
    let variants: Vec<bool> = match cfg.screening {
        Screening::On => vec![true],
        Screening::Off => vec![false],
        Screening::Both => vec![true, false],
    };
    let all: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for screen in variants {
        let kept = if screen {
            select_low_coherence(&dec, cfg.c_screen).map(|s| s.kept)
        } else {
            Ok(all.clone())
        };
        let residuals = kept.and_then(|kept| {
            obs.g1
                .iter()
                .map(|y| form_residual(y, &dec, &kept))
                .collect::<Result<Vec<_>>>()
        });
        for name in &cfg.methods {
            let method: SupportMethod = name.parse()?;
            let Ok(res) = &residuals else {
                out.push(Outcome::failed(0.0));
                continue;
            };
            let mats: Vec<SymmetricMatrix> = res.iter().map(|r| r.matrix.clone()).collect();
            let (rec, ms) = timed(|| support::recover(method, &mats, m, tau, &opts));
            out.push(match rec {
                Ok(rec) => Outcome {
                    value: support::fnr(&rec.estimate.translated(&res[0]), &truth_support)?,
                    runtime_ms: ms,
                    converged: rec.converged,
                },
                Err(_) => Outcome::failed(ms),
            });
        }
    }
    Ok(out)
}

fn refine_unit(cfg: &ExperimentConfig, n: usize, c: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Outcome>> {
    let spec = noise_spec(cfg, n, c)?;
    let (u, lam, _) = low_rank_part(cfg, n, c, rng)?;
    let truth = GroundTruth::new(u, lam, vec![])?;
    let mstar = truth.mstar();
    let copies = (0..4)
        .map(|_| {
            let w = sample_noise(n, &spec, rng)?;
            Ok(SymmetricMatrix::from_upper(mstar.as_matrix() + w.as_matrix()))
        })
        .collect::<Result<Vec<_>>>()?;
    let inputs = RefineInputs {
        upper: &copies[0..1],
        lower: &copies[1..2],
        extra: Some((&copies[2], &copies[3])),
    };
    let mut cache: Vec<(Estimator, Result<Refined>, f64)> = Vec::new();
    let mut out = Vec::new();
    for name in &cfg.methods {
        let est = match name.as_str() {
            "spec" | "uspec" => Estimator::Spec,
            "mhat1" | "uhat" => Estimator::Mhat1,
            _ => Estimator::Mhat2,
        };
        if !cache.iter().any(|(e, _, _)| *e == est) {
            let (res, ms) = timed(|| refine::refine(est, &inputs, cfg.r));
            cache.push((est, res, ms));
        }
        let (_, res, ms) = cache.iter().find(|(e, _, _)| *e == est).expect("just inserted");
        let value = res.as_ref().ok().and_then(|refd| {
            match name.as_str() {
                "spec" | "mhat1" | "mhat2" => refine::error_linf(&refd.matrix, &mstar),
                _ if refd.per_column => refine::error_2inf_signed(&refd.basis, truth.basis()),
                _ => refine::error_2inf(&refd.basis, truth.basis()),
            }
            .ok()
        });
        out.push(match value {
            Some(v) => Outcome {
                value: v,
                runtime_ms: *ms,
                converged: true,
            },
            None => Outcome::failed(*ms),
        });
    }
    Ok(out)
}

fn tau_unit(cfg: &ExperimentConfig, n: usize, c: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Outcome>> {
    let spec = noise_spec(cfg, n, c)?;
    let (u, lam, _) = low_rank_part(cfg, n, c, rng)?;
    let truth = Arc::new(GroundTruth::new(u, lam, vec![])?);
    let obs = assemble_observations(truth, &spec, 1, 0, Assignment::PerSubject, rng)?;
    let (tau, ms) = timed(|| {
        let dec = spectral_init(&obs.g0, cfg.r)?;
        estimate_noise_scale(&obs.g0[0], &dec, cfg.c_s)
    });
    let o = match tau {
        Ok(t) => Outcome {
            value: t / spec.sigma,
            runtime_ms: ms,
            converged: true,
        },
        Err(_) => Outcome::failed(ms),
    };
    Ok(vec![o])
}

fn path_unit(cfg: &ExperimentConfig, n: usize, c: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Outcome>> {
    let spec = noise_spec(cfg, n, c)?;
    let m = support_size(cfg, n, c)?;
    let pert = generate_bstar_within(n, m, cfg.sigma_b.eval(n, 0, c)?, &(0..n).collect::<Vec<_>>(), rng)?;
    let w = sample_noise(n, &spec, rng)?;
    let y = SymmetricMatrix::from_upper(pert.matrix.as_matrix() + w.as_matrix());
    let mut plain: Option<(Result<glasso::GroupLassoPath>, f64)> = None;
    let mut out = Vec::new();
    for name in &cfg.methods {
        let o = match name.as_str() {
            "slope" => {
                let mut z = y.as_matrix().clone();
                z.fill_diagonal(0.0);
                let yz = SymmetricMatrix::from_upper(z);
                let (path, ms) = timed(|| {
                    glasso::group_lasso_path(&yz, &glasso::row_norm_grid(&yz, cfg.path_points, 0.85), &cfg.glasso)
                });
                match path {
                    Ok(p) => {
                        let slopes = p.all_active_slopes(cfg.glasso.activation_tol);
                        let value = super::stats::median(&slopes);
                        Outcome {
                            value,
                            runtime_ms: ms,
                            converged: value.is_finite() && p.converged.iter().all(|&c| c),
                        }
                    }
                    Err(_) => Outcome::failed(ms),
                }
            }
            _ => {
                if plain.is_none() {
                    plain = Some(timed(|| {
                        glasso::group_lasso_path(&y, &glasso::row_norm_grid(&y, cfg.path_points, 0.85), &cfg.glasso)
                    }));
                }
                let (path, ms) = plain.as_ref().expect("computed above");
                match path {
                    Ok(p) => {
                        let value = if name == "order" {
                            let first = &p.activation_order()[..(m + 1).min(n)];
                            if pert.support.iter().all(|i| first.contains(i)) {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            p.deactivations(1e-6) as f64
                        };
                        Outcome {
                            value,
                            runtime_ms: *ms,
                            converged: p.converged.iter().all(|&c| c),
                        }
                    }
                    Err(_) => Outcome::failed(*ms),
                }
            }
        };
        out.push(o);
    }
    Ok(out)
}
