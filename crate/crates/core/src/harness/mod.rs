//! Seeded Monte-Carlo experiments over synthetic data.
//!
//! An [`ExperimentConfig`] describes a grid of dimensions `n` and parameter
//! points `c`; every (n, c, trial) unit draws one dataset from its own RNG
//! stream and scores each configured method on it. Results come back in
//! grid order whatever the thread count.

pub mod config;
mod presets;
mod run;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub use config::{parse_config_text, read_config_map, ConfigMap, Rule};
pub use presets::{preset, PRESETS};
pub use run::{child_seed, run_experiment, run_experiment_with_threads};
pub use stats::bootstrap_ci;

use crate::error::{Error, Result};
use crate::model::NoiseFamily;
use crate::support::{GroupLassoOptions, SdpOptions};

/// What a trial measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    /// FNR of support selectors after spectral initialization.
    Support,
    /// Entrywise and eigenspace errors of the refined low-rank estimators.
    Refine,
    /// Ratio of the estimated noise scale to the true one.
    Tau,
    /// Group-lasso solution path diagnostics on `Y = B* + W`.
    Path,
}

impl Task {
    /// Metric names accepted in `methods` for this task.
    pub fn methods(self) -> &'static [&'static str] {
        match self {
            Task::Support => &["sdp", "sdp-trunc", "sdp-multi", "glasso", "hard", "lse"],
            Task::Refine => &["spec", "mhat1", "mhat2", "uspec", "uhat", "upsi"],
            Task::Tau => &["tau"],
            Task::Path => &["order", "deactivations", "slope"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Screening {
    On,
    Off,
    /// Every method runs twice; the unscreened run is labelled `<method>-noscreen`.
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    Random,
    /// Support drawn from the rows outside the coherent block of `U*`.
    LowBlock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbationKind {
    Gaussian,
    Adversarial,
}

macro_rules! keyword_enum {
    ($ty:ty, $($name:literal => $v:expr),+ $(,)?) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                $(if self == $v { return $name; })+
                unreachable!()
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($v),)+
                    _ => Err(Error::Config(format!("unknown value `{s}`"))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

keyword_enum!(Task, "support" => Task::Support, "refine" => Task::Refine, "tau" => Task::Tau, "path" => Task::Path);
keyword_enum!(Screening, "on" => Screening::On, "off" => Screening::Off, "both" => Screening::Both);
keyword_enum!(Placement, "random" => Placement::Random, "low-block" => Placement::LowBlock);
keyword_enum!(PerturbationKind, "gaussian" => PerturbationKind::Gaussian, "adversarial" => PerturbationKind::Adversarial);

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub task: Task,
    pub n: Vec<usize>,
    pub r: usize,
    /// Eigenvalue `i` (1-based) as a rule in `n`, `i`, `c`.
    pub eigenvalues: Rule,
    pub mu: Rule,
    pub m: Rule,
    pub sigma_b: Rule,
    pub noise: NoiseFamily,
    pub sigma: Rule,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub truncation: Option<f64>,
    pub methods: Vec<String>,
    /// Values of the swept parameter `c`.
    pub params: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub screening: Screening,
    pub placement: Placement,
    pub perturbation: PerturbationKind,
    /// When false `M* = 0` and residuals are the raw observations.
    pub low_rank: bool,
    pub control_copies: usize,
    pub treated_copies: usize,
    pub c_screen: f64,
    pub c_s: f64,
    pub sdp: SdpOptions,
    pub glasso: GroupLassoOptions,
    pub path_points: usize,
    /// Wall-clock times make output non-reproducible; off writes zeros.
    pub record_runtime: bool,
    pub ci_level: f64,
    pub resamples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let rule = |s: &str| Rule::parse(s).expect("built-in rule parses");
        Self {
            name: "custom".into(),
            task: Task::Support,
            n: vec![300],
            r: 3,
            eigenvalues: rule("3*sqrt(n) + (3 - i)*ln(n)"),
            mu: rule("ln(n)"),
            m: rule("10"),
            sigma_b: rule("2*n^(-1/4)*ln(n)^(1/4)"),
            noise: NoiseFamily::GaussianIid,
            sigma: rule("1"),
            sigma_min: 0.8,
            sigma_max: 1.3,
            truncation: None,
            methods: vec!["sdp".into()],
            params: vec![0.0],
            trials: 20,
            seed: 1,
            screening: Screening::On,
            placement: Placement::Random,
            perturbation: PerturbationKind::Gaussian,
            low_rank: true,
            control_copies: 1,
            treated_copies: 1,
            c_screen: crate::spectral::DEFAULT_C_SCREEN,
            c_s: crate::spectral::DEFAULT_C_S,
            sdp: SdpOptions::default(),
            glasso: GroupLassoOptions::default(),
            path_points: 60,
            record_runtime: true,
            ci_level: 0.95,
            resamples: stats::DEFAULT_RESAMPLES,
        }
    }
}

const KEYS: &[&str] = &[
    "preset",
    "name",
    "task",
    "n",
    "r",
    "eigenvalues",
    "mu",
    "m",
    "sigma_b",
    "noise",
    "sigma",
    "sigma_min",
    "sigma_max",
    "truncation",
    "methods",
    "params",
    "trials",
    "seed",
    "screening",
    "placement",
    "perturbation",
    "low_rank",
    "control_copies",
    "treated_copies",
    "c_screen",
    "c_s",
    "sdp_rank",
    "sdp_feas_tol",
    "sdp_obj_tol",
    "sdp_restarts",
    "sdp_max_outer",
    "sdp_max_inner",
    "sdp_seed",
    "gl_rho",
    "gl_tol",
    "gl_max_iter",
    "gl_activation_tol",
    "path_points",
    "record_runtime",
    "ci_level",
    "resamples",
];

fn list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

fn boolean(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, found `{s}`")),
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Builds a config from parsed key/value pairs. A `preset` key selects the
    /// starting point; every other key overrides it.
    pub fn from_map(map: &ConfigMap, path: &Path) -> Result<Self> {
        let fail = |key: &str, message: String| Error::Parse {
            path: path.to_path_buf(),
            line: map.line(key),
            message: format!("{key}: {message}"),
        };
        for key in map.entries.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(fail(key, "unknown key".into()));
            }
        }
        let mut cfg = match map.get("preset") {
            Some(p) => preset(p).map_err(|e| fail("preset", e.to_string()))?,
            None => Self::default(),
        };
        macro_rules! set {
            ($key:literal, $field:expr, $conv:expr) => {
                if let Some(v) = map.get($key) {
                    $field = ($conv)(v).map_err(|e| fail($key, e.to_string()))?;
                }
            };
        }
        let num = |v: &str| v.parse::<f64>().map_err(|e| e.to_string());
        let int = |v: &str| v.parse::<usize>().map_err(|e| e.to_string());
        let rule = |v: &str| Rule::parse(v).map_err(|e| e.to_string());
        set!("name", cfg.name, |v: &str| Ok::<_, String>(v.to_string()));
        set!("task", cfg.task, |v: &str| v.parse::<Task>());
        set!("n", cfg.n, list::<usize>);
        set!("r", cfg.r, int);
        set!("eigenvalues", cfg.eigenvalues, rule);
        set!("mu", cfg.mu, rule);
        set!("m", cfg.m, rule);
        set!("sigma_b", cfg.sigma_b, rule);
        set!("noise", cfg.noise, |v: &str| v.parse::<NoiseFamily>());
        set!("sigma", cfg.sigma, rule);
        set!("sigma_min", cfg.sigma_min, num);
        set!("sigma_max", cfg.sigma_max, num);
        set!("truncation", cfg.truncation, |v: &str| {
            if v == "none" {
                Ok(None)
            } else {
                num(v).map(Some)
            }
        });
        set!("methods", cfg.methods, list::<String>);
        set!("params", cfg.params, list::<f64>);
        set!("trials", cfg.trials, int);
        set!("seed", cfg.seed, |v: &str| v.parse::<u64>().map_err(|e| e.to_string()));
        set!("screening", cfg.screening, |v: &str| v.parse::<Screening>());
        set!("placement", cfg.placement, |v: &str| v.parse::<Placement>());
        set!("perturbation", cfg.perturbation, |v: &str| v.parse::<PerturbationKind>());
        set!("low_rank", cfg.low_rank, boolean);
        set!("control_copies", cfg.control_copies, int);
        set!("treated_copies", cfg.treated_copies, int);
        set!("c_screen", cfg.c_screen, num);
        set!("c_s", cfg.c_s, num);
        set!("sdp_rank", cfg.sdp.rank, int);
        set!("sdp_feas_tol", cfg.sdp.feas_tol, num);
        set!("sdp_obj_tol", cfg.sdp.obj_tol, num);
        set!("sdp_restarts", cfg.sdp.restarts, int);
        set!("sdp_max_outer", cfg.sdp.max_outer, int);
        set!("sdp_max_inner", cfg.sdp.max_inner, int);
        set!("sdp_seed", cfg.sdp.seed, |v: &str| v.parse::<u64>().map_err(|e| e.to_string()));
        set!("gl_rho", cfg.glasso.rho, num);
        set!("gl_tol", cfg.glasso.tol, num);
        set!("gl_max_iter", cfg.glasso.max_iter, int);
        set!("gl_activation_tol", cfg.glasso.activation_tol, num);
        set!("path_points", cfg.path_points, int);
        set!("record_runtime", cfg.record_runtime, boolean);
        set!("ci_level", cfg.ci_level, num);
        set!("resamples", cfg.resamples, int);
        cfg.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    /// Full key/value form; `from_map(to_map(cfg)) == cfg`.
    pub fn to_map(&self) -> ConfigMap {
        let mut m = ConfigMap::default();
        m.insert("name", self.name.clone());
        m.insert("task", self.task.name());
        m.insert("n", join(&self.n));
        m.insert("r", self.r.to_string());
        m.insert("eigenvalues", self.eigenvalues.text());
        m.insert("mu", self.mu.text());
        m.insert("m", self.m.text());
        m.insert("sigma_b", self.sigma_b.text());
        m.insert("noise", self.noise.name());
        m.insert("sigma", self.sigma.text());
        m.insert("sigma_min", format!("{:?}", self.sigma_min));
        m.insert("sigma_max", format!("{:?}", self.sigma_max));
        m.insert(
            "truncation",
            self.truncation.map_or("none".to_string(), |t| format!("{t:?}")),
        );
        m.insert("methods", self.methods.join(", "));
        m.insert(
            "params",
            self.params.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>().join(", "),
        );
        m.insert("trials", self.trials.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("screening", self.screening.name());
        m.insert("placement", self.placement.name());
        m.insert("perturbation", self.perturbation.name());
        m.insert("low_rank", self.low_rank.to_string());
        m.insert("control_copies", self.control_copies.to_string());
        m.insert("treated_copies", self.treated_copies.to_string());
        m.insert("c_screen", format!("{:?}", self.c_screen));
        m.insert("c_s", format!("{:?}", self.c_s));
        m.insert("sdp_rank", self.sdp.rank.to_string());
        m.insert("sdp_feas_tol", format!("{:?}", self.sdp.feas_tol));
        m.insert("sdp_obj_tol", format!("{:?}", self.sdp.obj_tol));
        m.insert("sdp_restarts", self.sdp.restarts.to_string());
        m.insert("sdp_max_outer", self.sdp.max_outer.to_string());
        m.insert("sdp_max_inner", self.sdp.max_inner.to_string());
        m.insert("sdp_seed", self.sdp.seed.to_string());
        m.insert("gl_rho", format!("{:?}", self.glasso.rho));
        m.insert("gl_tol", format!("{:?}", self.glasso.tol));
        m.insert("gl_max_iter", self.glasso.max_iter.to_string());
        m.insert("gl_activation_tol", format!("{:?}", self.glasso.activation_tol));
        m.insert("path_points", self.path_points.to_string());
        m.insert("record_runtime", self.record_runtime.to_string());
        m.insert("ci_level", format!("{:?}", self.ci_level));
        m.insert("resamples", self.resamples.to_string());
        m
    }

    /// Checks counts, method names, and that every rule is positive where it
    /// has to be for each listed `n` and parameter point.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n.is_empty() || self.params.is_empty() || self.methods.is_empty() {
            return bad("n, params and methods must be nonempty".into());
        }
        if let Some(m) = self.methods.iter().find(|m| !self.task.methods().contains(&m.as_str())) {
            return bad(format!(
                "method `{m}` is not available for task `{}` (expected one of {})",
                self.task,
                self.task.methods().join(", ")
            ));
        }
        if self.r == 0 || self.control_copies == 0 || self.treated_copies == 0 {
            return bad("r and copy counts must be positive".into());
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) || self.resamples == 0 {
            return bad("ci_level must be in (0, 1) and resamples positive".into());
        }
        for &n in &self.n {
            if n <= self.r {
                return bad(format!("n = {n} must exceed r = {}", self.r));
            }
            for &c in &self.params {
                let positive = |rule: &Rule, what: &str, i: usize| -> Result<f64> {
                    let v = rule.eval(n, i, c)?;
                    if v > 0.0 {
                        Ok(v)
                    } else {
                        Err(Error::Config(format!("{what} rule `{rule}` gives {v} at n={n}, c={c}")))
                    }
                };
                positive(&self.mu, "mu", 0)?;
                positive(&self.sigma, "sigma", 0)?;
                if self.low_rank || self.task == Task::Refine {
                    for i in 1..=self.r {
                        positive(&self.eigenvalues, "eigenvalue", i)?;
                    }
                }
                if matches!(self.task, Task::Support | Task::Path) && self.perturbation == PerturbationKind::Gaussian {
                    positive(&self.m, "m", 0)?;
                    positive(&self.sigma_b, "sigma_b", 0)?;
                }
            }
        }
        Ok(())
    }

    /// Number of method labels each unit emits.
    pub fn labels(&self) -> Vec<String> {
        let mut out = self.methods.clone();
        if self.task == Task::Support && self.screening == Screening::Both {
            out.extend(self.methods.iter().map(|m| format!("{m}-noscreen")));
        }
        out
    }
}

/// Reads a config file (see [`ExperimentConfig::from_map`]).
pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let map = read_config_map(path)?;
    ExperimentConfig::from_map(&map, path)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub n: usize,
    pub method: String,
    pub param: f64,
    pub trial: usize,
    /// NaN when the trial failed for this method.
    pub value: f64,
    pub runtime_ms: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub method: String,
    pub param: f64,
    /// Trials with a finite value.
    pub count: usize,
    pub failures: usize,
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<Aggregate>,
}

pub const CSV_HEADER: &str = "n,method,param,trial,value,runtime_ms,converged";

impl ExperimentResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n, r.method, r.param, r.trial, r.value, r.runtime_ms, r.converged
            ));
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("n,method,param,count,failures,mean,sd,ci_low,ci_high\n");
        for a in &self.aggregates {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                a.n, a.method, a.param, a.count, a.failures, a.mean, a.sd, a.ci_low, a.ci_high
            ));
        }
        s
    }

    /// The aggregate for one cell, if present.
    pub fn aggregate(&self, n: usize, method: &str, param: f64) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.n == n && a.method == method && a.param == param)
    }

    /// Values of one cell in trial order.
    pub fn values(&self, n: usize, method: &str, param: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.n == n && r.method == method && r.param == param)
            .map(|r| r.value)
            .collect()
    }
}

pub fn write_results(res: &ExperimentResult, path: &Path) -> Result<()> {
    std::fs::write(path, res.to_csv())?;
    Ok(())
}

/// Groups rows by (n, method, param) in first-appearance order.
pub(crate) fn aggregate(rows: &[ResultRow], level: f64, resamples: usize, seed: u64) -> Vec<Aggregate> {
    use rand::SeedableRng;
    let mut order: Vec<(usize, String, u64)> = Vec::new();
    let mut groups: BTreeMap<(usize, String, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.n, r.method.clone(), r.param.to_bits());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .enumerate()
        .map(|(g, key)| {
            let rs = &groups[&key];
            let vals: Vec<f64> = rs.iter().map(|r| r.value).filter(|v| v.is_finite()).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(child_seed(seed ^ 0xB007, g as u64, 0));
            let (ci_low, ci_high) = bootstrap_ci(&vals, level, resamples, &mut rng).unwrap_or((f64::NAN, f64::NAN));
            let mean = if vals.is_empty() { f64::NAN } else { stats::mean(&vals) };
            Aggregate {
                n: key.0,
                method: key.1.clone(),
                param: f64::from_bits(key.2),
                count: vals.len(),
                failures: rs.len() - vals.len(),
                mean,
                sd: stats::sd(&vals),
                ci_low,
                ci_high,
            }
        })
        .collect()
}
