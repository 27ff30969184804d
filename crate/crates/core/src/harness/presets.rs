//! Built-in experiments, scaled to run on one machine in minutes.

use super::{ExperimentConfig, Placement, PerturbationKind, Rule, Screening, Task};
use crate::error::{Error, Result};
use crate::model::NoiseFamily;

pub const PRESETS: &[&str] = &[
    "exp-coherence",
    "exp-snr",
    "exp-glfail",
    "table-exp2",
    "exp-multicopy",
    "exp-heavytail",
    "exp-refine",
    "exp-eigengap",
    "exp-path",
    "exp-tau",
];

fn rule(s: &str) -> Rule {
    Rule::parse(s).expect("preset rules parse")
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = ExperimentConfig {
        name: name.to_string(),
        ..ExperimentConfig::default()
    };
    let cfg = match name {
        // Incoherence sweep mu = n^c, with and without the coherence screen.
        "exp-coherence" => ExperimentConfig {
            n: vec![500],
            mu: rule("n^c"),
            params: vec![0.3, 0.5, 0.75],
            methods: strings(&["sdp", "glasso"]),
            screening: Screening::Both,
            placement: Placement::LowBlock,
            ..base
        },
        // Signal scale sigma_B = c n^{-1/4} log^{1/4} n.
        "exp-snr" => ExperimentConfig {
            n: vec![300],
            sigma_b: rule("c*n^(-1/4)*ln(n)^(1/4)"),
            params: vec![0.8, 1.2, 1.6, 2.0, 2.4],
            methods: strings(&["sdp", "glasso"]),
            ..base
        },
        "exp-glfail" | "table-exp2" => ExperimentConfig {
            n: vec![200],
            perturbation: PerturbationKind::Adversarial,
            low_rank: false,
            screening: Screening::Off,
            methods: strings(&["sdp", "glasso", "hard"]),
            trials: 50,
            ..base
        },
        "exp-multicopy" => ExperimentConfig {
            n: vec![400],
            m: rule("ceil(2*ln(n))"),
            noise: NoiseFamily::GaussianRowHetero,
            sigma: rule("1.05"),
            sigma_min: 0.8,
            sigma_max: 1.3,
            low_rank: false,
            screening: Screening::Off,
            treated_copies: 2,
            methods: strings(&["sdp", "sdp-multi"]),
            ..base
        },
        "exp-heavytail" => ExperimentConfig {
            n: vec![400],
            m: rule("ceil(2*ln(n))"),
            noise: NoiseFamily::ScaledT4,
            methods: strings(&["sdp", "sdp-trunc"]),
            ..base
        },
        "exp-refine" => ExperimentConfig {
            task: Task::Refine,
            // n^{4/5} must stay below n / r, which rules out n = 200.
            n: vec![250, 500],
            trials: 10,
            mu: rule("n^(4/5)"),
            eigenvalues: rule("c*sqrt(n) + 2*(3 - i)*ln(n)"),
            params: vec![2.05, 3.0],
            methods: strings(&["spec", "mhat1", "mhat2", "uspec", "uhat", "upsi"]),
            ..base
        },
        // delta_min = log n, delta_max = n^c log n.
        "exp-eigengap" => ExperimentConfig {
            task: Task::Refine,
            n: vec![400],
            mu: rule("sqrt(n)*ln(n)"),
            eigenvalues: rule("3*sqrt(n) + if(i < 3, n^c*ln(n), 0) + if(i < 2, ln(n), 0)"),
            params: vec![0.0, 1.0 / 6.0],
            methods: strings(&["mhat2"]),
            ..base
        },
        "exp-path" => ExperimentConfig {
            task: Task::Path,
            n: vec![300],
            m: rule("5"),
            sigma_b: rule("1.9*n^(-1/4)*ln(n)^(1/4)"),
            low_rank: false,
            screening: Screening::Off,
            methods: strings(&["order", "deactivations", "slope"]),
            ..base
        },
        "exp-tau" => ExperimentConfig {
            task: Task::Tau,
            n: vec![500],
            sigma: rule("c"),
            params: vec![0.5, 1.0, 2.0],
            methods: strings(&["tau"]),
            ..base
        },
        _ => {
            return Err(Error::Config(format!(
                "unknown preset `{name}` (available: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}
