use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientSpec;
use crate::conv::{detected_isa, Isa, LANES};
use crate::error::{Error, Result};
use crate::kernel::{dyadic_list, KernelParams, ALPHA_MARGIN};
use crate::parallel::ExecMode;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SVELAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Constants,
    Rate,
    Distribution,
    Lemmas,
    RemarkProbe,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Constants => "constants",
            Study::Rate => "rate",
            Study::Distribution => "distribution",
            Study::Lemmas => "lemmas",
            Study::RemarkProbe => "remark-probe",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Study {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constants" => Ok(Study::Constants),
            "rate" => Ok(Study::Rate),
            "distribution" => Ok(Study::Distribution),
            "lemmas" => Ok(Study::Lemmas),
            "remark-probe" => Ok(Study::RemarkProbe),
            other => Err(Error::Config(format!("unknown study `{other}`"))),
        }
    }
}

/// Everything a run depends on. Results are a pure function of this value
/// apart from `threads`, `mode` and `out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub study: Study,
    pub alpha: Vec<f64>,
    pub sigma: CoefficientSpec,
    pub x0: f64,
    pub horizon: f64,
    pub t: Vec<f64>,
    pub n: Vec<usize>,
    pub refine_factor: usize,
    pub paths: usize,
    pub seed: u64,
    pub tol: f64,
    /// Mesh of the limiting-pair simulation.
    pub limit_pair_n: usize,
    /// Limiting-pair replicates; defaults to `paths`.
    pub limit_pair_paths: Option<usize>,
    /// Kernel-moment window `δ` of the lemma checks.
    pub delta: f64,
    pub grid_points: usize,
    /// Off-grid time of the remark probe.
    pub remark_t: f64,
    /// Lane-FMA count above which validation warns.
    pub cost_budget: f64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub mode: ExecMode,
}

impl ExperimentConfig {
    /// Preset for each study.
    pub fn preset(study: Study) -> Self {
        let base = Self {
            study,
            alpha: vec![0.25],
            sigma: CoefficientSpec::Affine { a: 1.0, b: 0.3 },
            x0: 1.0,
            horizon: 1.0,
            t: vec![1.0],
            n: vec![256],
            refine_factor: 64,
            paths: 100_000,
            seed: 20240601,
            tol: 1e-8,
            limit_pair_n: 4096,
            limit_pair_paths: None,
            delta: 0.1,
            grid_points: 100,
            remark_t: std::f64::consts::FRAC_1_SQRT_2,
            cost_budget: 2e13,
            out: None,
            threads: None,
            mode: ExecMode::default(),
        };
        match study {
            Study::Constants => Self {
                alpha: vec![-0.45, -0.25, 0.0, 0.25, 0.45],
                ..base
            },
            Study::Rate => Self {
                alpha: vec![-0.25, 0.0, 0.25],
                n: vec![8, 16, 32, 64, 128],
                paths: 1000,
                ..base
            },
            Study::Distribution => base,
            Study::Lemmas => Self {
                alpha: vec![-0.45, -0.25, 0.25, 0.45],
                n: dyadic_list(2, 4096),
                ..base
            },
            Study::RemarkProbe => Self {
                alpha: vec![0.3],
                n: dyadic_list(1 << 6, 1 << 16),
                tol: 1e-10,
                ..base
            },
        }
    }

    pub fn limit_pair_paths(&self) -> usize {
        self.limit_pair_paths.unwrap_or(self.paths)
    }

    pub fn resolved_out(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("svelab-out").join(self.study.name()))
    }

    /// Overlays the fields present in a JSON object.
    pub fn overlay_json(&self, json: &serde_json::Value) -> Result<Self> {
        let obj = json
            .as_object()
            .ok_or_else(|| Error::Config("config file must hold a JSON object".into()))?;
        let mut merged = serde_json::to_value(self)?;
        let target = merged
            .as_object_mut()
            .expect("config serializes to an object");
        for (k, v) in obj {
            target.insert(k.clone(), v.clone());
        }
        serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: String) -> Self {
        Self {
            severity: Severity::Error,
            message,
        }
    }
}

/// Nominal lane-FMA throughput per worker, by instruction set.
pub fn nominal_throughput(isa: Isa) -> f64 {
    match isa {
        Isa::Avx512 => 2.5e10,
        Isa::Avx2 => 6e9,
        Isa::Portable => 3e8,
    }
}

fn padded(paths: usize, width: usize) -> f64 {
    (paths.div_ceil(width) * width) as f64
}

/// Lane-FMA count of the convolution work of a run.
pub fn estimated_cost(config: &ExperimentConfig) -> f64 {
    let tri = |steps: f64| steps * steps / 2.0;
    let h = config.horizon;
    let f = config.refine_factor as f64;
    let alphas = config.alpha.len() as f64;
    match config.study {
        Study::Rate => {
            let per_path: f64 = config
                .n
                .iter()
                .map(|&n| tri(n as f64 * f * h) + tri(n as f64 * h))
                .sum();
            alphas * padded(config.paths, LANES) * per_path
        }
        Study::Distribution => {
            let per_path: f64 = if config.sigma.is_constant() {
                config.n.iter().map(|&n| tri(n as f64 * h)).sum()
            } else {
                config
                    .n
                    .iter()
                    .map(|&n| tri(n as f64 * f * h) + f * tri(n as f64 * h))
                    .sum()
            };
            let pair = if config.sigma.is_constant() {
                0.0
            } else {
                2.0 * padded(config.limit_pair_paths(), LANES / 2)
                    * tri(config.limit_pair_n as f64 * h)
            };
            alphas * (padded(config.paths, LANES) * per_path + pair)
        }
        _ => 0.0,
    }
}

/// All problems with a configuration; an empty list means it can run.
pub fn validate(config: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if config.alpha.is_empty() {
        out.push(Diagnostic::error("alpha list is empty".into()));
    }
    for &a in &config.alpha {
        if !(a.abs() < 0.5 - ALPHA_MARGIN) {
            out.push(Diagnostic::error(format!(
                "alpha = {a} outside (-0.5, 0.5)"
            )));
        }
    }
    if config.n.is_empty() {
        out.push(Diagnostic::error("n list is empty".into()));
    }
    if config.n.contains(&0) {
        out.push(Diagnostic::error("n must be >= 1".into()));
    }
    for w in config.n.windows(2) {
        if w[0] == w[1] {
            out.push(Diagnostic::error(format!("duplicate n = {}", w[0])));
        } else if w[0] > w[1] {
            out.push(Diagnostic::error(format!(
                "n list not increasing at {} > {}",
                w[0], w[1]
            )));
        }
    }
    if config.paths < 1 {
        out.push(Diagnostic::error("paths must be >= 1".into()));
    }
    if config.refine_factor < 2 || !config.refine_factor.is_power_of_two() {
        out.push(Diagnostic::error(format!(
            "refine factor {} must be a power of two >= 2",
            config.refine_factor
        )));
    }
    if !(config.tol > 0.0) {
        out.push(Diagnostic::error(format!(
            "tol = {} must be > 0",
            config.tol
        )));
    }
    if !(config.horizon > 0.0 && config.horizon.is_finite()) {
        out.push(Diagnostic::error(format!(
            "horizon {} must be > 0",
            config.horizon
        )));
    }
    if !config.x0.is_finite() {
        out.push(Diagnostic::error("x0 must be finite".into()));
    }
    if matches!(config.study, Study::Rate | Study::Distribution) {
        if config.t.is_empty() {
            out.push(Diagnostic::error("t list is empty".into()));
        }
        let mut meshes: Vec<usize> = config.n.clone();
        if config.study == Study::Distribution && !config.sigma.is_constant() {
            meshes.push(config.limit_pair_n);
        }
        for &t in &config.t {
            if !(t > 0.0 && t <= config.horizon) {
                out.push(Diagnostic::error(format!("t = {t} outside (0, horizon]")));
                continue;
            }
            for &n in meshes.iter().filter(|n| **n > 0) {
                let on_grid = KernelParams::new(0.0, n, config.horizon)
                    .map(|p| p.is_grid_point(t))
                    .unwrap_or(false);
                if !on_grid {
                    out.push(Diagnostic::error(format!(
                        "t = {t} is not a grid point of n = {n}"
                    )));
                }
            }
        }
        if config.study == Study::Rate {
            if config.n.len() < 3 {
                out.push(Diagnostic::error("rate fit needs at least three n".into()));
            }
            if let Some(&max) = config.n.iter().max() {
                if config.n.iter().any(|&n| n > 0 && max % n != 0) {
                    out.push(Diagnostic::error(
                        "every n must divide the largest n".into(),
                    ));
                }
            }
        }
        let cost = estimated_cost(config);
        if cost > config.cost_budget {
            let workers = config.threads.unwrap_or(1).max(1) as f64;
            let secs = cost / (nominal_throughput(detected_isa()) * workers);
            out.push(Diagnostic {
                severity: Severity::Warning,
                message: format!(
                    "estimated {cost:.3e} lane-FMAs exceeds the budget {:.3e}; about {secs:.0} s",
                    config.cost_budget
                ),
            });
        }
    }
    if config.study == Study::Lemmas && !(config.delta > 0.0) {
        out.push(Diagnostic::error("delta must be > 0".into()));
    }
    if config.threads == Some(0) {
        out.push(Diagnostic::error("threads must be >= 1".into()));
    }
    out
}
