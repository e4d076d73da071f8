use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sve_core::coefficient::CoefficientSpec;
use sve_core::constants::assemble;
use sve_core::experiment::{self, ExperimentConfig, Study};
use sve_core::parallel::ExecMode;

const EXIT_GATE_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "svelab",
    version,
    about = "Euler-scheme studies for stochastic Volterra equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Limit constants for each alpha; prints one JSON object per alpha.
    Constants(Common),
    /// Strong-rate fit of the Euler error against a refined reference.
    Rate(Common),
    /// Law of the normalized error against its predicted limit.
    Distribution(Common),
    /// Boundedness of the kernel-moment bounds over dyadic n.
    Lemmas(Common),
    /// Non-convergence of the variance off the grid.
    RemarkProbe(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Kernel exponents, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
    /// Diffusion coefficient: `const:c`, `affine:a,b` or `sin:a,b`.
    #[arg(long, value_parser = parse_sigma)]
    sigma: Option<CoefficientSpec>,
    /// Mesh sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reference refinement factor.
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory; falls back to the SVELAB_OUT environment variable.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Evaluation times, comma separated.
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    /// Run without the worker pool.
    #[arg(long)]
    sequential: bool,
    /// JSON file whose fields override every flag.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_sigma(s: &str) -> Result<CoefficientSpec, String> {
    s.parse().map_err(|e: sve_core::Error| e.to_string())
}

fn resolve(study: Study, c: &Common) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::preset(study);
    if let Some(v) = &c.alpha {
        cfg.alpha = v.clone();
    }
    if let Some(v) = c.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = &c.n {
        cfg.n = v.clone();
    }
    if let Some(v) = c.paths {
        cfg.paths = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.refine {
        cfg.refine_factor = v;
    }
    if let Some(v) = c.tol {
        cfg.tol = v;
    }
    if let Some(v) = &c.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = c.threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = &c.t {
        cfg.t = v.clone();
    }
    if let Some(v) = c.x0 {
        cfg.x0 = v;
    }
    if c.sequential {
        cfg.mode = ExecMode::Sequential;
    }
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let json: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if let Some(s) = json.get("study").and_then(|v| v.as_str()) {
            if s != study.name() {
                return Err(format!("config file is for `{s}`, not `{study}`"));
            }
        }
        cfg = cfg.overlay_json(&json).map_err(|e| e.to_string())?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (study, common) = match &cli.command {
        Command::Constants(c) => (Study::Constants, c),
        Command::Rate(c) => (Study::Rate, c),
        Command::Distribution(c) => (Study::Distribution, c),
        Command::Lemmas(c) => (Study::Lemmas, c),
        Command::RemarkProbe(c) => (Study::RemarkProbe, c),
    };
    let cfg = match resolve(study, common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = match experiment::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if study == Study::Constants {
        for &a in &cfg.alpha {
            match assemble(a, cfg.tol)
                .map_err(|e| e.to_string())
                .and_then(|c| serde_json::to_string(&c).map_err(|e| e.to_string()))
            {
                Ok(line) => println!("{line}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_USAGE);
                }
            }
        }
    }
    for w in &outcome.report.warnings {
        eprintln!("warning: {}", w.message);
    }
    for g in &outcome.report.gates {
        eprintln!(
            "{} {} measured={} target={} tol={}",
            if g.passed { "PASS" } else { "FAIL" },
            g.name,
            experiment::num(g.measured),
            experiment::num(g.target),
            experiment::num(g.tolerance)
        );
    }
    eprintln!("wrote {}", cfg.resolved_out().display());
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_GATE_FAILED)
    }
}
