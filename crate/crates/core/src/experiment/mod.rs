//! Configuration, orchestration and persistence of the five studies.

mod config;
mod output;

pub use config::{
    estimated_cost, nominal_throughput, validate, Diagnostic, ExperimentConfig, Severity, Study,
    OUT_DIR_ENV,
};
pub use output::{num, write_all, Gate, Report, Table};

use std::path::PathBuf;

use crate::constants::{assemble, compute_kappa1};
use crate::error::{Error, Result};
use crate::kernel::{lemma_suprema, verify_ineq_bounds, KernelParams};
use crate::montecarlo::{
    sample_coupled, sample_limit_pair, sample_rate, PathRange, LIMIT_PAIR_PATH_OFFSET,
    MAX_ABORT_FRACTION,
};
use crate::parallel::with_threads;
use crate::solver::{CoupledScheme, TermSelection};
use crate::stats::{
    fit_rate, joint_limit_check, ks_test, normal_cdf, ols, remark_nonconvergence_probe,
    variance_of_n, Check, LimitTargets, Moments, SampleSet,
};

/// Normalized-error variance within this many standard errors in the
/// Gaussian case.
pub const GAUSSIAN_VARIANCE_SE: f64 = 3.0;
/// KS p-value floor in the Gaussian case.
pub const KS_P_MIN: f64 = 0.01;
/// Allowed distance of the fitted rate slope from `-(α+1/2)`.
pub const RATE_SLOPE_TOL_CLASSICAL: f64 = 0.1;
pub const RATE_SLOPE_TOL_FRACTIONAL: f64 = 0.15;
/// Bound on `max/min` of `E[(Y^n)²]` across the mesh list.
pub const MOMENT_RATIO_MAX: f64 = 3.0;
/// Bound on the slope of `ln E[(Y^n)²]` against `ln n`.
pub const MOMENT_TREND_MAX: f64 = 0.1;
/// Required ratio of off-grid to on-grid last-decade oscillation.
pub const REMARK_RATIO_MIN: f64 = 100.0;
/// Required distance of the on-grid variance sequence from `κ₁²`.
pub const REMARK_LIMIT_TOL: f64 = 1e-4;
/// Tolerance of the degenerate constants at `α = 0`.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Tables and report of a finished study.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub report: Report,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report.passed
    }

    /// Writes all artifacts to the resolved output directory.
    pub fn persist(&self) -> Result<Vec<PathBuf>> {
        write_all(
            &self.config.resolved_out(),
            &self.config,
            &self.tables,
            &self.report,
        )
    }
}

/// Validates, runs the study on the configured worker pool, and returns its
/// tables and report without touching the file system.
pub fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    let diags = validate(config);
    let errors: Vec<String> = diags
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.message.clone())
        .collect();
    if !errors.is_empty() {
        return Err(Error::Config(errors.join("; ")));
    }
    let warnings: Vec<Diagnostic> = diags
        .into_iter()
        .filter(|d| d.severity == Severity::Warning)
        .collect();
    let (tables, gates, aborted) = with_threads(config.threads, || match config.study {
        Study::Constants => constants_study(config),
        Study::Rate => rate_study(config),
        Study::Distribution => distribution_study(config),
        Study::Lemmas => lemmas_study(config),
        Study::RemarkProbe => remark_study(config),
    })??;
    let report = Report {
        study: config.study.name().into(),
        seed: config.seed,
        passed: gates.iter().all(|g| g.passed),
        gates,
        aborted_paths: aborted,
        warnings,
    };
    Ok(Outcome {
        config: config.clone(),
        tables,
        report,
    })
}

/// [`execute`] followed by [`Outcome::persist`].
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let outcome = execute(config)?;
    outcome.persist()?;
    Ok(outcome)
}

type StudyResult = Result<(Vec<Table>, Vec<Gate>, usize)>;

fn constants_study(config: &ExperimentConfig) -> StudyResult {
    let mut table = Table::new(
        "constants",
        &[
            "alpha",
            "kappa1",
            "kappa3",
            "kappa4",
            "kappa5",
            "middle_term",
            "kappa2",
            "tol",
            "tail_bound_used",
        ],
    );
    let mut gates = Vec::new();
    for &alpha in &config.alpha {
        let c = assemble(alpha, config.tol)?;
        table.push(vec![
            num(alpha),
            num(c.kappa1),
            num(c.kappa3),
            num(c.kappa4),
            num(c.kappa5),
            num(c.middle_term),
            num(c.kappa2),
            num(c.tol),
            num(c.tail_bound_used),
        ]);
        let radicand = c.kappa3 + c.middle_term + c.kappa4 + c.kappa5;
        let gap = (c.kappa2 * c.kappa2 - radicand).abs();
        gates.push(Gate::new(
            format!("kappa2_identity[alpha={}]", num(alpha)),
            gap,
            0.0,
            4.0 * config.tol,
            gap <= 4.0 * config.tol,
            "|kappa2^2 - (kappa3 + middle + kappa4 + kappa5)|",
        ));
        if alpha == 0.0 {
            let dev = [
                c.kappa1,
                c.kappa3,
                c.kappa4,
                c.kappa5,
                c.kappa2 - std::f64::consts::FRAC_1_SQRT_2,
            ]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
            gates.push(Gate::new(
                "constants_degeneration",
                dev,
                0.0,
                DEGENERATE_TOL,
                dev <= DEGENERATE_TOL,
                "max |kappa_i| and |kappa2 - sqrt(1/2)| at alpha = 0",
            ));
        }
    }
    Ok((vec![table], gates, 0))
}

fn abort_gate(label: &str, aborted: usize, total: usize) -> Gate {
    let frac = if total == 0 {
        0.0
    } else {
        aborted as f64 / total as f64
    };
    Gate::new(
        format!("aborted_paths[{label}]"),
        frac,
        0.0,
        MAX_ABORT_FRACTION,
        frac <= MAX_ABORT_FRACTION,
        format!("{aborted} of {total} paths non-finite"),
    )
}

fn rate_study(config: &ExperimentConfig) -> StudyResult {
    let mut table = Table::new(
        "rate",
        &[
            "alpha",
            "t",
            "n",
            "rms_error",
            "se",
            "second_moment_y",
            "second_moment_y_se",
            "paths",
        ],
    );
    let mut fits = Table::new(
        "rate_fit",
        &["alpha", "t", "slope", "slope_se", "intercept", "expected"],
    );
    let mut gates = Vec::new();
    let mut aborted_total = 0;
    for &alpha in &config.alpha {
        let params = KernelParams::new(alpha, config.n[0], config.horizon)?;
        for &t in &config.t {
            let label = format!("alpha={},t={}", num(alpha), num(t));
            let s = sample_rate(
                &params,
                &config.sigma,
                config.x0,
                &config.n,
                config.refine_factor,
                t,
                config.seed,
                PathRange::new(0, config.paths),
                config.mode,
            )?;
            aborted_total += s.aborted.len();
            gates.push(abort_gate(&label, s.aborted.len(), config.paths));
            let sets = config
                .n
                .iter()
                .zip(&s.abs_error)
                .map(|(&n, v)| {
                    SampleSet::new(
                        "abs_error",
                        alpha,
                        n,
                        t,
                        config.sigma.to_string(),
                        config.seed,
                        0,
                        v.clone(),
                    )
                    .map(|set| (n, set))
                })
                .collect::<Result<Vec<_>>>()?;
            let fit = fit_rate(&sets)?;
            let mut second = Vec::new();
            for (k, &n) in config.n.iter().enumerate() {
                let my = Moments::of(&s.y[k]);
                second.push(my.second_moment);
                table.push(vec![
                    num(alpha),
                    num(t),
                    n.to_string(),
                    num(fit.rms_errors[k]),
                    num(fit.rms_se[k]),
                    num(my.second_moment),
                    num(my.second_moment_se),
                    s.y[k].len().to_string(),
                ]);
            }
            let expected = -(alpha + 0.5);
            let tol = if alpha == 0.0 {
                RATE_SLOPE_TOL_CLASSICAL
            } else {
                RATE_SLOPE_TOL_FRACTIONAL
            };
            fits.push(vec![
                num(alpha),
                num(t),
                num(fit.slope),
                num(fit.slope_se),
                num(fit.intercept),
                num(expected),
            ]);
            let dev = (fit.slope - expected).abs();
            gates.push(Gate::new(
                format!("strong_rate_slope[{label}]"),
                fit.slope,
                expected,
                tol,
                dev <= tol,
                format!("slope {} +/- {}", num(fit.slope), num(fit.slope_se)),
            ));
            let hi = second.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = second.iter().cloned().fold(f64::INFINITY, f64::min);
            let ratio = hi / lo;
            gates.push(Gate::new(
                format!("moment_ratio[{label}]"),
                ratio,
                1.0,
                MOMENT_RATIO_MAX,
                ratio < MOMENT_RATIO_MAX,
                "max/min of E[(Y^n)^2] over the n list",
            ));
            let lx: Vec<f64> = config.n.iter().map(|&n| (n as f64).ln()).collect();
            let ly: Vec<f64> = second.iter().map(|v| v.ln()).collect();
            let trend = ols(&lx, &ly)?.slope;
            gates.push(Gate::new(
                format!("moment_trend[{label}]"),
                trend,
                0.0,
                MOMENT_TREND_MAX,
                trend <= MOMENT_TREND_MAX,
                "slope of ln E[(Y^n)^2] against ln n",
            ));
        }
    }
    Ok((vec![table, fits], gates, aborted_total))
}

fn check_row(table: &mut Table, alpha: f64, n: usize, t: f64, c: &Check) {
    table.push(vec![
        num(alpha),
        n.to_string(),
        num(t),
        c.name.clone(),
        num(c.measured),
        num(c.measured_se),
        num(c.target),
        num(c.target_se),
        num(c.tolerance),
        c.passed.to_string(),
    ]);
}

fn distribution_study(config: &ExperimentConfig) -> StudyResult {
    let mut table = Table::new(
        "distribution",
        &[
            "alpha",
            "n",
            "t",
            "statistic",
            "measured",
            "measured_se",
            "target",
            "target_se",
            "tolerance",
            "passed",
        ],
    );
    let mut gates = Vec::new();
    let mut aborted_total = 0;
    let sigma = config.sigma;
    for &alpha in &config.alpha {
        for &t in &config.t {
            let targets = if sigma.is_constant() {
                None
            } else {
                let consts = assemble(alpha, config.tol)?;
                let lp_params = KernelParams::new(alpha, config.limit_pair_n, config.horizon)?;
                let lp = sample_limit_pair(
                    &lp_params,
                    &sigma,
                    config.x0,
                    consts.kappa2,
                    t,
                    config.seed,
                    PathRange::new(LIMIT_PAIR_PATH_OFFSET, config.limit_pair_paths()),
                    config.mode,
                )?;
                aborted_total += lp.aborted.len();
                gates.push(abort_gate(
                    &format!("limit_pair,alpha={},t={}", num(alpha), num(t)),
                    lp.aborted.len(),
                    config.limit_pair_paths(),
                ));
                let ms = Moments::of(&lp.sigma_sq);
                let my = Moments::of(&lp.y_inf);
                Some((
                    consts,
                    LimitTargets {
                        mean_sigma_sq: ms.mean,
                        mean_sigma_sq_se: ms.mean_se,
                        var_y_inf: my.variance,
                        var_y_inf_se: my.variance_se,
                    },
                ))
            };
            for &n in &config.n {
                let params = KernelParams::new(alpha, n, config.horizon)?;
                let jt = params.grid_index(t)?;
                let label = format!("alpha={},n={n},t={}", num(alpha), num(t));
                match &targets {
                    None => {
                        // exact in law at any cell size, so the coarse cells suffice
                        let scheme = CoupledScheme::new(&params, 1)?;
                        let s = sample_coupled(
                            &scheme,
                            &sigma,
                            config.x0,
                            config.seed,
                            PathRange::new(0, config.paths),
                            jt,
                            TermSelection::A_ONLY,
                            config.mode,
                        )?;
                        aborted_total += s.aborted.len();
                        gates.push(abort_gate(&label, s.aborted.len(), config.paths));
                        let c = sigma.sigma(config.x0);
                        let target = c * c * variance_of_n(&params, t)?;
                        let set = SampleSet::new(
                            "Y",
                            alpha,
                            n,
                            t,
                            sigma.to_string(),
                            config.seed,
                            0,
                            s.a,
                        )?;
                        let m = set.moments();
                        let mut var_check = Check {
                            name: "variance_vs_variance_of_n".into(),
                            measured: m.variance,
                            measured_se: m.variance_se,
                            target,
                            target_se: 0.0,
                            z: if m.variance_se > 0.0 {
                                (m.variance - target) / m.variance_se
                            } else {
                                0.0
                            },
                            rel_diff: (m.variance - target).abs()
                                / target.abs().max(f64::MIN_POSITIVE),
                            tolerance: GAUSSIAN_VARIANCE_SE,
                            passed: false,
                        };
                        var_check.passed = var_check.z.abs() <= GAUSSIAN_VARIANCE_SE;
                        check_row(&mut table, alpha, n, t, &var_check);
                        gates.push(Gate::new(
                            format!("gaussian_variance[{label}]"),
                            m.variance,
                            target,
                            GAUSSIAN_VARIANCE_SE * m.variance_se,
                            var_check.passed,
                            format!("z = {}", num(var_check.z)),
                        ));
                        let sd = target.sqrt();
                        let ks = if sd > 0.0 {
                            ks_test(&set, |x| normal_cdf(x / sd))?
                        } else {
                            ks_test(&set, |x| if x < 0.0 { 0.0 } else { 1.0 })?
                        };
                        let ks_check = Check {
                            name: "ks_p_value".into(),
                            measured: ks.p_value,
                            measured_se: 0.0,
                            target: KS_P_MIN,
                            target_se: 0.0,
                            z: 0.0,
                            rel_diff: ks.statistic,
                            tolerance: KS_P_MIN,
                            passed: ks.p_value > KS_P_MIN,
                        };
                        check_row(&mut table, alpha, n, t, &ks_check);
                        gates.push(Gate::new(
                            format!("gaussian_ks[{label}]"),
                            ks.p_value,
                            KS_P_MIN,
                            KS_P_MIN,
                            ks_check.passed,
                            format!("D = {}", num(ks.statistic)),
                        ));
                    }
                    Some((consts, lt)) => {
                        let scheme = CoupledScheme::new(&params, config.refine_factor)?;
                        let s = sample_coupled(
                            &scheme,
                            &sigma,
                            config.x0,
                            config.seed,
                            PathRange::new(0, config.paths),
                            jt,
                            TermSelection::ALL,
                            config.mode,
                        )?;
                        aborted_total += s.aborted.len();
                        gates.push(abort_gate(&label, s.aborted.len(), config.paths));
                        let y1: Vec<f64> = s.c.iter().zip(&s.z).map(|(c, z)| c + z).collect();
                        let rep = joint_limit_check(&s.a, &y1, consts, lt)?;
                        let checks = [
                            ("joint_kernel_error", &rep.kernel_error),
                            ("joint_propagated_error", &rep.propagated_error),
                            ("joint_correlation", &rep.correlation),
                            ("joint_additivity", &rep.additivity),
                        ];
                        for (gate, c) in checks {
                            check_row(&mut table, alpha, n, t, c);
                            gates.push(Gate::new(
                                format!("{gate}[{label}]"),
                                c.measured,
                                c.target,
                                c.tolerance,
                                c.passed,
                                format!("rel diff {}", num(c.rel_diff)),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok((vec![table], gates, aborted_total))
}

fn lemmas_study(config: &ExperimentConfig) -> StudyResult {
    let mut table = Table::new(
        "lemmas",
        &[
            "alpha",
            "n",
            "sup_ratio_full",
            "sup_ratio_cut",
            "sup_psi1",
            "sup_psi2",
        ],
    );
    let mut slopes = Table::new(
        "lemma_trends",
        &["alpha", "quantity", "slope", "limit", "passed"],
    );
    let mut gates = Vec::new();
    for &alpha in &config.alpha {
        let ineq = verify_ineq_bounds(alpha, &config.n, config.delta)?;
        let lem = lemma_suprema(alpha, &config.n, config.grid_points)?;
        for (a, b) in ineq.rows.iter().zip(&lem.rows) {
            table.push(vec![
                num(alpha),
                a.n.to_string(),
                num(a.sup_ratio_full),
                num(a.sup_ratio_cut),
                num(b.sup_psi1),
                num(b.sup_psi2),
            ]);
        }
        let limit = crate::kernel::TREND_SLOPE_LIMIT;
        for (q, slope) in [
            ("ineq_full", ineq.slope_full),
            ("ineq_cut", ineq.slope_cut),
            ("psi1_l2", lem.slope_psi1),
            ("psi2_l2", lem.slope_psi2),
        ] {
            let passed = slope.is_finite() && slope <= limit;
            slopes.push(vec![
                num(alpha),
                q.into(),
                num(slope),
                num(limit),
                passed.to_string(),
            ]);
            gates.push(Gate::new(
                format!("lemma_trend[{q},alpha={}]", num(alpha)),
                slope,
                0.0,
                limit,
                passed,
                "least-squares slope of the supremum against ln n",
            ));
        }
    }
    Ok((vec![table, slopes], gates, 0))
}

fn remark_study(config: &ExperimentConfig) -> StudyResult {
    let mut table = Table::new(
        "remark",
        &["alpha", "n", "var_offgrid", "var_grid", "kappa1_sq"],
    );
    let mut gates = Vec::new();
    for &alpha in &config.alpha {
        let off = remark_nonconvergence_probe(alpha, config.remark_t, &config.n)?;
        let on = remark_nonconvergence_probe(alpha, 1.0, &config.n)?;
        let k1 = compute_kappa1(alpha, config.tol)?;
        let k1sq = k1 * k1;
        for (a, b) in off.rows.iter().zip(&on.rows) {
            table.push(vec![
                num(alpha),
                a.0.to_string(),
                num(a.1),
                num(b.1),
                num(k1sq),
            ]);
        }
        let ratio = if on.last_decade_oscillation > 0.0 {
            off.last_decade_oscillation / on.last_decade_oscillation
        } else {
            f64::INFINITY
        };
        gates.push(Gate::new(
            format!("remark_oscillation_ratio[alpha={}]", num(alpha)),
            ratio,
            REMARK_RATIO_MIN,
            REMARK_RATIO_MIN,
            ratio >= REMARK_RATIO_MIN,
            format!(
                "off-grid range {} vs grid range {}",
                num(off.last_decade_oscillation),
                num(on.last_decade_oscillation)
            ),
        ));
        let last = on.rows.last().map(|r| r.1).unwrap_or(f64::NAN);
        let gap = (last - k1sq).abs();
        gates.push(Gate::new(
            format!("remark_grid_limit[alpha={}]", num(alpha)),
            gap,
            0.0,
            REMARK_LIMIT_TOL,
            gap <= REMARK_LIMIT_TOL,
            format!(
                "variance at n = {} against kappa1^2 = {}",
                on.rows.last().map(|r| r.0).unwrap_or(0),
                num(k1sq)
            ),
        ));
    }
    Ok((vec![table], gates, 0))
}
