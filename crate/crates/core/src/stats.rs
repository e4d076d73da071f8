//! Statistics over Monte Carlo samples: moments with standard errors, rate
//! fits, Kolmogorov–Smirnov tests, exact Gaussian variance identities and the
//! joint-limit checks.

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::constants::LimitConstants;
use crate::error::{Error, Result};
use crate::kernel::{KernelMoments, KernelParams};

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual-based standard error of the slope; zero for exact data.
    pub slope_se: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let m = x.len();
    if m < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    let mf = m as f64;
    let mx = x.iter().sum::<f64>() / mf;
    let my = y.iter().sum::<f64>() / mf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if m > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (mf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
    })
}

/// Sample moments with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub mean_se: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub variance_se: f64,
    /// `mean(x²)` and its standard error.
    pub second_moment: f64,
    pub second_moment_se: f64,
}

impl Moments {
    /// Sums run in slice order so results do not depend on how the samples
    /// were produced.
    pub fn of(values: &[f64]) -> Self {
        let m = values.len();
        let mf = m as f64;
        let mean = values.iter().sum::<f64>() / mf;
        let (mut c2, mut c4) = (0.0, 0.0);
        let (mut s2, mut s4) = (0.0, 0.0);
        for v in values {
            let d = v - mean;
            let d2 = d * d;
            c2 += d2;
            c4 += d2 * d2;
            let v2 = v * v;
            s2 += v2;
            s4 += v2 * v2;
        }
        let variance = if m > 1 { c2 / (mf - 1.0) } else { 0.0 };
        let mu2 = c2 / mf;
        let mu4 = c4 / mf;
        let var_of_var = if m > 3 {
            ((mu4 - mu2 * mu2 * (mf - 3.0) / (mf - 1.0)) / mf).max(0.0)
        } else {
            0.0
        };
        let second_moment = s2 / mf;
        let sm_var = if m > 1 {
            ((s4 / mf - second_moment * second_moment) / (mf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            count: m,
            mean,
            mean_se: (variance / mf).sqrt(),
            variance,
            variance_se: var_of_var.sqrt(),
            second_moment,
            second_moment_se: sm_var.sqrt(),
        }
    }
}

/// Pearson correlation of paired samples.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Monte Carlo samples of one scalar statistic, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub label: String,
    pub alpha: f64,
    pub n: usize,
    pub t: f64,
    pub sigma: String,
    pub seed: u64,
    pub first_path: u64,
    pub values: Vec<f64>,
}

impl SampleSet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        alpha: f64,
        n: usize,
        t: f64,
        sigma: impl Into<String>,
        seed: u64,
        first_path: u64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSamples("need at least two values".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples(format!("value {i} is not finite")));
        }
        Ok(Self {
            label: label.into(),
            alpha,
            n,
            t,
            sigma: sigma.into(),
            seed,
            first_path,
            values,
        })
    }

    pub fn moments(&self) -> Moments {
        Moments::of(&self.values)
    }

    pub fn rms(&self) -> f64 {
        self.moments().second_moment.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub n_values: Vec<usize>,
    pub rms_errors: Vec<f64>,
    pub rms_se: Vec<f64>,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

/// Least squares of `ln RMS` against `ln n`.
pub fn fit_rate(samples_by_n: &[(usize, SampleSet)]) -> Result<RateFit> {
    let mut ns: Vec<usize> = samples_by_n.iter().map(|(n, _)| *n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 || ns.len() != samples_by_n.len() {
        return Err(Error::DegenerateFit(
            "need at least three distinct mesh sizes".into(),
        ));
    }
    let mut rows: Vec<(usize, f64, f64)> = samples_by_n
        .iter()
        .map(|(n, s)| {
            let m = s.moments();
            let rms = m.second_moment.sqrt();
            let se = if rms > 0.0 {
                m.second_moment_se / (2.0 * rms)
            } else {
                0.0
            };
            (*n, rms, se)
        })
        .collect();
    rows.sort_by_key(|r| r.0);
    let first = rows[0].1;
    if rows.iter().all(|r| r.1 == first) {
        return Err(Error::DegenerateFit("all RMS errors equal".into()));
    }
    if rows.iter().any(|r| !(r.1 > 0.0)) {
        return Err(Error::DegenerateFit("RMS error must be positive".into()));
    }
    let x: Vec<f64> = rows.iter().map(|r| (r.0 as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    let fit = ols(&x, &y)?;
    // Monte Carlo part: Var(slope) = Σ (x_i - x̄)² σ_i² / Sxx², σ_i = se_i / rms_i
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let mc_var: f64 = rows
        .iter()
        .zip(&x)
        .map(|(r, xi)| (xi - mx).powi(2) * (r.2 / r.1).powi(2))
        .sum::<f64>()
        / (sxx * sxx);
    Ok(RateFit {
        n_values: rows.iter().map(|r| r.0).collect(),
        rms_errors: rows.iter().map(|r| r.1).collect(),
        rms_se: rows.iter().map(|r| r.2).collect(),
        slope: fit.slope,
        slope_se: fit.slope_se.max(mc_var.sqrt()),
        intercept: fit.intercept,
    })
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov distribution tail `P(K > λ)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // P(K <= λ) = √(2π)/λ Σ_{j≥1} exp(-(2j-1)²π²/(8λ²))
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut acc = 0.0;
        for j in 1..=8 {
            let k = (2 * j - 1) as f64;
            acc += (-k * k * c).exp();
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * acc;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut acc = 0.0;
        for j in 1..=8 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            acc += if j % 2 == 1 { term } else { -term };
        }
        (2.0 * acc).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against a continuous distribution
/// function.
pub fn ks_test(samples: &SampleSet, cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let m = samples.values.len();
    if m < 50 {
        return Err(Error::InvalidSamples(format!(
            "KS test needs at least 50 samples, got {m}"
        )));
    }
    let mut sorted = samples.values.clone();
    sorted.sort_by(f64::total_cmp);
    let mf = m as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        let above = (i + 1) as f64 / mf - f;
        let below = f - i as f64 / mf;
        d = d.max(above).max(below);
    }
    let sq = mf.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_tail(lambda),
    })
}

/// Exact variance of `n^{α+½} ∫₀^{η_n(t)} ψ_{n,1}(s, η_n(t)) dW_s`:
/// `Σ_{k=1}^{⌊nt⌋} ∫₀¹ (k^α - (k-y)^α)² dy`.
pub fn variance_of_n(params: &KernelParams, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= params.horizon() * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("time {t} outside (0, T]")));
    }
    let m = params.grid_index(t)? as u64;
    Ok(KernelMoments::new(params.alpha())?.step_sq_sum(m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemarkProbe {
    pub alpha: f64,
    pub t: f64,
    /// `(n, exact variance of the unprojected term at t)`
    pub rows: Vec<(usize, f64)>,
    /// `max - min` over `n >= n_max/10`.
    pub last_decade_oscillation: f64,
}

/// Exact variances `Σ_{k=0}^{⌊nt⌋} ∫₀^{1∧(nt-k)} ((nt-k)^α - (nt-k-y)^α)² dy`
/// over a list of mesh sizes.
pub fn remark_nonconvergence_probe(alpha: f64, t: f64, n_list: &[usize]) -> Result<RemarkProbe> {
    if n_list.is_empty() {
        return Err(Error::Domain("empty n list".into()));
    }
    let km = KernelMoments::new(alpha)?;
    let rows: Vec<(usize, f64)> = n_list
        .iter()
        .map(|&n| (n, km.psi1_window_scaled(n, t, t)))
        .collect();
    Ok(RemarkProbe {
        alpha,
        t,
        last_decade_oscillation: last_decade_range(&rows),
        rows,
    })
}

fn last_decade_range(rows: &[(usize, f64)]) -> f64 {
    let n_max = rows.iter().map(|r| r.0).max().unwrap_or(0) as f64;
    let tail: Vec<f64> = rows
        .iter()
        .filter(|r| r.0 as f64 >= n_max / 10.0)
        .map(|r| r.1)
        .collect();
    let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

/// One measured quantity against its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub measured_se: f64,
    pub target: f64,
    pub target_se: f64,
    /// `(measured - target) / sqrt(se² + se_target²)`, zero when both SEs vanish.
    pub z: f64,
    pub rel_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn relative(
        name: &str,
        measured: f64,
        measured_se: f64,
        target: f64,
        target_se: f64,
        rel_tol: f64,
    ) -> Self {
        let diff = measured - target;
        let se = (measured_se.powi(2) + target_se.powi(2)).sqrt();
        let z = if se > 0.0 { diff / se } else { 0.0 };
        let rel = if target != 0.0 {
            diff.abs() / target.abs()
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            name: name.into(),
            measured,
            measured_se,
            target,
            target_se,
            z,
            rel_diff: rel,
            tolerance: rel_tol,
            passed: rel <= rel_tol,
        }
    }
}

/// Monte Carlo targets for the limit: `E[σ²(X_t)]` and `Var(Y^{∞,1}_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitTargets {
    pub mean_sigma_sq: f64,
    pub mean_sigma_sq_se: f64,
    pub var_y_inf: f64,
    pub var_y_inf_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointLimitReport {
    pub paths: usize,
    pub kernel_error: Check,
    pub propagated_error: Check,
    pub correlation: Check,
    pub additivity: Check,
    pub passed: bool,
}

pub const KERNEL_ERROR_REL_TOL: f64 = 0.10;
pub const PROPAGATED_ERROR_REL_TOL: f64 = 0.15;
pub const ADDITIVITY_REL_TOL: f64 = 0.15;
pub const CORRELATION_SE_MULTIPLE: f64 = 5.0;

/// Variance matching, decorrelation and variance additivity of the pair
/// `(A^n_{η_n(t)}, Y^{n,1}_t)` against the limit `(κ₁σ(X_t)Z_t, Y^{∞,1}_t)`.
pub fn joint_limit_check(
    a_samples: &[f64],
    y1_samples: &[f64],
    constants: &LimitConstants,
    targets: &LimitTargets,
) -> Result<JointLimitReport> {
    if a_samples.len() != y1_samples.len() {
        return Err(Error::LengthMismatch(a_samples.len(), y1_samples.len()));
    }
    let m = a_samples.len();
    if m < 2 {
        return Err(Error::InvalidSamples("need at least two pairs".into()));
    }
    let k1sq = constants.kappa1 * constants.kappa1;
    let ma = Moments::of(a_samples);
    let my = Moments::of(y1_samples);
    let sums: Vec<f64> = a_samples
        .iter()
        .zip(y1_samples)
        .map(|(a, y)| a + y)
        .collect();
    let ms = Moments::of(&sums);

    let target_a = k1sq * targets.mean_sigma_sq;
    let target_a_se = k1sq * targets.mean_sigma_sq_se;
    let kernel_error = Check::relative(
        "var_a_vs_kappa1_sq_mean_sigma_sq",
        ma.variance,
        ma.variance_se,
        target_a,
        target_a_se,
        KERNEL_ERROR_REL_TOL,
    );
    let propagated_error = Check::relative(
        "var_y1_vs_var_y_inf",
        my.variance,
        my.variance_se,
        targets.var_y_inf,
        targets.var_y_inf_se,
        PROPAGATED_ERROR_REL_TOL,
    );
    let corr = pearson(a_samples, y1_samples)?;
    let corr_tol = CORRELATION_SE_MULTIPLE / (m as f64).sqrt();
    let correlation = Check {
        name: "pearson_a_y1".into(),
        measured: corr,
        measured_se: 1.0 / (m as f64).sqrt(),
        target: 0.0,
        target_se: 0.0,
        z: corr * (m as f64).sqrt(),
        rel_diff: corr.abs(),
        tolerance: corr_tol,
        passed: corr.abs() < corr_tol,
    };
    let additivity = Check::relative(
        "var_sum_vs_sum_of_targets",
        ms.variance,
        ms.variance_se,
        target_a + targets.var_y_inf,
        (target_a_se.powi(2) + targets.var_y_inf_se.powi(2)).sqrt(),
        ADDITIVITY_REL_TOL,
    );
    let passed =
        kernel_error.passed && propagated_error.passed && correlation.passed && additivity.passed;
    Ok(JointLimitReport {
        paths: m,
        kernel_error,
        propagated_error,
        correlation,
        additivity,
        passed,
    })
}
