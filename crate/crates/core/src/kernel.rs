//! The fractional kernel `(t-s)^α`, the mesh `η_n`, the discretization
//! kernels `ψ_{n,1}`, `ψ_{n,2}` and their scaled L² norms.
//!
//! Every one-dimensional moment is evaluated from power antiderivatives on
//! mesh cells. Cells far from the singularity switch to the convergent
//! `1/x` expansion in [`crate::series`], which keeps full relative accuracy
//! where the closed form cancels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series;
use crate::stats::ols;

/// Distance kept from the endpoints `±1/2`.
pub const ALPHA_MARGIN: f64 = 1e-9;

pub fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha.abs() < 0.5 - ALPHA_MARGIN {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// Exponent, mesh count per unit time and horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    alpha: f64,
    n: usize,
    horizon: f64,
}

impl KernelParams {
    pub fn new(alpha: f64, n: usize, horizon: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        if n == 0 {
            return Err(Error::Domain("mesh count n must be >= 1".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Domain(format!("horizon {horizon} must be > 0")));
        }
        Ok(Self { alpha, n, horizon })
    }

    /// Unit horizon.
    pub fn unit(alpha: f64, n: usize) -> Result<Self> {
        Self::new(alpha, n, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Same exponent and horizon on a different mesh.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.alpha, n, self.horizon)
    }

    /// Number of mesh cells covering `[0, T]`; `n·T` must be an integer.
    pub fn steps(&self) -> Result<usize> {
        let x = self.n as f64 * self.horizon;
        let r = x.round();
        if (x - r).abs() > 1e-9 * x.max(1.0) {
            return Err(Error::Domain(format!(
                "n*T = {x} is not an integer number of steps"
            )));
        }
        Ok(r as usize)
    }

    /// `⌊ns⌋`, snapping `ns` to an integer when it is within rounding of one
    /// so that grid times `j/n` map back to `j`.
    pub fn grid_index(&self, s: f64) -> Result<usize> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("time {s} must be >= 0")));
        }
        Ok(snapped_floor(self.n as f64 * s))
    }

    /// The mesh projection `η_n(s) = ⌊ns⌋/n`.
    pub fn eta(&self, s: f64) -> Result<f64> {
        Ok(self.grid_index(s)? as f64 / self.n as f64)
    }

    /// Whether `s` lies on the mesh.
    pub fn is_grid_point(&self, s: f64) -> bool {
        let x = self.n as f64 * s;
        (x - x.round()).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0)
    }
}

fn snapped_floor(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// `ns - ⌊ns⌋` with the same snapping as [`KernelParams::grid_index`].
fn frac_part(x: f64) -> f64 {
    let f = x - snapped_floor(x) as f64;
    if f < 0.0 {
        0.0
    } else {
        f
    }
}

/// `u^α` for `u > 0`.
pub fn kernel(alpha: f64, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("kernel evaluated at u = {u} <= 0")));
    }
    Ok(u.powf(alpha))
}

/// `ψ_{n,1}(s,t) = (t - η_n(s))^α - (t - s)^α` for `0 <= s < t <= T`.
pub fn psi1(params: &KernelParams, s: f64, t: f64) -> Result<f64> {
    if !(s >= 0.0 && s < t && t <= params.horizon * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "psi1 needs 0 <= s < t <= T, got s={s}, t={t}"
        )));
    }
    let eta = params.eta(s)?;
    if params.alpha == 0.0 || eta == s {
        return Ok(0.0);
    }
    Ok((t - eta).powf(params.alpha) - (t - s).powf(params.alpha))
}

/// `ψ_{n,2}(u,s) = (s - η_n(u))^α - (η_n(s) - η_n(u))^α`, defined when
/// `η_n(u) < η_n(s)`.
pub fn psi2(params: &KernelParams, u: f64, s: f64) -> Result<f64> {
    if !(u >= 0.0 && u < s && s <= params.horizon * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "psi2 needs 0 <= u < s <= T, got u={u}, s={s}"
        )));
    }
    let (eu, es) = (params.eta(u)?, params.eta(s)?);
    if !(eu < es) {
        return Err(Error::Domain(format!(
            "psi2 needs eta(u) < eta(s), got {eu} and {es}"
        )));
    }
    if params.alpha == 0.0 || es == s {
        return Ok(0.0);
    }
    Ok((s - eu).powf(params.alpha) - (es - eu).powf(params.alpha))
}

/// Per-exponent cache of series coefficients, used by every cell moment.
#[derive(Debug, Clone)]
pub struct KernelMoments {
    alpha: f64,
    back: Vec<f64>,
    back_sq: Vec<f64>,
}

impl KernelMoments {
    pub fn new(alpha: f64) -> Result<Self> {
        validate_alpha(alpha)?;
        Ok(Self {
            alpha,
            back: series::backward_diff(alpha),
            back_sq: series::backward_diff_sq(alpha),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub(crate) fn back_sq(&self) -> &[f64] {
        &self.back_sq
    }

    /// `∫_a^b (d^α - w^α)² dw` for `0 <= a <= b <= d`.
    pub fn window_sq(&self, d: f64, a: f64, b: f64) -> f64 {
        debug_assert!(0.0 <= a && a <= b && b <= d * (1.0 + 1e-15));
        let alpha = self.alpha;
        if alpha == 0.0 || b <= a {
            return 0.0;
        }
        if (d - a) <= d / series::SERIES_THRESHOLD {
            let v0 = ((d - b) / d).max(0.0);
            let v1 = (d - a) / d;
            let (mut p0, mut p1) = (v0 * v0 * v0, v1 * v1 * v1);
            let mut acc = 0.0;
            for (m, c) in self.back_sq.iter().enumerate().skip(2) {
                acc += c * (p1 - p0) / (m as f64 + 1.0);
                p0 *= v0;
                p1 *= v1;
            }
            return d.powf(2.0 * alpha + 1.0) * acc;
        }
        let da = d.powf(alpha);
        da * da * (b - a) - 2.0 * da * (b.powf(alpha + 1.0) - a.powf(alpha + 1.0)) / (alpha + 1.0)
            + (b.powf(2.0 * alpha + 1.0) - a.powf(2.0 * alpha + 1.0)) / (2.0 * alpha + 1.0)
    }

    /// `∫_{d-1}^{d} (d^α - w^α) dw` for `d >= 1`.
    pub fn unit_window_gap(&self, d: f64) -> f64 {
        let alpha = self.alpha;
        if alpha == 0.0 {
            return 0.0;
        }
        if d >= series::SERIES_THRESHOLD {
            let inv = 1.0 / d;
            let mut pow = inv;
            let mut acc = 0.0;
            for (j, a) in self.back.iter().enumerate().skip(1) {
                acc += a * pow / (j as f64 + 1.0);
                pow *= inv;
            }
            return d.powf(alpha) * acc;
        }
        d.powf(alpha) - (d.powf(alpha + 1.0) - (d - 1.0).powf(alpha + 1.0)) / (alpha + 1.0)
    }

    /// Variance of `w^α` for `w` uniform on `[d-1, d]`, `d >= 1`.
    pub fn unit_window_var(&self, d: f64) -> f64 {
        let gap = self.unit_window_gap(d);
        (self.window_sq(d, d - 1.0, d) - gap * gap).max(0.0)
    }

    /// `∫₀^{1∧x} (x^α - (x-y)^α)² dy` for real `x > 0`.
    pub fn unit_window_sq(&self, x: f64) -> f64 {
        let width = x.min(1.0);
        self.window_sq(x, x - width, x)
    }

    /// `∫₀¹ (k^α - (k-x)^α)² dx`.
    pub fn step_sq(&self, k: u64) -> f64 {
        assert!(k >= 1, "step_sq_moment needs k >= 1");
        self.unit_window_sq(k as f64)
    }

    /// `Σ_{k=1}^{m} step_sq(k)`, summed smallest term first.
    pub fn step_sq_sum(&self, m: u64) -> f64 {
        if self.alpha == 0.0 {
            return 0.0;
        }
        (1..=m).rev().map(|k| self.step_sq(k)).sum()
    }

    /// `n^{2α+1} ∫₀^{s_upper} ψ_{n,1}(s,t)² ds`, with `s_upper <= t`.
    pub fn psi1_window_scaled(&self, n: usize, t: f64, s_upper: f64) -> f64 {
        if self.alpha == 0.0 || s_upper <= 0.0 {
            return 0.0;
        }
        let nf = n as f64;
        let x = nf * t;
        let m = snapped_floor(x);
        let on_grid = (x - m as f64).abs() <= 4.0 * f64::EPSILON * x.max(1.0);
        // w = n(t - s) ranges over [cut, ...]
        let cut = (nf * (t - s_upper)).max(0.0);
        let mut acc = 0.0;
        for i in 0..=m {
            let d = if on_grid {
                (m - i) as f64
            } else {
                x - i as f64
            };
            if d <= 0.0 {
                continue;
            }
            let lo = (d - 1.0).max(0.0).max(cut);
            if lo >= d {
                continue;
            }
            acc += self.window_sq(d, lo, d);
        }
        acc
    }
}

/// `∫₀¹ (k^α - (k-x)^α)² dx`. Closed form for small `k`; the `1/k` series
/// beyond `k = 16` where the closed form cancels.
pub fn step_sq_moment(alpha: f64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("step_sq_moment needs k >= 1".into()));
    }
    Ok(KernelMoments::new(alpha)?.step_sq(k))
}

/// `n^{2α+1} ∫₀ᵗ ψ_{n,1}(u,t)² du`.
pub fn psi1_l2_scaled(params: &KernelParams, t: f64) -> Result<f64> {
    check_time(params, t)?;
    let km = KernelMoments::new(params.alpha)?;
    Ok(km.psi1_window_scaled(params.n, t, t))
}

/// `n^{2α+1} ∫₀^{η_n(s)} ψ_{n,2}(u,s)² du`. `ψ_{n,2}(·, s)` is constant on
/// mesh cells, so this is the finite sum `Σ_{j=1}^{⌊ns⌋} ((j+φ)^α - j^α)²`
/// with `φ = ns - ⌊ns⌋`.
pub fn psi2_l2_scaled(params: &KernelParams, s: f64) -> Result<f64> {
    check_time(params, s)?;
    let alpha = params.alpha;
    let x = params.n as f64 * s;
    let m = snapped_floor(x);
    let phi = frac_part(x);
    if alpha == 0.0 || m == 0 || phi == 0.0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for j in (1..=m).rev() {
        let jf = j as f64;
        let diff = jf.powf(alpha) * (alpha * (phi / jf).ln_1p()).exp_m1();
        acc += diff * diff;
    }
    Ok(acc)
}

fn check_time(params: &KernelParams, t: f64) -> Result<()> {
    if !(t > 0.0 && t <= params.horizon * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "time {t} outside (0, {}]",
            params.horizon
        )));
    }
    Ok(())
}

/// Threshold on the least-squares slope of a supremum against `ln n`.
pub const TREND_SLOPE_LIMIT: f64 = 0.05;

/// The `k/100` grid on `(0, 1]`.
pub fn unit_time_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|k| k as f64 / points as f64).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IneqRow {
    pub n: usize,
    /// `sup_t ∫₀ᵗ ψ₁² ds / n^{-2α-1}`
    pub sup_ratio_full: f64,
    /// `sup_t ∫₀^{(t-δ)₊} ψ₁² ds / (n^{-2} δ^{2α-1})`
    pub sup_ratio_cut: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IneqReport {
    pub alpha: f64,
    pub delta: f64,
    pub rows: Vec<IneqRow>,
    pub slope_full: f64,
    pub slope_cut: f64,
    pub passed: bool,
}

/// Suprema over a 100-point grid of `(0, 1]` of the two kernel-moment
/// ratios, per mesh size, with a trend test on each sequence.
pub fn verify_ineq_bounds(alpha: f64, n_list: &[usize], delta: f64) -> Result<IneqReport> {
    if !(delta > 0.0) || n_list.is_empty() {
        return Err(Error::Domain("need delta > 0 and a nonempty n list".into()));
    }
    let km = KernelMoments::new(alpha)?;
    let grid = unit_time_grid(100);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(Error::Domain("mesh count n must be >= 1".into()));
        }
        let nf = n as f64;
        let cut_scale = nf.powf(-2.0 * alpha - 1.0) * nf * nf * delta.powf(1.0 - 2.0 * alpha);
        let mut sup_full: f64 = 0.0;
        let mut sup_cut: f64 = 0.0;
        for &t in &grid {
            sup_full = sup_full.max(km.psi1_window_scaled(n, t, t));
            if t > delta {
                sup_cut = sup_cut.max(km.psi1_window_scaled(n, t, t - delta) * cut_scale);
            }
        }
        rows.push(IneqRow {
            n,
            sup_ratio_full: sup_full,
            sup_ratio_cut: sup_cut,
        });
    }
    let slope_full = trend_slope(&rows, |r| r.sup_ratio_full);
    let slope_cut = trend_slope(&rows, |r| r.sup_ratio_cut);
    let finite = rows
        .iter()
        .all(|r| r.sup_ratio_full.is_finite() && r.sup_ratio_cut.is_finite());
    Ok(IneqReport {
        alpha,
        delta,
        rows,
        slope_full,
        slope_cut,
        passed: finite && slope_full <= TREND_SLOPE_LIMIT && slope_cut <= TREND_SLOPE_LIMIT,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaRow {
    pub n: usize,
    pub sup_psi1: f64,
    pub sup_psi2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub alpha: f64,
    pub rows: Vec<LemmaRow>,
    pub slope_psi1: f64,
    pub slope_psi2: f64,
    pub passed: bool,
}

/// Suprema of [`psi1_l2_scaled`] and [`psi2_l2_scaled`] over a time grid,
/// per mesh size, with the same trend test.
pub fn lemma_suprema(alpha: f64, n_list: &[usize], grid_points: usize) -> Result<LemmaReport> {
    let grid = unit_time_grid(grid_points);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let p = KernelParams::unit(alpha, n)?;
        let km = KernelMoments::new(alpha)?;
        let mut s1: f64 = 0.0;
        let mut s2: f64 = 0.0;
        for &t in &grid {
            s1 = s1.max(km.psi1_window_scaled(n, t, t));
            s2 = s2.max(psi2_l2_scaled(&p, t)?);
        }
        rows.push(LemmaRow {
            n,
            sup_psi1: s1,
            sup_psi2: s2,
        });
    }
    let slope_psi1 = trend_slope(&rows, |r| r.sup_psi1);
    let slope_psi2 = trend_slope(&rows, |r| r.sup_psi2);
    let finite = rows
        .iter()
        .all(|r| r.sup_psi1.is_finite() && r.sup_psi2.is_finite());
    Ok(LemmaReport {
        alpha,
        rows,
        slope_psi1,
        slope_psi2,
        passed: finite && slope_psi1 <= TREND_SLOPE_LIMIT && slope_psi2 <= TREND_SLOPE_LIMIT,
    })
}

fn trend_slope<R>(rows: &[R], value: impl Fn(&R) -> f64) -> f64
where
    R: HasN,
{
    if rows.len() < 2 {
        return 0.0;
    }
    let x: Vec<f64> = rows.iter().map(|r| (r.n() as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(value).collect();
    ols(&x, &y).map(|f| f.slope).unwrap_or(0.0)
}

trait HasN {
    fn n(&self) -> usize;
}

impl HasN for IneqRow {
    fn n(&self) -> usize {
        self.n
    }
}

impl HasN for LemmaRow {
    fn n(&self) -> usize {
        self.n
    }
}

/// `2, 4, ..., 2^k` up to `max`.
pub fn dyadic_list(min: usize, max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = min.max(1);
    while n <= max {
        out.push(n);
        n *= 2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_window_moments() {
        for alpha in [-0.45f64, -0.2, 0.3] {
            let km = KernelMoments::new(alpha).unwrap();
            let gap1 = 1.0 - 1.0 / (alpha + 1.0);
            assert!((km.unit_window_gap(1.0) - gap1).abs() < 1e-15);
            let var1 = 1.0 / (2.0 * alpha + 1.0) - 1.0 / ((alpha + 1.0) * (alpha + 1.0));
            assert!((km.unit_window_var(1.0) - var1).abs() < 1e-14);
            // series and closed form agree around the switch
            for d in [15.999_999f64, 16.0, 40.0] {
                let closed = d.powf(alpha)
                    - (d.powf(alpha + 1.0) - (d - 1.0).powf(alpha + 1.0)) / (alpha + 1.0);
                let got = km.unit_window_gap(d);
                assert!((got - closed).abs() < 1e-12 * closed.abs(), "d={d}");
                // var ~ α² d^{2α-2} / 12
                let approx = alpha * alpha * d.powf(2.0 * alpha - 2.0) / 12.0;
                assert!((km.unit_window_var(d) / approx - 1.0).abs() < 0.2);
            }
        }
    }

    /// Composite Simpson with a graded map `x = 1 - (1-v)^q` toward the
    /// right endpoint, independent of the closed forms.
    // ∫₀¹ f(u) du with u = v^q graded toward u = 0
    fn simpson_graded(f: impl Fn(f64) -> f64, q: f64, panels: usize) -> f64 {
        let h = 1.0 / panels as f64;
        let g = |v: f64| {
            if v == 0.0 {
                0.0
            } else {
                f(v.powf(q)) * q * v.powf(q - 1.0)
            }
        };
        let mut acc = g(0.0) + g(1.0);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn eta_examples() {
        let p = KernelParams::unit(0.1, 10).unwrap();
        assert!((p.eta(0.37).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(p.eta(0.3).unwrap(), 0.3);
        let p7 = KernelParams::unit(0.1, 7).unwrap();
        assert_eq!(p7.eta(1.0).unwrap(), 1.0);
        assert!(p.eta(-0.1).is_err());
    }

    #[test]
    fn eta_on_every_grid_point() {
        for n in [3usize, 7, 10, 64, 1000] {
            let p = KernelParams::unit(0.2, n).unwrap();
            for j in 0..=n {
                let s = j as f64 / n as f64;
                assert_eq!(p.grid_index(s).unwrap(), j);
            }
        }
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel(0.0, 0.5).unwrap(), 1.0);
        assert!((kernel(0.25, 16.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((kernel(-0.25, 16.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(kernel(-0.25, 0.0).is_err());
        assert!(kernel(0.25, -1.0).is_err());
    }

    #[test]
    fn alpha_validation() {
        assert!(KernelParams::unit(0.5, 4).is_err());
        assert!(KernelParams::unit(-0.5, 4).is_err());
        assert!(KernelParams::unit(0.5 - 2e-9, 4).is_ok());
        assert!(KernelParams::unit(f64::NAN, 4).is_err());
        assert!(KernelParams::unit(0.1, 0).is_err());
    }

    #[test]
    fn psi1_examples() {
        let p0 = KernelParams::unit(0.0, 4).unwrap();
        assert_eq!(psi1(&p0, 0.3, 0.9).unwrap(), 0.0);
        let p = KernelParams::unit(-0.25, 2).unwrap();
        assert_eq!(psi1(&p, 0.5, 0.9).unwrap(), 0.0);
        let expected = 1.0f64.powf(-0.25) - 0.7f64.powf(-0.25);
        assert!((psi1(&p, 0.3, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!(psi1(&p, 0.5, 0.5).is_err());
    }

    #[test]
    fn psi2_examples() {
        let p = KernelParams::unit(0.25, 4).unwrap();
        let expected = 0.8f64.powf(0.25) - 0.75f64.powf(0.25);
        assert!((psi2(&p, 0.1, 0.8).unwrap() - expected).abs() < 1e-15);
        assert_eq!(psi2(&p, 0.1, 0.75).unwrap(), 0.0);
        let p0 = KernelParams::unit(0.0, 4).unwrap();
        assert_eq!(psi2(&p0, 0.1, 0.8).unwrap(), 0.0);
        assert!(psi2(&p, 0.1, 0.2).is_err());
    }

    #[test]
    fn step_sq_against_graded_simpson() {
        for &alpha in &[-0.45f64, -0.25, 0.0, 0.25, 0.45] {
            let q = (4.0 / (1.0 + 2.0 * alpha)).ceil().max(4.0);
            for k in 1..=50u64 {
                let kf = k as f64;
                // u = 1 - x, so the singular end sits at u = 0
                let f = |u: f64| {
                    let d = kf.powf(alpha) - (kf - 1.0 + u).powf(alpha);
                    d * d
                };
                let oracle = simpson_graded(f, q, 200_000);
                let got = step_sq_moment(alpha, k).unwrap();
                assert!(
                    (got - oracle).abs() < 1e-10,
                    "alpha={alpha} k={k}: {got} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn step_sq_zero_alpha() {
        for k in [1u64, 2, 10, 1000] {
            assert_eq!(step_sq_moment(0.0, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn psi1_l2_single_cell_is_first_step() {
        let p = KernelParams::unit(0.25, 1).unwrap();
        let a = psi1_l2_scaled(&p, 1.0).unwrap();
        let b = step_sq_moment(0.25, 1).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn psi1_l2_midpoint_oracle() {
        let p = KernelParams::unit(-0.25, 64).unwrap();
        let got = psi1_l2_scaled(&p, 1.0).unwrap();
        // midpoint rule on 10^6 subcells, each cell integrated in the
        // variable v = w^{1/2} to tame the w^{-1/2} singularity
        let n = 64usize;
        let sub = 1_000_000 / n;
        let mut acc = 0.0;
        for i in 0..n {
            let d = (n - i) as f64;
            // ∫_{d-1}^{d} (d^α - w^α)² dw, w = d - 1 + u², dw = 2u du
            let h = 1.0 / sub as f64;
            for k in 0..sub {
                let u = (k as f64 + 0.5) * h;
                let w = d - 1.0 + u * u;
                let diff = d.powf(-0.25) - w.powf(-0.25);
                acc += diff * diff * 2.0 * u * h;
            }
        }
        assert!(((got - acc) / acc).abs() < 1e-6, "{got} vs {acc}");
    }

    #[test]
    fn psi2_direct_sum_oracle() {
        let p = KernelParams::unit(0.3, 32).unwrap();
        let s: f64 = 0.97;
        let m = (32.0 * s).floor() as usize;
        let eta_s = m as f64 / 32.0;
        let mut oracle = 0.0;
        for i in 0..m {
            let u = i as f64 / 32.0;
            let d = (s - u).powf(0.3) - (eta_s - u).powf(0.3);
            oracle += d * d / 32.0;
        }
        oracle *= 32f64.powf(1.6);
        let got = psi2_l2_scaled(&p, s).unwrap();
        assert!((got - oracle).abs() < 1e-12 * oracle.max(1.0));
    }

    #[test]
    fn psi2_vanishes_on_grid() {
        let p = KernelParams::unit(0.3, 8).unwrap();
        assert_eq!(psi2_l2_scaled(&p, 0.5).unwrap(), 0.0);
        assert_eq!(psi2_l2_scaled(&p, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn ineq_zero_alpha() {
        let r = verify_ineq_bounds(0.0, &[4, 16], 0.1).unwrap();
        assert!(r
            .rows
            .iter()
            .all(|row| row.sup_ratio_full == 0.0 && row.sup_ratio_cut == 0.0));
        assert!(r.passed);
    }

    #[test]
    fn ineq_bounded_for_quarter_exponents() {
        for alpha in [0.25, -0.25] {
            let r = verify_ineq_bounds(alpha, &[4, 16, 64, 256], 0.1).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }
}
