//! Certified evaluation of the limit constants κ₁, κ₃, κ₄, κ₅ and κ₂.
//!
//! Each constant is a series over `k` of kernel-difference moments. The first
//! [`HEAD_TERMS`] terms are evaluated directly (closed forms, and adaptive
//! Gauss–Kronrod for the outer integral of the double integrals). The rest is
//! summed exactly in `1/k` powers through Hurwitz zeta values, with the
//! dropped high-order powers bounded explicitly. The per-term budget of the
//! outer quadrature is `tol / (4(k+1)²)`, which keeps the total quadrature
//! error under `tol/2`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{validate_alpha, KernelMoments};
use crate::quadrature;
use crate::series::{self, SERIES_TERMS};

/// Terms evaluated directly before switching to the zeta tail.
pub const HEAD_TERMS: u64 = 16;

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub alpha: f64,
    pub kappa1: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    pub kappa5: f64,
    /// `(2α+1) / (2(α+1)²)`
    pub middle_term: f64,
    pub kappa2: f64,
    pub tol: f64,
    /// Summed bound on the dropped series terms of all four constants.
    pub tail_bound_used: f64,
}

/// A value with a bound on its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certified {
    pub value: f64,
    pub error_bound: f64,
    pub tail_bound: f64,
}

fn check_inputs(alpha: f64, tol: f64) -> Result<()> {
    validate_alpha(alpha)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Domain(format!("tolerance {tol} must be > 0")));
    }
    Ok(())
}

fn rounding_allowance(value: f64, terms: u64) -> f64 {
    8.0 * terms as f64 * f64::EPSILON * value.abs().max(f64::MIN_POSITIVE)
}

fn certify(value: f64, error_bound: f64, tail_bound: f64, tol: f64) -> Result<Certified> {
    if error_bound > tol {
        return Err(Error::ToleranceUnreachable {
            tol,
            limit: HEAD_TERMS,
        });
    }
    Ok(Certified {
        value,
        error_bound,
        tail_bound,
    })
}

/// Bound on `Σ_{k≥q} α² k^{2α} Σ_{m>M} (m-1) k^{-m}`.
fn sum_truncation_bound(alpha: f64, q: f64) -> f64 {
    let m = SERIES_TERMS as f64;
    alpha * alpha * m / (1.0 - 2.0 / q) * series::zeta_upper(m + 1.0 - 2.0 * alpha, q)
}

/// `∫₀¹ ((x+k)^α - k^α)² dx`.
pub fn forward_step_sq(alpha: f64, k: u64, coef: &[f64]) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    if kf >= series::SERIES_THRESHOLD {
        return series::window_series(coef, alpha, kf);
    }
    let k1 = kf + 1.0;
    let ka = kf.powf(alpha);
    (k1.powf(2.0 * alpha + 1.0) - kf.powf(2.0 * alpha + 1.0)) / (2.0 * alpha + 1.0)
        - 2.0 * ka * (k1.powf(alpha + 1.0) - kf.powf(alpha + 1.0)) / (alpha + 1.0)
        + ka * ka
}

/// κ₁² with its error bound.
pub fn kappa1_sq_certified(alpha: f64, tol: f64) -> Result<Certified> {
    check_inputs(alpha, tol)?;
    if alpha == 0.0 {
        return Ok(Certified {
            value: 0.0,
            error_bound: 0.0,
            tail_bound: 0.0,
        });
    }
    let km = KernelMoments::new(alpha)?;
    let q = HEAD_TERMS as f64 + 1.0;
    let tail = series::zeta_tail(km.back_sq(), alpha, q, true);
    let head = km.step_sq_sum(HEAD_TERMS);
    let value = tail + head;
    let trunc = sum_truncation_bound(alpha, q);
    certify(
        value,
        trunc + rounding_allowance(value, HEAD_TERMS + SERIES_TERMS as u64),
        trunc,
        tol,
    )
}

/// `κ₁ = (Σ_{k≥1} ∫₀¹ (k^α - (k-x)^α)² dx)^{1/2}`.
pub fn compute_kappa1(alpha: f64, tol: f64) -> Result<f64> {
    let sq = kappa1_sq_certified(alpha, tol)?;
    sqrt_certified(sq, tol).map(|c| c.value)
}

fn sqrt_certified(sq: Certified, tol: f64) -> Result<Certified> {
    let value = sq.value.max(0.0).sqrt();
    let err = if value > 0.0 {
        sq.error_bound / value
    } else {
        sq.error_bound.sqrt()
    };
    certify(value, err, sq.tail_bound, tol)
}

/// κ₃ with its error bound.
pub fn kappa3_certified(alpha: f64, tol: f64) -> Result<Certified> {
    check_inputs(alpha, tol)?;
    if alpha == 0.0 {
        return Ok(Certified {
            value: 0.0,
            error_bound: 0.0,
            tail_bound: 0.0,
        });
    }
    let coef = series::forward_diff_sq(alpha);
    let q = HEAD_TERMS as f64 + 1.0;
    let tail = series::zeta_tail(&coef, alpha, q, true);
    let head: f64 = (1..=HEAD_TERMS)
        .rev()
        .map(|k| forward_step_sq(alpha, k, &coef))
        .sum();
    let value = tail + head;
    let trunc = sum_truncation_bound(alpha, q);
    certify(
        value,
        trunc + rounding_allowance(value, HEAD_TERMS + SERIES_TERMS as u64),
        trunc,
        tol,
    )
}

/// `κ₃ = Σ_{k≥1} ∫₀¹ ((x+k)^α - k^α)² dx`.
pub fn compute_kappa3(alpha: f64, tol: f64) -> Result<f64> {
    kappa3_certified(alpha, tol).map(|c| c.value)
}

fn per_term_budget(tol: f64, k: u64) -> f64 {
    tol / (4.0 * ((k + 1) as f64).powi(2))
}

/// κ₄ with its error bound.
pub fn kappa4_certified(alpha: f64, tol: f64) -> Result<Certified> {
    check_inputs(alpha, tol)?;
    if alpha == 0.0 {
        return Ok(Certified {
            value: 0.0,
            error_bound: 0.0,
            tail_bound: 0.0,
        });
    }
    let km = KernelMoments::new(alpha)?;
    let mut head = 0.0;
    let mut quad_err = 0.0;
    for k in (0..HEAD_TERMS).rev() {
        let kf = k as f64;
        // inner z-integral over [0, 1∧(y+k)] in closed form
        let r = quadrature::integrate(
            |y| {
                let d = y + kf;
                if d <= 0.0 {
                    0.0
                } else {
                    km.unit_window_sq(d)
                }
            },
            0.0,
            1.0,
            per_term_budget(tol, k),
            MAX_INTERVALS,
        );
        if !r.converged {
            return Err(Error::ToleranceUnreachable {
                tol,
                limit: HEAD_TERMS,
            });
        }
        head += r.value;
        quad_err += r.error;
    }
    // Σ_{k≥K} ∫₀¹ g(y+k) dy = ∫_K^∞ g(x) dx with g(x) = x^{2α} Σ c_m x^{-m}
    let kq = HEAD_TERMS as f64;
    let mut tail = 0.0;
    for (m, c) in km.back_sq().iter().enumerate().skip(2) {
        let e = m as f64 - 1.0 - 2.0 * alpha;
        tail += c / (m as f64 + 1.0) * kq.powf(-e) / e;
    }
    let mm = SERIES_TERMS as f64;
    let trunc =
        alpha * alpha * mm / (1.0 - 2.0 / kq) * kq.powf(2.0 * alpha - mm) / (mm - 2.0 * alpha);
    let value = head + tail;
    certify(
        value,
        quad_err + trunc + rounding_allowance(value, HEAD_TERMS + SERIES_TERMS as u64),
        trunc,
        tol,
    )
}

/// `κ₄ = Σ_{k≥0} ∫₀¹ ∫₀^{1∧(y+k)} ((y+k)^α - (y+k-z)^α)² dz dy`.
pub fn compute_kappa4(alpha: f64, tol: f64) -> Result<f64> {
    kappa4_certified(alpha, tol).map(|c| c.value)
}

/// κ₅ with its error bound.
pub fn kappa5_certified(alpha: f64, tol: f64) -> Result<Certified> {
    check_inputs(alpha, tol)?;
    if alpha == 0.0 {
        return Ok(Certified {
            value: 0.0,
            error_bound: 0.0,
            tail_bound: 0.0,
        });
    }
    let mut head = 0.0;
    let mut quad_err = 0.0;
    for k in (1..HEAD_TERMS).rev() {
        let kf = k as f64;
        let ka = kf.powf(alpha);
        let r = quadrature::integrate(
            |y| {
                let d = y + kf;
                let da = d.powf(alpha);
                // ∫₀¹ (d^α - (d-z)^α) dz
                let inner =
                    da - (d.powf(alpha + 1.0) - (d - 1.0).powf(alpha + 1.0)) / (alpha + 1.0);
                inner * (da - ka)
            },
            0.0,
            1.0,
            per_term_budget(tol, k),
            MAX_INTERVALS,
        );
        if !r.converged {
            return Err(Error::ToleranceUnreachable {
                tol,
                limit: HEAD_TERMS,
            });
        }
        head += r.value;
        quad_err += r.error;
    }
    let coef = series::cross_term(alpha);
    let q = HEAD_TERMS as f64;
    let tail = series::zeta_tail(&coef, alpha, q, false);
    let trunc = 2.0 * sum_truncation_bound(alpha, q);
    let value = head + tail;
    certify(
        value,
        quad_err + trunc + rounding_allowance(value, HEAD_TERMS + SERIES_TERMS as u64),
        trunc,
        tol,
    )
}

/// `κ₅ = Σ_{k≥1} ∫₀¹∫₀¹ ((y+k)^α - (y+k-z)^α)((y+k)^α - k^α) dz dy`.
pub fn compute_kappa5(alpha: f64, tol: f64) -> Result<f64> {
    kappa5_certified(alpha, tol).map(|c| c.value)
}

/// `(2α+1) / (2(α+1)²)`.
pub fn middle_term(alpha: f64) -> f64 {
    (2.0 * alpha + 1.0) / (2.0 * (alpha + 1.0) * (alpha + 1.0))
}

fn cache() -> &'static Mutex<HashMap<(u64, u64), LimitConstants>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), LimitConstants>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// All constants at once, cached per `(α, tol)` for the process.
pub fn assemble(alpha: f64, tol: f64) -> Result<LimitConstants> {
    check_inputs(alpha, tol)?;
    let key = (alpha.to_bits(), tol.to_bits());
    if let Some(hit) = cache().lock().expect("constants cache poisoned").get(&key) {
        return Ok(*hit);
    }
    let k1sq = kappa1_sq_certified(alpha, tol)?;
    let k1 = sqrt_certified(k1sq, tol)?;
    let k3 = kappa3_certified(alpha, tol)?;
    let k4 = kappa4_certified(alpha, tol)?;
    let k5 = kappa5_certified(alpha, tol)?;
    let mid = middle_term(alpha);
    let radicand = k3.value + mid + k4.value + k5.value;
    if radicand < -4.0 * tol {
        return Err(Error::NegativeRadicand(radicand));
    }
    let out = LimitConstants {
        alpha,
        kappa1: k1.value,
        kappa3: k3.value,
        kappa4: k4.value,
        kappa5: k5.value,
        middle_term: mid,
        kappa2: radicand.max(0.0).sqrt(),
        tol,
        tail_bound_used: k1.tail_bound + k3.tail_bound + k4.tail_bound + k5.tail_bound,
    };
    cache()
        .lock()
        .expect("constants cache poisoned")
        .insert(key, out);
    Ok(out)
}
