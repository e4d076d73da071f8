//! Power-series machinery for kernel differences at large arguments.
//!
//! The closed forms of the kernel moments subtract quantities of size
//! `x^{2α}` to produce a result of size `x^{2α-2}`, so they lose every digit
//! once `x` is large. Away from the singularity the differences expand in
//! powers of `1/x` with coefficients built from `binom(α, j)`; the expansions
//! converge geometrically for `x > 1` and are evaluated here instead.

/// Arguments at or above this switch from closed forms to series.
pub const SERIES_THRESHOLD: f64 = 16.0;

/// Number of series terms kept. With `x >= 16` the dropped part is below
/// `16^-40`, far under double precision; the explicit bounds below account
/// for it anyway.
pub const SERIES_TERMS: usize = 40;

/// `binom(α, j)` for `j = 0..=len-1`.
pub fn binomials(alpha: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut b = 1.0;
    for j in 0..len {
        out.push(b);
        b *= (alpha - j as f64) / (j as f64 + 1.0);
    }
    out
}

/// Cauchy square of a series with zero constant term: returns `s` with
/// `(Σ_j c_j v^j)^2 = Σ_m s_m v^m`.
fn cauchy_square(c: &[f64]) -> Vec<f64> {
    let len = c.len();
    let mut s = vec![0.0; len];
    for (m, sm) in s.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 1..m {
            acc += c[j] * c[m - j];
        }
        *sm = acc;
    }
    s
}

/// Coefficients of `1 - (1 - v)^α = Σ_j a_j v^j`.
pub fn backward_diff(alpha: f64) -> Vec<f64> {
    binomials(alpha, SERIES_TERMS + 1)
        .iter()
        .enumerate()
        .map(|(j, bj)| if j == 0 { 0.0 } else { -bj * sign(j) })
        .collect()
}

/// Coefficients of `(1 - (1 - v)^α)^2 = Σ_m s_m v^m`.
pub fn backward_diff_sq(alpha: f64) -> Vec<f64> {
    cauchy_square(&backward_diff(alpha))
}

/// Coefficients of `((1 + v)^α - 1)^2 = Σ_m s_m v^m`.
pub fn forward_diff_sq(alpha: f64) -> Vec<f64> {
    let mut p = binomials(alpha, SERIES_TERMS + 1);
    p[0] = 0.0;
    cauchy_square(&p)
}

/// Coefficients `e_m` with
/// `∫₀¹∫₀¹ ((k+y)^α-(k+y-z)^α)((k+y)^α-k^α) dz dy = k^{2α} Σ_m e_m k^{-m}`.
pub fn cross_term(alpha: f64) -> Vec<f64> {
    let b = binomials(alpha, SERIES_TERMS + 1);
    let mut e = vec![0.0; SERIES_TERMS + 1];
    for (m, em) in e.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 1..m {
            let j = m - i;
            acc += b[i] * b[j] * unit_square_moment(i, j);
        }
        *em = acc;
    }
    e
}

/// `∫₀¹∫₀¹ (y^i - (y-z)^i) y^j dz dy`, exact up to rounding.
fn unit_square_moment(i: usize, j: usize) -> f64 {
    let (fi, fj) = (i as f64, j as f64);
    // ∫₀¹ y^j (y-1)^{i+1} dy = (-1)^{i+1} B(j+1, i+2)
    let beta = beta_int(j + 1, i + 2);
    let shifted = 1.0 / (fi + fj + 2.0) - sign(i + 1) * beta;
    1.0 / (fi + fj + 1.0) - shifted / (fi + 1.0)
}

/// `B(a, b)` for positive integers.
fn beta_int(a: usize, b: usize) -> f64 {
    // (a-1)!(b-1)!/(a+b-1)! as a running product to stay in range
    let (small, large) = if a < b { (a, b) } else { (b, a) };
    let mut v = 1.0 / large as f64;
    for r in 1..small {
        v *= r as f64 / (large + r) as f64;
    }
    v
}

fn sign(j: usize) -> f64 {
    if j.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `Σ_m coef[m] x^{-m} / (m + 1)` scaled by `x^{2α}`: the unit-window
/// integral of a squared difference at large `x`.
pub fn window_series(coef: &[f64], alpha: f64, x: f64) -> f64 {
    let inv = 1.0 / x;
    let mut pow = inv * inv;
    let mut acc = 0.0;
    for (m, c) in coef.iter().enumerate().skip(2) {
        acc += c * pow / (m as f64 + 1.0);
        pow *= inv;
    }
    x.powf(2.0 * alpha) * acc
}

/// Bound on `Σ_{m>M} (m-1) x^{-m}` for `x >= 2`, with `M = SERIES_TERMS`.
pub fn truncation_factor(x: f64) -> f64 {
    let m = SERIES_TERMS as f64;
    // (m-1) x^{-m} grows at most by factor 2/x per step for x >= 2
    let first = m * x.powf(-(m + 1.0));
    first / (1.0 - 2.0 / x)
}

/// Hurwitz zeta `ζ(s, q) = Σ_{i≥0} (q+i)^{-s}` for `s > 1`, `q >= 1`, by
/// Euler–Maclaurin summation.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q >= 1.0);
    const N: usize = 12;
    // B_{2j} / (2j)!
    const BERNOULLI_RATIO: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    ];
    let mut head = 0.0;
    for i in (0..N).rev() {
        head += (q + i as f64).powf(-s);
    }
    let a = q + N as f64;
    let mut tail = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // (s)_{2j-1} a^{-s-2j+1}
    let mut rising = s;
    let mut pow = a.powf(-s - 1.0);
    for (j, r) in BERNOULLI_RATIO.iter().enumerate() {
        tail += r * rising * pow;
        let k = 2.0 * j as f64;
        rising *= (s + k + 1.0) * (s + k + 2.0);
        pow /= a * a;
    }
    head + tail
}

/// Upper bound for `Σ_{i≥0} (q+i)^{-s}`, `s > 1`.
pub fn zeta_upper(s: f64, q: f64) -> f64 {
    q.powf(-s) + q.powf(1.0 - s) / (s - 1.0)
}

/// `Σ_{k≥q} Σ_{m≥2} coef[m] k^{2α-m} / (m + 1)` summed exactly through
/// Hurwitz zeta values.
pub fn zeta_tail(coef: &[f64], alpha: f64, q: f64, divide_by_m_plus_1: bool) -> f64 {
    let mut acc = 0.0;
    for (m, c) in coef.iter().enumerate().skip(2) {
        if *c == 0.0 {
            continue;
        }
        let w = if divide_by_m_plus_1 {
            c / (m as f64 + 1.0)
        } else {
            *c
        };
        acc += w * hurwitz_zeta(m as f64 - 2.0 * alpha, q);
    }
    acc
}
