//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Terms summed one by one before the tail estimate takes over.
pub const ORACLE_TERMS: u64 = 10_000_000;
/// Below this index summands come from closed forms or 2-D quadrature.
const SMALL_K: u64 = 16;
const ORDERS: usize = 16;

fn gbinom(a: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |b, i| b * (a - i as f64) / (i as f64 + 1.0))
}

/// Polynomial in `(y, z)`: `c[p][q]` multiplies `y^p z^q`.
#[derive(Clone)]
struct Poly(Vec<Vec<f64>>);

impl Poly {
    fn zero() -> Self {
        Poly(vec![vec![0.0; ORDERS + 1]; ORDERS + 1])
    }

    fn y_pow(j: usize, c: f64) -> Self {
        let mut p = Self::zero();
        p.0[j][0] = c;
        p
    }

    /// `c·(y^j - (y - z)^j)`
    fn diff_pow(j: usize, c: f64) -> Self {
        let mut p = Self::zero();
        p.0[j][0] += c;
        for i in 0..=j {
            let binom = (0..i).fold(1.0, |b, r| b * (j - r) as f64 / (r + 1) as f64);
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            p.0[j - i][i] -= c * binom * sign;
        }
        p
    }

    /// `∫₀¹∫₀¹ self·other dz dy`
    fn inner(&self, other: &Poly) -> f64 {
        let mut s = 0.0;
        for (p1, r1) in self.0.iter().enumerate() {
            for (q1, c1) in r1.iter().enumerate() {
                if *c1 == 0.0 {
                    continue;
                }
                for (p2, r2) in other.0.iter().enumerate() {
                    for (q2, c2) in r2.iter().enumerate() {
                        if *c2 != 0.0 {
                            s += c1 * c2 / (((p1 + p2 + 1) * (q1 + q2 + 1)) as f64);
                        }
                    }
                }
            }
        }
        s
    }
}

/// `g_m` with `summand(k) = k^{2α} Σ_m g_m k^{-m}`.
fn product_series(p: &[Poly], q: &[Poly]) -> Vec<f64> {
    let mut g = vec![0.0; ORDERS + 1];
    for (i, pi) in p.iter().enumerate() {
        for (j, qj) in q.iter().enumerate() {
            if i + j <= ORDERS {
                g[i + j] += pi.inner(qj);
            }
        }
    }
    g
}

#[derive(Clone, Copy)]
enum Family {
    K1,
    K3,
    K4,
    K5,
}

fn factors(f: Family, a: f64) -> (Vec<Poly>, Vec<Poly>) {
    let mut p = vec![Poly::zero()];
    let mut q = vec![Poly::zero()];
    for j in 1..ORDERS {
        let b = gbinom(a, j);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        match f {
            Family::K1 => {
                p.push(Poly::y_pow(j, -b * sign));
                q.push(Poly::y_pow(j, -b * sign));
            }
            Family::K3 => {
                p.push(Poly::y_pow(j, b));
                q.push(Poly::y_pow(j, b));
            }
            Family::K4 => {
                p.push(Poly::diff_pow(j, b));
                q.push(Poly::diff_pow(j, b));
            }
            Family::K5 => {
                p.push(Poly::diff_pow(j, b));
                q.push(Poly::y_pow(j, b));
            }
        }
    }
    (p, q)
}

/// Neumaier-compensated sum.
#[derive(Default)]
struct Acc {
    s: f64,
    c: f64,
}

impl Acc {
    fn add(&mut self, v: f64) {
        let t = self.s + v;
        if self.s.abs() >= v.abs() {
            self.c += (self.s - t) + v;
        } else {
            self.c += (v - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// `Σ_{k>N} k^s` by Euler-Maclaurin at `N`.
fn power_tail(n: f64, s: f64) -> f64 {
    n.powf(s + 1.0) / (-s - 1.0) - n.powf(s) / 2.0 - s * n.powf(s - 1.0) / 12.0
        + s * (s - 1.0) * (s - 2.0) * n.powf(s - 3.0) / 720.0
}

fn series_part(f: Family, a: f64) -> f64 {
    let (p, q) = factors(f, a);
    let g = product_series(&p, &q);
    let mut acc = Acc::default();
    let mut k = ORACLE_TERMS;
    while k >= SMALL_K {
        let h = 1.0 / k as f64;
        let poly = g.iter().rev().fold(0.0, |s, c| s * h + c);
        acc.add((k as f64).powf(2.0 * a) * poly);
        k -= 1;
    }
    let nn = ORACLE_TERMS as f64;
    for (m, gm) in g.iter().enumerate() {
        if *gm != 0.0 {
            acc.add(gm * power_tail(nn, 2.0 * a - m as f64));
        }
    }
    acc.value()
}

/// `∫₀¹∫₀¹ f(y, z) dz dy` by composite Simpson on `y = v^4`,
/// `z = 1 - (1-w)^4`, clustering nodes at `y = 0` and `z = 1`.
pub fn graded_simpson_2d(f: impl Fn(f64, f64) -> f64, panels: usize) -> f64 {
    assert!(panels.is_multiple_of(2));
    let q = 4.0;
    let h = 1.0 / panels as f64;
    let w = |i: usize| -> f64 {
        if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let nodes: Vec<(f64, f64, f64, f64, f64)> = (0..=panels)
        .map(|i| {
            let v = i as f64 * h;
            let y = v.powf(q);
            let dy = q * v.powf(q - 1.0);
            let z = 1.0 - (1.0 - v).powf(q);
            let dz = q * (1.0 - v).powf(q - 1.0);
            (y, dy, z, dz, w(i))
        })
        .collect();
    let mut acc = Acc::default();
    for &(y, dy, _, _, wy) in &nodes {
        if dy == 0.0 {
            continue;
        }
        let mut row = Acc::default();
        for &(_, _, z, dz, wz) in &nodes {
            if dz == 0.0 {
                continue;
            }
            row.add(wz * dz * f(y, z));
        }
        acc.add(wy * dy * row.value());
    }
    acc.value() * h * h / 9.0
}

fn small_panels(k: u64) -> usize {
    if k == 1 {
        2400
    } else {
        240
    }
}

fn k1_closed(a: f64, k: u64) -> f64 {
    let k = k as f64;
    k.powf(2.0 * a) - 2.0 * k.powf(a) * (k.powf(a + 1.0) - (k - 1.0).powf(a + 1.0)) / (a + 1.0)
        + (k.powf(2.0 * a + 1.0) - (k - 1.0).powf(2.0 * a + 1.0)) / (2.0 * a + 1.0)
}

fn k3_closed(a: f64, k: u64) -> f64 {
    let k = k as f64;
    ((k + 1.0).powf(2.0 * a + 1.0) - k.powf(2.0 * a + 1.0)) / (2.0 * a + 1.0)
        - 2.0 * k.powf(a) * ((k + 1.0).powf(a + 1.0) - k.powf(a + 1.0)) / (a + 1.0)
        + k.powf(2.0 * a)
}

/// `κ₄` summand at `k = 0`, in closed form.
pub fn kappa4_k0(a: f64) -> f64 {
    (1.0 - 2.0 / (a + 1.0) + 1.0 / (2.0 * a + 1.0)) / (2.0 * a + 2.0)
}

pub fn kappa4_summand(a: f64, k: u64) -> f64 {
    let kf = k as f64;
    graded_simpson_2d(
        |y, z| {
            let d = (y + kf).powf(a) - (y + kf - z).powf(a);
            d * d
        },
        small_panels(k),
    )
}

pub fn kappa5_summand(a: f64, k: u64) -> f64 {
    let kf = k as f64;
    graded_simpson_2d(
        |y, z| ((y + kf).powf(a) - (y + kf - z).powf(a)) * ((y + kf).powf(a) - kf.powf(a)),
        small_panels(k),
    )
}

pub fn kappa1_sq_oracle(a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    (1..SMALL_K).map(|k| k1_closed(a, k)).sum::<f64>() + series_part(Family::K1, a)
}

pub fn kappa3_oracle(a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    (1..SMALL_K).map(|k| k3_closed(a, k)).sum::<f64>() + series_part(Family::K3, a)
}

pub fn kappa4_oracle(a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    kappa4_k0(a)
        + (1..SMALL_K).map(|k| kappa4_summand(a, k)).sum::<f64>()
        + series_part(Family::K4, a)
}

pub fn kappa5_oracle(a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    (1..SMALL_K).map(|k| kappa5_summand(a, k)).sum::<f64>() + series_part(Family::K5, a)
}

/// Oracle values `(κ₁, κ₃, κ₄, κ₅)`.
pub fn kappa_oracle(a: f64) -> [f64; 4] {
    [
        kappa1_sq_oracle(a).sqrt(),
        kappa3_oracle(a),
        kappa4_oracle(a),
        kappa5_oracle(a),
    ]
}

/// Plain `O(n²)` Euler loop.
pub fn naive_euler(
    alpha: f64,
    n: usize,
    sigma: impl Fn(f64) -> f64,
    x0: f64,
    dw: &[f64],
) -> Vec<f64> {
    let mut x = vec![x0; dw.len() + 1];
    for j in 1..=dw.len() {
        let mut s = x0;
        for i in 0..j {
            s += ((j - i) as f64 / n as f64).powf(alpha) * sigma(x[i]) * dw[i];
        }
        x[j] = s;
    }
    x
}

/// Unbiased sample variance and its standard error.
pub fn var_se(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let c2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    let c4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m;
    let var = c2 * m / (m - 1.0);
    (var, ((c4 - c2 * c2) / m).sqrt())
}
