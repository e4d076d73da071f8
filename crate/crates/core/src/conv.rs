//! Lower-triangular Toeplitz convolution over a batch of independent lanes.
//!
//! The Volterra recursion `x_j = x0 + Σ_{i<j} k[j-i] g_i`, with `g_j` a
//! function of `x_j`, is serial in `j` but independent across Monte Carlo
//! paths. Paths are packed as [`LANES`] lanes so that every kernel weight is
//! applied to a full SIMD row. Rows are produced in blocks of [`ROWS`]: the
//! contribution of all history before the block is a small dense product that
//! reuses each loaded history row `ROWS` times, and only the triangle inside
//! the block runs serially.
//!
//! Every accumulation is a fused multiply-add in a fixed order, so the
//! vectorized and portable builds return bit-identical results.

use std::sync::OnceLock;

pub const LANES: usize = 16;
pub const ROWS: usize = 8;

pub type Lane = [f64; LANES];

pub const ZERO_LANE: Lane = [0.0; LANES];

/// Kernel weights `k[d]` for `d = 0..=len`, zero-padded past `len`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    values: Vec<f64>,
    len: usize,
}

impl KernelTable {
    /// `k[0] = 0` and `k[d] = f(d)` for `1 <= d <= len`.
    pub fn from_fn(len: usize, f: impl Fn(usize) -> f64) -> Self {
        let mut values = vec![0.0; len + 1 + ROWS];
        for (d, v) in values.iter_mut().enumerate().take(len + 1).skip(1) {
            *v = f(d);
        }
        Self { values, len }
    }

    /// `(d/n)^α`.
    pub fn power(alpha: f64, n: usize, len: usize) -> Self {
        let nf = n as f64;
        Self::from_fn(len, |d| (d as f64 / nf).powf(alpha))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, d: usize) -> f64 {
        self.values[d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..=self.len]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Isa {
    Avx512,
    Avx2,
    Portable,
}

/// Best instruction set available at run time.
pub fn detected_isa() -> Isa {
    static ISA: OnceLock<Isa> = OnceLock::new();
    *ISA.get_or_init(|| {
        #[cfg(target_arch = "x86_64")]
        {
            if is_x86_feature_detected!("avx512f") && is_x86_feature_detected!("fma") {
                return Isa::Avx512;
            }
            if is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma") {
                return Isa::Avx2;
            }
        }
        Isa::Portable
    })
}

/// `acc[b] += Σ_{i<j0} k[j0+b-i] g_i`, ascending in `i`.
#[inline(always)]
fn rect_body(k: &[f64], g: &[Lane], j0: usize, acc: &mut [Lane; ROWS]) {
    let mut a = *acc;
    // windows of k starting at j0, j0-1, ..., 1 pair with g_0, g_1, ...
    for (gi, kw) in g[..j0].iter().zip(k[1..j0 + ROWS].windows(ROWS).rev()) {
        for b in 0..ROWS {
            let kb = kw[b];
            for l in 0..LANES {
                a[b][l] = kb.mul_add(gi[l], a[b][l]);
            }
        }
    }
    *acc = a;
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f,fma")]
unsafe fn rect_avx512(k: &[f64], g: &[Lane], j0: usize, acc: &mut [Lane; ROWS]) {
    use std::arch::x86_64::*;
    const _: () = assert!(LANES == 16 && ROWS == 8);
    assert!(g.len() >= j0 && k.len() >= j0 + ROWS);
    let ap = acc.as_mut_ptr() as *mut f64;
    macro_rules! load {
        ($b:literal) => {
            (
                _mm512_loadu_pd(ap.add($b * LANES)),
                _mm512_loadu_pd(ap.add($b * LANES + 8)),
            )
        };
    }
    let (mut a00, mut a01) = load!(0);
    let (mut a10, mut a11) = load!(1);
    let (mut a20, mut a21) = load!(2);
    let (mut a30, mut a31) = load!(3);
    let (mut a40, mut a41) = load!(4);
    let (mut a50, mut a51) = load!(5);
    let (mut a60, mut a61) = load!(6);
    let (mut a70, mut a71) = load!(7);
    let gp = g.as_ptr() as *const f64;
    let kp = k.as_ptr();
    for i in 0..j0 {
        let g0 = _mm512_loadu_pd(gp.add(i * LANES));
        let g1 = _mm512_loadu_pd(gp.add(i * LANES + 8));
        let kb = kp.add(j0 - i);
        macro_rules! row {
            ($b:literal, $x:ident, $y:ident) => {
                let w = _mm512_set1_pd(*kb.add($b));
                $x = _mm512_fmadd_pd(w, g0, $x);
                $y = _mm512_fmadd_pd(w, g1, $y);
            };
        }
        row!(0, a00, a01);
        row!(1, a10, a11);
        row!(2, a20, a21);
        row!(3, a30, a31);
        row!(4, a40, a41);
        row!(5, a50, a51);
        row!(6, a60, a61);
        row!(7, a70, a71);
    }
    macro_rules! store {
        ($b:literal, $x:ident, $y:ident) => {
            _mm512_storeu_pd(ap.add($b * LANES), $x);
            _mm512_storeu_pd(ap.add($b * LANES + 8), $y);
        };
    }
    store!(0, a00, a01);
    store!(1, a10, a11);
    store!(2, a20, a21);
    store!(3, a30, a31);
    store!(4, a40, a41);
    store!(5, a50, a51);
    store!(6, a60, a61);
    store!(7, a70, a71);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn rect_avx2(k: &[f64], g: &[Lane], j0: usize, acc: &mut [Lane; ROWS]) {
    rect_body(k, g, j0, acc)
}

fn rect_portable(k: &[f64], g: &[Lane], j0: usize, acc: &mut [Lane; ROWS]) {
    rect_body(k, g, j0, acc)
}

#[inline]
fn rect(isa: Isa, k: &[f64], g: &[Lane], j0: usize, acc: &mut [Lane; ROWS]) {
    match isa {
        #[cfg(target_arch = "x86_64")]
        // SAFETY: the variant is only selected after run-time feature detection.
        Isa::Avx512 => unsafe { rect_avx512(k, g, j0, acc) },
        #[cfg(target_arch = "x86_64")]
        // SAFETY: as above.
        Isa::Avx2 => unsafe { rect_avx2(k, g, j0, acc) },
        _ => rect_portable(k, g, j0, acc),
    }
}

/// Runs `x_j = x0 + Σ_{i<j} k[j-i] g_i` for `j = 0..=steps`, calling
/// `step(j, &x_j, &mut g_j)` for every `j < steps` as soon as `x_j` is known.
pub fn recurse(
    k: &KernelTable,
    steps: usize,
    x0: &Lane,
    x: &mut [Lane],
    g: &mut [Lane],
    step: impl FnMut(usize, &Lane, &mut Lane),
) {
    recurse_with(detected_isa(), k, steps, x0, x, g, step)
}

/// [`recurse`] on an explicit instruction set.
pub fn recurse_with(
    isa: Isa,
    k: &KernelTable,
    steps: usize,
    x0: &Lane,
    x: &mut [Lane],
    g: &mut [Lane],
    mut step: impl FnMut(usize, &Lane, &mut Lane),
) {
    assert!(k.len() >= steps, "kernel table shorter than the recursion");
    assert!(x.len() > steps && g.len() >= steps);
    let kv = &k.values;
    let mut j0 = 0;
    while j0 <= steps {
        let mut acc = [ZERO_LANE; ROWS];
        rect(isa, kv, g, j0, &mut acc);
        for (b, row) in acc.iter_mut().enumerate() {
            let j = j0 + b;
            if j > steps {
                break;
            }
            for i in j0..j {
                let kb = kv[j - i];
                for l in 0..LANES {
                    row[l] = kb.mul_add(g[i][l], row[l]);
                }
            }
            for l in 0..LANES {
                x[j][l] = x0[l] + row[l];
            }
            if j < steps {
                step(j, &x[j], &mut g[j]);
            }
        }
        j0 += ROWS;
    }
}

/// `out_q = Σ_{i<q} k[q-i] g_i` for `q = 0..out.len()`, with `g` known.
pub fn convolve(k: &KernelTable, g: &[Lane], out: &mut [Lane]) {
    convolve_with(detected_isa(), k, g, out)
}

pub fn convolve_with(isa: Isa, k: &KernelTable, g: &[Lane], out: &mut [Lane]) {
    if out.is_empty() {
        return;
    }
    let last = out.len() - 1;
    assert!(k.len() >= last && g.len() >= last);
    let kv = &k.values;
    let mut j0 = 0;
    while j0 <= last {
        let mut acc = [ZERO_LANE; ROWS];
        rect(isa, kv, g, j0, &mut acc);
        for (b, row) in acc.iter_mut().enumerate() {
            let j = j0 + b;
            if j > last {
                break;
            }
            for i in j0..j {
                let kb = kv[j - i];
                for l in 0..LANES {
                    row[l] = kb.mul_add(g[i][l], row[l]);
                }
            }
            out[j] = *row;
        }
        j0 += ROWS;
    }
}
