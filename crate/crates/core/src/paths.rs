//! Keyed Brownian increments and white-noise draws.
//!
//! Every draw is addressed by `(seed, stream, path_index, step)`. The
//! generator is ChaCha8 in counter mode: the master seed fixes the key, the
//! stream and path select the nonce, and the step selects the block position,
//! so any draw can be regenerated in isolation and nothing depends on the
//! order in which paths are produced.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of increments a single grid may hold (1 GiB of f64).
pub const DEFAULT_STEP_CAP: usize = 1 << 27;

const PATH_BITS: u32 = 56;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    /// Driver of the equation and the scheme.
    W,
    /// Independent driver of the limiting error equation.
    B,
    /// White-noise reservoir.
    Z,
    /// Sub-cell residual normals for exact stochastic-integral cells.
    Bridge,
}

impl Stream {
    pub fn id(self) -> u64 {
        match self {
            Stream::W => 0,
            Stream::B => 1,
            Stream::Z => 2,
            Stream::Bridge => 3,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based normal source for one `(seed, stream, path)` triple.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: Stream, path_index: u64) -> Result<Self> {
        if path_index >> PATH_BITS != 0 {
            return Err(Error::Domain(format!(
                "path index {path_index} exceeds 2^56"
            )));
        }
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream((stream.id() << PATH_BITS) | path_index);
        Ok(Self { rng })
    }

    /// Moves to draw number `step`.
    pub fn seek(&mut self, step: u64) {
        self.rng.set_word_pos(2 * step as u128);
    }

    /// Next standard normal.
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        inverse_normal_cdf(uniform_open(self.rng.next_u64()))
    }

    /// Fills `out` with consecutive draws starting at `step`.
    pub fn fill(&mut self, step: u64, out: &mut [f64]) {
        self.seek(step);
        for v in out.iter_mut() {
            *v = self.next_normal();
        }
    }
}

/// Maps 64 random bits to the open interval `(0, 1)` on a 2^-52 lattice.
#[inline]
pub fn uniform_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Standard normal quantile by Wichura's AS241 (PPND16), relative accuracy
/// about 1e-16.
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        133.141_667_891_784_377_45,
        1_971.590_950_306_551_442_7,
        13_731.693_765_509_461_125,
        45_921.953_931_549_871_457,
        67_265.770_927_008_700_853,
        33_430.575_583_588_128_105,
        2_509.080_928_730_122_672_7,
    ];
    const B: [f64; 8] = [
        1.0,
        42.313_330_701_600_911_252,
        687.187_007_492_057_908_3,
        5_394.196_021_424_751_107_7,
        21_213.794_301_586_595_867,
        39_307.895_800_092_710_61,
        28_729.085_735_721_942_674,
        5_226.495_278_852_854_561,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        0.241_780_725_177_450_611_77,
        0.022_723_844_989_269_184_583_3,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        0.689_767_334_985_100_004_55,
        0.148_103_976_427_480_074_59,
        0.015_198_666_563_616_457_196_6,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        0.296_560_571_828_504_891_23,
        0.026_532_189_526_576_123_093,
        0.001_242_660_947_388_078_438_6,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        0.599_832_206_555_887_937_69,
        0.136_929_880_922_735_805_31,
        0.014_875_361_290_850_614_852_5,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    #[inline]
    fn poly(c: &[f64; 8], x: f64) -> f64 {
        let mut acc = c[7];
        for k in (0..7).rev() {
            acc = acc * x + c[k];
        }
        acc
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let v = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}

/// Seeded Brownian increments on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid {
    pub n_fine: usize,
    pub horizon: f64,
    pub stream: Stream,
    pub path_index: u64,
    pub seed: u64,
    pub increments: Vec<f64>,
}

/// Number of steps of size `1/n` covering `[0, horizon]`.
pub fn step_count(n: usize, horizon: f64) -> Result<usize> {
    if n == 0 || !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!(
            "need n >= 1 and T > 0, got n={n}, T={horizon}"
        )));
    }
    let x = n as f64 * horizon;
    let r = x.round();
    if (x - r).abs() > 1e-9 * x.max(1.0) || r < 1.0 {
        return Err(Error::Domain(format!(
            "n*T = {x} is not a positive integer"
        )));
    }
    Ok(r as usize)
}

/// Increments of `stream` for one path with variance `1/n_fine` each.
pub fn generate(
    seed: u64,
    stream: Stream,
    path_index: u64,
    n_fine: usize,
    horizon: f64,
) -> Result<BrownianGrid> {
    generate_capped(seed, stream, path_index, n_fine, horizon, DEFAULT_STEP_CAP)
}

pub fn generate_capped(
    seed: u64,
    stream: Stream,
    path_index: u64,
    n_fine: usize,
    horizon: f64,
    cap: usize,
) -> Result<BrownianGrid> {
    let steps = step_count(n_fine, horizon)?;
    if steps > cap {
        return Err(Error::SizeOverflow {
            requested: steps,
            cap,
        });
    }
    let mut increments = vec![0.0; steps];
    fill_increments(seed, stream, path_index, n_fine, &mut increments)?;
    Ok(BrownianGrid {
        n_fine,
        horizon,
        stream,
        path_index,
        seed,
        increments,
    })
}

/// Writes the first `out.len()` increments of the keyed path into `out`.
pub fn fill_increments(
    seed: u64,
    stream: Stream,
    path_index: u64,
    n_fine: usize,
    out: &mut [f64],
) -> Result<()> {
    let scale = (1.0 / n_fine as f64).sqrt();
    let mut src = NormalStream::new(seed, stream, path_index)?;
    src.fill(0, out);
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(())
}

/// Fixed-order block sums, used in place and by [`coarsen`].
pub fn block_sums(fine: &[f64], factor: usize, out: &mut [f64]) {
    debug_assert_eq!(fine.len(), out.len() * factor);
    for (dst, block) in out.iter_mut().zip(fine.chunks_exact(factor)) {
        let mut acc = 0.0;
        for v in block {
            acc += v;
        }
        *dst = acc;
    }
}

/// Sums consecutive blocks of `factor` increments, left to right.
pub fn coarsen(grid: &BrownianGrid, factor: usize) -> Result<BrownianGrid> {
    let len = grid.increments.len();
    if factor == 0 || !len.is_multiple_of(factor) || !grid.n_fine.is_multiple_of(factor) {
        return Err(Error::Divisibility { factor, len });
    }
    let mut increments = vec![0.0; len / factor];
    block_sums(&grid.increments, factor, &mut increments);
    Ok(BrownianGrid {
        n_fine: grid.n_fine / factor,
        increments,
        ..grid.clone()
    })
}

/// Independent standard normals `Z` at the requested time indices.
pub fn standard_normal_field(seed: u64, path_index: u64, t_indices: &[u64]) -> Result<Vec<f64>> {
    let mut seen = std::collections::HashSet::with_capacity(t_indices.len());
    for &i in t_indices {
        if !seen.insert(i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    let mut src = NormalStream::new(seed, Stream::Z, path_index)?;
    Ok(t_indices
        .iter()
        .map(|&i| {
            src.seek(i);
            src.next_normal()
        })
        .collect())
}
