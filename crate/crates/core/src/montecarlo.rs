//! Batched Monte Carlo samplers over keyed path indices.
//!
//! Paths are grouped into fixed batches by index, each batch is simulated
//! independently, and results are concatenated in index order, so every
//! sample is a function of `(seed, path_index, config)` only.

use crate::coefficient::CoefficientSpec;
use crate::conv::{KernelTable, LANES};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::parallel::{map_indexed, ExecMode};
use crate::paths::{step_count, Stream};
use crate::solver::{
    coarsen_lanes, increment_lanes, limit_pair_lanes, normal_lanes, CoupledScheme, TermSelection,
    PAIR_PATHS,
};

/// Path indices used for limiting-pair samples start here, keeping them
/// independent of the coupled Euler samples under the same seed.
pub const LIMIT_PAIR_PATH_OFFSET: u64 = 1 << 40;

/// Largest tolerated fraction of aborted (non-finite) paths.
pub const MAX_ABORT_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRange {
    pub first: u64,
    pub count: usize,
}

impl PathRange {
    pub fn new(first: u64, count: usize) -> Self {
        Self { first, count }
    }

    fn batches(&self, width: usize) -> usize {
        self.count.div_ceil(width)
    }

    fn batch(&self, b: usize, width: usize) -> (u64, usize) {
        let start = b * width;
        (self.first + start as u64, width.min(self.count - start))
    }
}

/// Per-path values of the coupled terms; aborted paths are left out.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoupledSamples {
    pub a: Vec<f64>,
    pub a_left: Vec<f64>,
    pub c: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub aborted: Vec<u64>,
}

impl CoupledSamples {
    pub fn abort_fraction(&self) -> f64 {
        let total = self.a.len() + self.aborted.len();
        if total == 0 {
            0.0
        } else {
            self.aborted.len() as f64 / total as f64
        }
    }
}

fn lane_ok(vals: &[f64]) -> bool {
    vals.iter().all(|v| v.is_finite())
}

/// Samples the coupled decomposition at coarse index `t_index`.
#[allow(clippy::too_many_arguments)]
pub fn sample_coupled(
    scheme: &CoupledScheme,
    sigma: &CoefficientSpec,
    x0: f64,
    seed: u64,
    paths: PathRange,
    t_index: usize,
    select: TermSelection,
    mode: ExecMode,
) -> Result<CoupledSamples> {
    let n_fine = scheme.n() * scheme.factor();
    let fine_steps = scheme.fine_steps();
    let batches = map_indexed(mode, paths.batches(LANES), |b| -> Result<CoupledSamples> {
        let (first, count) = paths.batch(b, LANES);
        let dw = increment_lanes(seed, Stream::W, first, count, n_fine, fine_steps)?;
        let xi = normal_lanes(seed, Stream::Bridge, first, count, fine_steps)?;
        let t = scheme.run(sigma, x0, &dw, Some(&xi), t_index, select)?;
        let mut out = CoupledSamples::default();
        for l in 0..count {
            let mut vals = vec![t.a[l], t.a_left[l], t.x_euler[l]];
            if select.offgrid {
                vals.push(t.c[l]);
            }
            if select.reference {
                vals.push(t.y[l]);
                if select.offgrid {
                    vals.push(t.z[l]);
                }
            }
            if !lane_ok(&vals) {
                out.aborted.push(first + l as u64);
                continue;
            }
            out.a.push(t.a[l]);
            out.a_left.push(t.a_left[l]);
            out.c.push(t.c[l]);
            out.z.push(t.z[l]);
            out.y.push(t.y[l]);
        }
        Ok(out)
    });
    let mut all = CoupledSamples::default();
    for b in batches {
        let b = b?;
        all.a.extend(b.a);
        all.a_left.extend(b.a_left);
        all.c.extend(b.c);
        all.z.extend(b.z);
        all.y.extend(b.y);
        all.aborted.extend(b.aborted);
    }
    Ok(all)
}

/// Normalized errors `Y^n_t` for several meshes driven by one shared finest
/// path per replicate; the reference for mesh `n` is Euler at `n·refine`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSamples {
    pub n_list: Vec<usize>,
    /// `y[k][p]`: normalized error of path `p` at mesh `n_list[k]`.
    pub y: Vec<Vec<f64>>,
    /// `|X^n_t - X^{ref}_t|` per mesh and path.
    pub abs_error: Vec<Vec<f64>>,
    pub aborted: Vec<u64>,
}

#[allow(clippy::too_many_arguments)]
pub fn sample_rate(
    params: &KernelParams,
    sigma: &CoefficientSpec,
    x0: f64,
    n_list: &[usize],
    refine: usize,
    t: f64,
    seed: u64,
    paths: PathRange,
    mode: ExecMode,
) -> Result<RateSamples> {
    let n_max = *n_list
        .iter()
        .max()
        .ok_or_else(|| Error::Config("empty n list".into()))?;
    if n_list.iter().any(|n| n_max % n != 0) {
        return Err(Error::Config("every n must divide the largest n".into()));
    }
    let n_finest = n_max * refine;
    let finest_steps = step_count(n_finest, params.horizon())?;
    let schemes = n_list
        .iter()
        .map(|&n| CoupledScheme::new(&params.with_n(n)?, refine))
        .collect::<Result<Vec<_>>>()?;
    let t_indices = n_list
        .iter()
        .map(|&n| {
            let p = params.with_n(n)?;
            if !p.is_grid_point(t) {
                return Err(Error::OffGrid(t));
            }
            p.grid_index(t)
        })
        .collect::<Result<Vec<_>>>()?;
    type Batch = (Vec<Vec<f64>>, Vec<u64>);
    let batches = map_indexed(mode, paths.batches(LANES), |b| -> Result<Batch> {
        let (first, count) = paths.batch(b, LANES);
        let finest = increment_lanes(seed, Stream::W, first, count, n_finest, finest_steps)?;
        let mut per_n = vec![vec![f64::NAN; count]; n_list.len()];
        for (k, scheme) in schemes.iter().enumerate() {
            let ratio = n_max / scheme.n();
            let coarse;
            let dw = if ratio == 1 {
                &finest
            } else {
                coarse = coarsen_lanes(&finest, ratio);
                &coarse
            };
            let terms = scheme.run(
                sigma,
                x0,
                dw,
                None,
                t_indices[k],
                TermSelection::REFERENCE_ONLY,
            )?;
            per_n[k].copy_from_slice(&terms.y[..count]);
        }
        let mut keep: Vec<Vec<f64>> = vec![Vec::with_capacity(count); n_list.len()];
        let mut aborted = Vec::new();
        for l in 0..count {
            if per_n.iter().all(|v| v[l].is_finite()) {
                for k in 0..n_list.len() {
                    keep[k].push(per_n[k][l]);
                }
            } else {
                aborted.push(first + l as u64);
            }
        }
        Ok((keep, aborted))
    });
    let mut y: Vec<Vec<f64>> = vec![Vec::with_capacity(paths.count); n_list.len()];
    let mut aborted = Vec::new();
    for b in batches {
        let (keep, ab) = b?;
        for (dst, src) in y.iter_mut().zip(keep) {
            dst.extend(src);
        }
        aborted.extend(ab);
    }
    let abs_error = y
        .iter()
        .zip(&schemes)
        .map(|(ys, s)| ys.iter().map(|v| v.abs() / s.scale()).collect())
        .collect();
    Ok(RateSamples {
        n_list: n_list.to_vec(),
        y,
        abs_error,
        aborted,
    })
}

/// Per-path `σ²(X_t)` and `Y^{∞,1}_t` of the limiting pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LimitPairSamples {
    pub sigma_sq: Vec<f64>,
    pub y_inf: Vec<f64>,
    pub aborted: Vec<u64>,
}

#[allow(clippy::too_many_arguments)]
pub fn sample_limit_pair(
    params_fine: &KernelParams,
    sigma: &CoefficientSpec,
    x0: f64,
    kappa2: f64,
    t: f64,
    seed: u64,
    paths: PathRange,
    mode: ExecMode,
) -> Result<LimitPairSamples> {
    let steps = params_fine.steps()?;
    if !params_fine.is_grid_point(t) {
        return Err(Error::OffGrid(t));
    }
    let jt = params_fine.grid_index(t)?;
    let n = params_fine.n();
    let k = KernelTable::power(params_fine.alpha(), n, steps);
    let batches = map_indexed(
        mode,
        paths.batches(PAIR_PATHS),
        |b| -> Result<LimitPairSamples> {
            let (first, count) = paths.batch(b, PAIR_PATHS);
            let dw = increment_lanes(seed, Stream::W, first, count, n, steps)?;
            let db = increment_lanes(seed, Stream::B, first, count, n, steps)?;
            let batch = limit_pair_lanes(&k, jt, sigma, x0, kappa2, &dw, &db);
            let mut out = LimitPairSamples::default();
            for l in 0..count {
                let x = batch.x[jt][l];
                let y = batch.x[jt][l + PAIR_PATHS];
                let s = sigma.sigma(x);
                if x.is_finite() && y.is_finite() {
                    out.sigma_sq.push(s * s);
                    out.y_inf.push(y);
                } else {
                    out.aborted.push(first + l as u64);
                }
            }
            Ok(out)
        },
    );
    let mut all = LimitPairSamples::default();
    for b in batches {
        let b = b?;
        all.sigma_sq.extend(b.sigma_sq);
        all.y_inf.extend(b.y_inf);
        all.aborted.extend(b.aborted);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths;
    use crate::solver;

    #[test]
    fn batch_samples_match_single_path_route() {
        let params = KernelParams::unit(0.25, 8).unwrap();
        let sigma = CoefficientSpec::Affine { a: 1.0, b: 0.3 };
        let scheme = CoupledScheme::new(&params, 8).unwrap();
        let s = sample_coupled(
            &scheme,
            &sigma,
            1.0,
            5,
            PathRange::new(17, 3),
            8,
            TermSelection::A_ONLY,
            ExecMode::Sequential,
        )
        .unwrap();
        let fine = paths::generate(5, Stream::W, 18, 64, 1.0).unwrap();
        let euler =
            solver::euler_path(&params, &sigma, 1.0, &paths::coarsen(&fine, 8).unwrap()).unwrap();
        let a = solver::a_term(&params, &sigma, &euler, &fine, 8).unwrap();
        assert_eq!(s.a[1], a);
    }

    #[test]
    fn rate_samples_share_the_finest_path() {
        let params = KernelParams::unit(0.0, 4).unwrap();
        let sigma = CoefficientSpec::Constant { c: 1.0 };
        let r = sample_rate(
            &params,
            &sigma,
            0.0,
            &[4, 8, 16],
            4,
            1.0,
            3,
            PathRange::new(0, 20),
            ExecMode::Parallel,
        )
        .unwrap();
        // α = 0 and constant σ: the scheme is exact
        for ys in &r.y {
            assert!(ys.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn limit_pair_constant_sigma_has_no_error_process() {
        let p = KernelParams::unit(0.2, 16).unwrap();
        let s = sample_limit_pair(
            &p,
            &CoefficientSpec::Constant { c: 2.0 },
            0.0,
            0.9,
            1.0,
            1,
            PathRange::new(LIMIT_PAIR_PATH_OFFSET, 10),
            ExecMode::Sequential,
        )
        .unwrap();
        assert!(s.y_inf.iter().all(|v| *v == 0.0));
        assert!(s.sigma_sq.iter().all(|v| *v == 4.0));
    }
}
