//! Euler scheme, coupled fine-grid reference, limiting error pair, and the
//! decomposition of the normalized error into `A^n`, `C^n`, `Z^n`.
//!
//! The batch routines work on [`LANES`] independent paths at once; the
//! single-path functions pack one path into lane 0 and call the same code, so
//! both routes agree bit for bit.

use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientSpec;
use crate::conv::{self, KernelTable, Lane, LANES, ZERO_LANE};
use crate::error::{Error, Result};
use crate::kernel::{KernelMoments, KernelParams};
use crate::paths::{self, BrownianGrid, NormalStream, Stream};

/// Paths per limit-pair batch: each path occupies an X lane and a Y lane.
pub const PAIR_PATHS: usize = LANES / 2;

/// Identifies the Brownian path a solution was driven by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverTag {
    pub seed: u64,
    pub stream: Stream,
    pub path_index: u64,
    pub n_fine: usize,
}

impl DriverTag {
    fn of(grid: &BrownianGrid) -> Self {
        Self {
            seed: grid.seed,
            stream: grid.stream,
            path_index: grid.path_index,
            n_fine: grid.n_fine,
        }
    }

    fn same_path(&self, other: &DriverTag) -> bool {
        self.seed == other.seed
            && self.stream == other.stream
            && self.path_index == other.path_index
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraPath {
    pub params: KernelParams,
    pub x0: f64,
    /// `X` at `j/n`, `j = 0..=nT`.
    pub values: Vec<f64>,
    pub driver: DriverTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitPairPath {
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub kappa2: f64,
}

/// Euler states and integrands of a lane batch.
#[derive(Debug, Clone)]
pub struct LaneBatch {
    pub x: Vec<Lane>,
    pub g: Vec<Lane>,
}

/// Euler scheme on `steps` steps for every lane.
pub fn euler_lanes(
    k: &KernelTable,
    steps: usize,
    sigma: &CoefficientSpec,
    x0: f64,
    dw: &[Lane],
) -> LaneBatch {
    let mut x = vec![ZERO_LANE; steps + 1];
    let mut g = vec![ZERO_LANE; steps];
    conv::recurse(k, steps, &[x0; LANES], &mut x, &mut g, |j, xj, gj| {
        for l in 0..LANES {
            gj[l] = sigma.sigma(xj[l]) * dw[j][l];
        }
    });
    LaneBatch { x, g }
}

/// `(X, Y^{∞,1})` for [`PAIR_PATHS`] paths: lane `l` carries `X` and lane
/// `l + PAIR_PATHS` carries `Y` of path `l`.
pub fn limit_pair_lanes(
    k: &KernelTable,
    steps: usize,
    sigma: &CoefficientSpec,
    x0: f64,
    kappa2: f64,
    dw: &[Lane],
    db: &[Lane],
) -> LaneBatch {
    let mut start = ZERO_LANE;
    start[..PAIR_PATHS].fill(x0);
    let mut x = vec![ZERO_LANE; steps + 1];
    let mut g = vec![ZERO_LANE; steps];
    conv::recurse(k, steps, &start, &mut x, &mut g, |j, xj, gj| {
        for l in 0..PAIR_PATHS {
            let xs = xj[l];
            let ys = xj[l + PAIR_PATHS];
            let s = sigma.sigma(xs);
            let sp = sigma.sigma_prime(xs);
            gj[l] = s * dw[j][l];
            gj[l + PAIR_PATHS] = (kappa2 * sp * s).mul_add(db[j][l], sp * ys * dw[j][l]);
        }
    });
    LaneBatch { x, g }
}

/// Fills lanes with the keyed increments of `count` consecutive paths.
pub fn increment_lanes(
    seed: u64,
    stream: Stream,
    first_path: u64,
    count: usize,
    n_fine: usize,
    steps: usize,
) -> Result<Vec<Lane>> {
    assert!(count <= LANES);
    let mut out = vec![ZERO_LANE; steps];
    let mut buf = vec![0.0; steps];
    for l in 0..count {
        paths::fill_increments(seed, stream, first_path + l as u64, n_fine, &mut buf)?;
        for (row, v) in out.iter_mut().zip(&buf) {
            row[l] = *v;
        }
    }
    Ok(out)
}

/// Standard normal lanes, without the `1/√n` scaling.
pub fn normal_lanes(
    seed: u64,
    stream: Stream,
    first_path: u64,
    count: usize,
    steps: usize,
) -> Result<Vec<Lane>> {
    let mut out = vec![ZERO_LANE; steps];
    let mut buf = vec![0.0; steps];
    for l in 0..count {
        NormalStream::new(seed, stream, first_path + l as u64)?.fill(0, &mut buf);
        for (row, v) in out.iter_mut().zip(&buf) {
            row[l] = *v;
        }
    }
    Ok(out)
}

/// Fixed-order block sums of every lane.
pub fn coarsen_lanes(fine: &[Lane], factor: usize) -> Vec<Lane> {
    fine.chunks_exact(factor)
        .map(|block| {
            let mut acc = ZERO_LANE;
            for row in block {
                for l in 0..LANES {
                    acc[l] += row[l];
                }
            }
            acc
        })
        .collect()
}

/// Which parts of the decomposition to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermSelection {
    /// Fine-grid Euler reference, needed for `Z` and `Y`.
    pub reference: bool,
    /// Off-grid Euler states, needed for `C` and `Z`.
    pub offgrid: bool,
}

impl TermSelection {
    pub const ALL: Self = Self {
        reference: true,
        offgrid: true,
    };
    pub const A_ONLY: Self = Self {
        reference: false,
        offgrid: false,
    };
    pub const REFERENCE_ONLY: Self = Self {
        reference: true,
        offgrid: false,
    };
}

/// Normalized terms at one coarse time; entries not requested are NaN.
#[derive(Debug, Clone, Copy)]
pub struct CoupledTerms {
    /// `A^n` with every fine cell integrated exactly in law.
    pub a: Lane,
    /// `A^n` as a left-point fine sum; `a_left + c + z = y` up to rounding.
    pub a_left: Lane,
    pub c: Lane,
    pub z: Lane,
    /// `n^{α+1/2}(X^n_t - X^{ref}_t)`.
    pub y: Lane,
    pub x_euler: Lane,
    pub x_reference: Lane,
}

/// Precomputed tables for a coarse mesh `n` coupled to a fine mesh `n·F`.
#[derive(Debug, Clone)]
pub struct CoupledScheme {
    alpha: f64,
    n: usize,
    factor: usize,
    steps: usize,
    coarse: KernelTable,
    fine: KernelTable,
    /// `((mF + r)/(nF))^α` for `r = 1..F`.
    residues: Vec<KernelTable>,
    /// Fine-cell mean of `(t-s)^α` at fine distance `u`.
    cell_mean: Vec<f64>,
    /// Standard deviation of the part of the cell integral orthogonal to ΔW.
    cell_resid: Vec<f64>,
    scale: f64,
}

impl CoupledScheme {
    pub fn new(params: &KernelParams, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Divisibility { factor, len: 0 });
        }
        let alpha = params.alpha();
        let n = params.n();
        let steps = params.steps()?;
        let n_fine = n * factor;
        let fine_steps = steps * factor;
        let coarse = KernelTable::power(alpha, n, steps);
        let fine = KernelTable::power(alpha, n_fine, fine_steps);
        let nf = n_fine as f64;
        let residues = (1..factor)
            .map(|r| KernelTable::from_fn(steps, |m| (((m * factor + r) as f64) / nf).powf(alpha)))
            .collect();
        let km = KernelMoments::new(alpha)?;
        let unit = nf.powf(-alpha);
        let mut cell_mean = vec![0.0; fine_steps + 1];
        let mut cell_resid = vec![0.0; fine_steps + 1];
        for u in 1..=fine_steps {
            let d = u as f64;
            cell_mean[u] = fine.get(u) - unit * km.unit_window_gap(d);
            cell_resid[u] = unit * (km.unit_window_var(d) / nf).sqrt();
        }
        Ok(Self {
            alpha,
            n,
            factor,
            steps,
            coarse,
            fine,
            residues,
            cell_mean,
            cell_resid,
            scale: (n as f64).powf(alpha + 0.5),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn fine_steps(&self) -> usize {
        self.steps * self.factor
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `n^{α+1/2}`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn coarse_kernel(&self) -> &KernelTable {
        &self.coarse
    }

    pub fn fine_kernel(&self) -> &KernelTable {
        &self.fine
    }

    /// Evaluates the requested terms at coarse index `t_index` for every
    /// lane. `dw_fine` holds the fine increments; `bridge` the standard
    /// normals for the exact cell integrals (without it `a` equals `a_left`).
    pub fn run(
        &self,
        sigma: &CoefficientSpec,
        x0: f64,
        dw_fine: &[Lane],
        bridge: Option<&[Lane]>,
        t_index: usize,
        select: TermSelection,
    ) -> Result<CoupledTerms> {
        let f = self.factor;
        if dw_fine.len() != self.fine_steps() {
            return Err(Error::ResolutionMismatch {
                expected: format!("{} fine increments", self.fine_steps()),
                got: format!("{}", dw_fine.len()),
            });
        }
        if t_index > self.steps {
            return Err(Error::OffGrid(t_index as f64 / self.n as f64));
        }
        let jt = t_index;
        let tf = jt * f;
        let dw = coarsen_lanes(dw_fine, f);
        let euler = euler_lanes(&self.coarse, self.steps, sigma, x0, &dw);

        let nan = [f64::NAN; LANES];
        let mut a = ZERO_LANE;
        let mut a_left = ZERO_LANE;
        let mut sig_c = ZERO_LANE;
        for fi in 0..tf {
            let q = fi / f;
            let u = tf - fi;
            let kn = self.coarse.get(jt - q);
            let kf = self.fine.get(u);
            let mean = self.cell_mean[u];
            let resid = self.cell_resid[u];
            let row = &dw_fine[fi];
            let xq = &euler.x[q];
            for l in 0..LANES {
                sig_c[l] = sigma.sigma(xq[l]);
                a_left[l] = ((kn - kf) * sig_c[l]).mul_add(row[l], a_left[l]);
                let mut v = ((kn - mean) * sig_c[l]).mul_add(row[l], a[l]);
                if let Some(xi) = bridge {
                    v = (-resid * sig_c[l]).mul_add(xi[fi][l], v);
                }
                a[l] = v;
            }
        }
        if bridge.is_none() {
            a = a_left;
        }

        let offgrid = if select.offgrid {
            Some(self.offgrid_states(sigma, x0, &euler, dw_fine, jt))
        } else {
            None
        };
        let reference = if select.reference {
            Some(euler_lanes(&self.fine, tf, sigma, x0, &dw_fine[..tf]))
        } else {
            None
        };

        let mut c = nan;
        let mut z = nan;
        if let Some(xs) = &offgrid {
            c = ZERO_LANE;
            let mut zz = ZERO_LANE;
            for fi in 0..tf {
                let q = fi / f;
                let kf = self.fine.get(tf - fi);
                let row = &dw_fine[fi];
                for l in 0..LANES {
                    let s_eta = sigma.sigma(euler.x[q][l]);
                    let s_off = sigma.sigma(xs[fi][l]);
                    c[l] = (kf * (s_eta - s_off)).mul_add(row[l], c[l]);
                    if let Some(r) = &reference {
                        let s_ref = sigma.sigma(r.x[fi][l]);
                        zz[l] = (kf * (s_off - s_ref)).mul_add(row[l], zz[l]);
                    }
                }
            }
            if reference.is_some() {
                z = zz;
            }
        }

        let mut y = nan;
        let mut x_reference = nan;
        if let Some(r) = &reference {
            x_reference = r.x[tf];
            for l in 0..LANES {
                y[l] = self.scale * (euler.x[jt][l] - r.x[tf][l]);
            }
        }
        let sc = |v: Lane| {
            let mut o = v;
            for e in o.iter_mut() {
                *e *= self.scale;
            }
            o
        };
        Ok(CoupledTerms {
            a: sc(a),
            a_left: sc(a_left),
            c: sc(c),
            z: sc(z),
            y,
            x_euler: euler.x[jt],
            x_reference,
        })
    }

    /// `X^n_s` at every fine time `s < t_index/n` from the Euler functional.
    fn offgrid_states(
        &self,
        sigma: &CoefficientSpec,
        x0: f64,
        euler: &LaneBatch,
        dw_fine: &[Lane],
        jt: usize,
    ) -> Vec<Lane> {
        let f = self.factor;
        let nf = (self.n * f) as f64;
        let mut out = vec![ZERO_LANE; jt * f];
        for q in 0..jt {
            out[q * f] = euler.x[q];
        }
        if jt == 0 {
            return out;
        }
        let mut hist = vec![ZERO_LANE; jt];
        for r in 1..f {
            conv::convolve(&self.residues[r - 1], &euler.g, &mut hist);
            let last = (r as f64 / nf).powf(self.alpha);
            for q in 0..jt {
                let base = q * f;
                for l in 0..LANES {
                    let mut partial = 0.0;
                    for row in &dw_fine[base..base + r] {
                        partial += row[l];
                    }
                    let s = sigma.sigma(euler.x[q][l]);
                    out[base + r][l] = x0 + (last * s).mul_add(partial, hist[q][l]);
                }
            }
        }
        out
    }
}

fn check_resolution(grid: &BrownianGrid, params: &KernelParams) -> Result<usize> {
    let steps = params.steps()?;
    if grid.n_fine != params.n() || grid.increments.len() != steps {
        return Err(Error::ResolutionMismatch {
            expected: format!("n={} with {steps} steps", params.n()),
            got: format!("n={} with {} steps", grid.n_fine, grid.increments.len()),
        });
    }
    Ok(steps)
}

fn single_lane(values: &[f64]) -> Vec<Lane> {
    values
        .iter()
        .map(|v| {
            let mut l = ZERO_LANE;
            l[0] = *v;
            l
        })
        .collect()
}

fn lane0(rows: &[Lane]) -> Vec<f64> {
    rows.iter().map(|r| r[0]).collect()
}

/// `X_j = x0 + Σ_{i<j} ((j-i)/n)^α σ(X_i) ΔW_i`.
pub fn euler_path(
    params: &KernelParams,
    sigma: &CoefficientSpec,
    x0: f64,
    increments: &BrownianGrid,
) -> Result<VolterraPath> {
    let steps = check_resolution(increments, params)?;
    let k = KernelTable::power(params.alpha(), params.n(), steps);
    let batch = euler_lanes(&k, steps, sigma, x0, &single_lane(&increments.increments));
    let values = lane0(&batch.x);
    if let Some(step) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::BlowUp {
            path: increments.path_index,
            step,
        });
    }
    Ok(VolterraPath {
        params: *params,
        x0,
        values,
        driver: DriverTag::of(increments),
    })
}

/// Euler at `n·refine_factor` on the same path, restricted to the mesh `n`.
pub fn reference_path(
    params: &KernelParams,
    sigma: &CoefficientSpec,
    x0: f64,
    fine_grid: &BrownianGrid,
    refine_factor: usize,
) -> Result<VolterraPath> {
    if refine_factor < 2 || !refine_factor.is_power_of_two() {
        return Err(Error::Config(format!(
            "refine factor {refine_factor} must be a power of two >= 2"
        )));
    }
    let n_ref = params.n() * refine_factor;
    if !fine_grid.n_fine.is_multiple_of(n_ref) {
        return Err(Error::ResolutionMismatch {
            expected: format!("a multiple of n={n_ref}"),
            got: format!("n={}", fine_grid.n_fine),
        });
    }
    let ref_grid = paths::coarsen(fine_grid, fine_grid.n_fine / n_ref)?;
    let fine_params = params.with_n(n_ref)?;
    let full = euler_path(&fine_params, sigma, x0, &ref_grid)?;
    Ok(VolterraPath {
        params: *params,
        x0,
        values: full.values.iter().step_by(refine_factor).copied().collect(),
        driver: DriverTag::of(fine_grid),
    })
}

/// Solves for `X` and `Y^{∞,1}` with
/// `Y_j = Σ_{i<j} K[j-i] (κ₂ (σ'σ)(X_i) ΔB_i + σ'(X_i) Y_i ΔW_i)`.
pub fn limit_pair_path(
    params_fine: &KernelParams,
    sigma: &CoefficientSpec,
    x0: f64,
    w_grid: &BrownianGrid,
    b_grid: &BrownianGrid,
    kappa2: f64,
) -> Result<LimitPairPath> {
    if w_grid.stream == b_grid.stream {
        return Err(Error::StreamIdentity);
    }
    let steps = check_resolution(w_grid, params_fine)?;
    check_resolution(b_grid, params_fine)?;
    let k = KernelTable::power(params_fine.alpha(), params_fine.n(), steps);
    let batch = limit_pair_lanes(
        &k,
        steps,
        sigma,
        x0,
        kappa2,
        &single_lane(&w_grid.increments),
        &single_lane(&b_grid.increments),
    );
    Ok(LimitPairPath {
        x_values: batch.x.iter().map(|r| r[0]).collect(),
        y_values: batch.x.iter().map(|r| r[PAIR_PATHS]).collect(),
        kappa2,
    })
}

fn coupled_single(
    params: &KernelParams,
    sigma: &CoefficientSpec,
    euler: &VolterraPath,
    fine_grid: &BrownianGrid,
    t_index: usize,
    select: TermSelection,
) -> Result<CoupledTerms> {
    let n = params.n();
    if !fine_grid.n_fine.is_multiple_of(n) || !euler.driver.same_path(&DriverTag::of(fine_grid)) {
        return Err(Error::MismatchedPaths(format!(
            "euler driven by {:?}, fine grid is {:?}",
            euler.driver,
            DriverTag::of(fine_grid)
        )));
    }
    let factor = fine_grid.n_fine / n;
    let scheme = CoupledScheme::new(params, factor)?;
    let mut xi = vec![0.0; fine_grid.increments.len()];
    NormalStream::new(fine_grid.seed, Stream::Bridge, fine_grid.path_index)?.fill(0, &mut xi);
    let terms = scheme.run(
        sigma,
        euler.x0,
        &single_lane(&fine_grid.increments),
        Some(&single_lane(&xi)),
        t_index,
        select,
    )?;
    if terms.x_euler[0] != euler.values[t_index] {
        return Err(Error::MismatchedPaths(
            "euler path is not the block-sum coarsening of the fine grid".into(),
        ));
    }
    Ok(terms)
}

/// `A^n_t` at `t = t_grid_index/n`, with the fine cells of `fine_grid`
/// integrated exactly against the kernel.
pub fn a_term(
    params: &KernelParams,
    sigma: &CoefficientSpec,
    euler: &VolterraPath,
    fine_grid: &BrownianGrid,
    t_grid_index: usize,
) -> Result<f64> {
    Ok(coupled_single(
        params,
        sigma,
        euler,
        fine_grid,
        t_grid_index,
        TermSelection::A_ONLY,
    )?
    .a[0])
}

/// `(C^n_t, Z^n_t)` as left-point fine-grid sums.
pub fn c_and_z_terms(
    params: &KernelParams,
    sigma: &CoefficientSpec,
    euler: &VolterraPath,
    reference: &VolterraPath,
    fine_grid: &BrownianGrid,
    t: f64,
) -> Result<(f64, f64)> {
    if !reference.driver.same_path(&euler.driver) || reference.driver.n_fine != fine_grid.n_fine {
        return Err(Error::MismatchedPaths(
            "reference and euler use different paths".into(),
        ));
    }
    if !params.is_grid_point(t) {
        return Err(Error::OffGrid(t));
    }
    let j = params.grid_index(t)?;
    let terms = coupled_single(params, sigma, euler, fine_grid, j, TermSelection::ALL)?;
    Ok((terms.c[0], terms.z[0]))
}

/// `n^{α+1/2} (X^n_t - X^{ref}_t)`.
pub fn normalized_error(
    euler: &VolterraPath,
    reference: &VolterraPath,
    params: &KernelParams,
    t: f64,
) -> Result<f64> {
    if !euler.driver.same_path(&reference.driver) || euler.values.len() != reference.values.len() {
        return Err(Error::MismatchedPaths(
            "euler and reference are not coupled".into(),
        ));
    }
    if !params.is_grid_point(t) {
        return Err(Error::OffGrid(t));
    }
    let j = params.grid_index(t)?;
    let scale = (params.n() as f64).powf(params.alpha() + 0.5);
    Ok(scale * (euler.values[j] - reference.values[j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine() -> CoefficientSpec {
        CoefficientSpec::Affine { a: 1.0, b: 0.3 }
    }

    #[test]
    fn euler_matches_direct_double_loop() {
        let params = KernelParams::unit(0.25, 4).unwrap();
        let grid = paths::generate(42, Stream::W, 0, 4, 1.0).unwrap();
        let path = euler_path(&params, &affine(), 1.0, &grid).unwrap();
        let mut x = [1.0; 5];
        for j in 1..=4 {
            let mut acc = 1.0;
            for i in 0..j {
                acc += ((j - i) as f64 / 4.0).powf(0.25) * (1.0 + 0.3 * x[i]) * grid.increments[i];
            }
            x[j] = acc;
        }
        for j in 0..=4 {
            assert!((path.values[j] - x[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_sigma_and_brownian_special_cases() {
        let grid = paths::generate(1, Stream::W, 3, 32, 1.0).unwrap();
        let p = KernelParams::unit(-0.3, 32).unwrap();
        let flat = euler_path(&p, &CoefficientSpec::Constant { c: 0.0 }, 2.0, &grid).unwrap();
        assert!(flat.values.iter().all(|v| *v == 2.0));
        let p0 = KernelParams::unit(0.0, 32).unwrap();
        let bm = euler_path(&p0, &CoefficientSpec::Constant { c: 1.0 }, 0.5, &grid).unwrap();
        let mut w = 0.5;
        for j in 0..32 {
            assert!((bm.values[j] - w).abs() < 1e-14);
            w += grid.increments[j];
        }
    }

    #[test]
    fn resolution_and_stream_errors() {
        let grid = paths::generate(1, Stream::W, 0, 16, 1.0).unwrap();
        let p = KernelParams::unit(0.1, 8).unwrap();
        assert!(matches!(
            euler_path(&p, &affine(), 1.0, &grid),
            Err(Error::ResolutionMismatch { .. })
        ));
        let p16 = KernelParams::unit(0.1, 16).unwrap();
        assert!(matches!(
            limit_pair_path(&p16, &affine(), 1.0, &grid, &grid, 1.0),
            Err(Error::StreamIdentity)
        ));
    }

    #[test]
    fn decomposition_identity_on_coupled_paths() {
        for alpha in [-0.25, 0.25] {
            let params = KernelParams::unit(alpha, 8).unwrap();
            let fine = paths::generate(9, Stream::W, 2, 8 * 64, 1.0).unwrap();
            let coarse = paths::coarsen(&fine, 64).unwrap();
            let sigma = affine();
            let euler = euler_path(&params, &sigma, 1.0, &coarse).unwrap();
            let reference = reference_path(&params, &sigma, 1.0, &fine, 64).unwrap();
            let scheme = CoupledScheme::new(&params, 64).unwrap();
            let t = scheme
                .run(
                    &sigma,
                    1.0,
                    &single_lane(&fine.increments),
                    None,
                    8,
                    TermSelection::ALL,
                )
                .unwrap();
            let y = normalized_error(&euler, &reference, &params, 1.0).unwrap();
            assert!((t.y[0] - y).abs() < 1e-12);
            let sum = t.a_left[0] + t.c[0] + t.z[0];
            assert!((sum - y).abs() < 1e-10, "alpha={alpha}: {sum} vs {y}");
        }
    }

    #[test]
    fn constant_sigma_kills_c_and_z() {
        let params = KernelParams::unit(0.25, 8).unwrap();
        let fine = paths::generate(4, Stream::W, 0, 8 * 16, 1.0).unwrap();
        let sigma = CoefficientSpec::Constant { c: 1.5 };
        let euler = euler_path(&params, &sigma, 0.0, &paths::coarsen(&fine, 16).unwrap()).unwrap();
        let reference = reference_path(&params, &sigma, 0.0, &fine, 16).unwrap();
        let (c, z) = c_and_z_terms(&params, &sigma, &euler, &reference, &fine, 1.0).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(z, 0.0);
    }

    #[test]
    fn a_term_vanishes_at_alpha_zero() {
        let params = KernelParams::unit(0.0, 8).unwrap();
        let fine = paths::generate(4, Stream::W, 0, 64, 1.0).unwrap();
        let sigma = affine();
        let euler = euler_path(&params, &sigma, 1.0, &paths::coarsen(&fine, 8).unwrap()).unwrap();
        assert_eq!(a_term(&params, &sigma, &euler, &fine, 8).unwrap(), 0.0);
    }

    #[test]
    fn a_term_rejects_uncoupled_euler() {
        let params = KernelParams::unit(0.2, 8).unwrap();
        let fine = paths::generate(4, Stream::W, 0, 64, 1.0).unwrap();
        let other = paths::generate(4, Stream::W, 1, 8, 1.0).unwrap();
        let euler = euler_path(&params, &affine(), 1.0, &other).unwrap();
        assert!(matches!(
            a_term(&params, &affine(), &euler, &fine, 8),
            Err(Error::MismatchedPaths(_))
        ));
    }

    #[test]
    fn limit_pair_trivial_cases() {
        let p = KernelParams::unit(0.2, 32).unwrap();
        let w = paths::generate(1, Stream::W, 0, 32, 1.0).unwrap();
        let b = paths::generate(1, Stream::B, 0, 32, 1.0).unwrap();
        let lp =
            limit_pair_path(&p, &CoefficientSpec::Constant { c: 1.0 }, 1.0, &w, &b, 0.8).unwrap();
        assert!(lp.y_values.iter().all(|v| *v == 0.0));
        let lp = limit_pair_path(&p, &affine(), 1.0, &w, &b, 0.0).unwrap();
        assert!(lp.y_values.iter().all(|v| *v == 0.0));
        let e = euler_path(&p, &affine(), 1.0, &w).unwrap();
        assert_eq!(lp.x_values, e.values);
    }
}
