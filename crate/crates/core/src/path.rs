//! Euler scheme on the random time grid.
//!
//! On each interval `[T_k, T_{k+1}]` the coefficients are frozen at `T_k`, so
//! `(ΔW, J)` with `J = ∫ (A_u - A_{T_k}) dW_u` is jointly Gaussian and the
//! pair `(X, I)` can be advanced exactly. The record keeps everything the
//! estimator needs: frozen coefficients, draws, Malliavin vectors and the
//! antithetic terminal state obtained by flipping the last increment.

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::averaging::{AveragingMoments, AveragingWeight};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::SdeModel;
use crate::steps::StepDistribution;

/// Renewal grid `0 = T_0 < T_1 < ... < T_{N_T} < T_{N_T + 1} = T`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    steps: Vec<f64>,
}

impl TimeGrid {
    /// Builds the grid from raw step lengths `tau_1, tau_2, ...`, truncating
    /// the first one that reaches the horizon. Consumes exactly `N_T + 1` steps.
    pub fn from_steps<I>(horizon: f64, steps: I) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut grid = TimeGrid::default();
        let mut it = steps.into_iter();
        grid.fill(horizon, || it.next().ok_or_else(|| Error::param("steps", "ran out of step lengths before reaching the horizon")))?;
        Ok(grid)
    }

    fn fill<F>(&mut self, horizon: f64, mut next_step: F) -> Result<()>
    where
        F: FnMut() -> Result<f64>,
    {
        if !(horizon > 0.0) {
            return Err(Error::param("maturity", "must be positive"));
        }
        self.times.clear();
        self.steps.clear();
        self.times.push(0.0);
        let mut now = 0.0;
        loop {
            let tau = next_step()?;
            if !(tau > 0.0) {
                return Err(Error::param("steps", format!("step lengths must be positive, got {tau}")));
            }
            let next = now + tau;
            if next >= horizon {
                self.steps.push(horizon - now);
                self.times.push(horizon);
                return Ok(());
            }
            // tau is kept as the step even when it is below the resolution of `now`
            self.steps.push(tau);
            self.times.push(next);
            now = next;
        }
    }

    /// Number of grid points in `[0, T)`.
    pub fn n_t(&self) -> usize {
        self.steps.len() - 1
    }

    /// `T_0, ..., T_{N_T + 1}`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `ΔT_1, ..., ΔT_{N_T + 1}`.
    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("grid always has two points")
    }
}

/// Samples a renewal grid with step law `dist`.
pub fn build_grid<R: Rng + ?Sized>(dist: &StepDistribution, horizon: f64, rng: &mut R) -> Result<TimeGrid> {
    let mut grid = TimeGrid::default();
    build_grid_into(dist, horizon, rng, &mut grid)?;
    Ok(grid)
}

pub fn build_grid_into<R: Rng + ?Sized>(
    dist: &StepDistribution,
    horizon: f64,
    rng: &mut R,
    grid: &mut TimeGrid,
) -> Result<()> {
    grid.fill(horizon, || {
        let u: f64 = Open01.sample(rng);
        dist.sample_step(u)
    })
}

/// Joint Gaussian increment `(ΔW, J)` over one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementDraw {
    pub dw: Vec<f64>,
    pub j: Vec<f64>,
    pub dt: f64,
}

/// Maps `2d` independent standard normals to `(ΔW, J)` through the
/// lower-triangular factor of `[[dt, dt m1], [dt m1, dt m2~]]`.
/// Normals are consumed in pairs `(z[2i], z[2i + 1])` per component.
pub fn increment_from_normals(m: &AveragingMoments, z: &[f64], dw: &mut [f64], j: &mut [f64]) -> Result<()> {
    let (l11, l21, l22) = cholesky_factor(m)?;
    for (i, (w, jj)) in dw.iter_mut().zip(j.iter_mut()).enumerate() {
        let (z1, z2) = (z[2 * i], z[2 * i + 1]);
        *w = l11 * z1;
        *jj = l21 * z1 + l22 * z2;
    }
    Ok(())
}

/// Entries `(L11, L21, L22)` of the factor.
pub fn cholesky_factor(m: &AveragingMoments) -> Result<(f64, f64, f64)> {
    let dt = m.dt;
    let schur = dt * (m.m2_tilde - m.m1 * m.m1);
    let tol = 1e-12 * dt * m.m2_tilde.max(m.m1 * m.m1);
    if schur < -tol || !schur.is_finite() {
        return Err(Error::CovarianceNotPsd {
            s: f64::NAN,
            t: f64::NAN,
            value: schur,
        });
    }
    let l11 = dt.sqrt();
    Ok((l11, dt * m.m1 / l11, schur.max(0.0).sqrt()))
}

pub fn sample_increment(weight: &AveragingWeight, s: f64, t: f64, gaussians: &[f64]) -> Result<IncrementDraw> {
    if gaussians.is_empty() || !gaussians.len().is_multiple_of(2) {
        return Err(Error::param("gaussians", "need 2d standard normals"));
    }
    let m = weight.moments(s, t)?;
    let d = gaussians.len() / 2;
    let mut draw = IncrementDraw {
        dw: vec![0.0; d],
        j: vec![0.0; d],
        dt: m.dt,
    };
    increment_from_normals(&m, gaussians, &mut draw.dw, &mut draw.j).map_err(|e| match e {
        Error::CovarianceNotPsd { value, .. } => Error::CovarianceNotPsd { s, t, value },
        e => e,
    })?;
    Ok(draw)
}

/// Advances `(x, i)` over one interval with frozen `(mu, sigma)`:
///
/// `x' = x + mu dt + sigma dW`,
/// `i' = i + x ΔA + mu (ΔA dt - dt m1) + sigma (ΔA dW - J)`.
#[allow(clippy::too_many_arguments)]
pub fn step(
    x: &[f64],
    i: &[f64],
    mu: &[f64],
    sigma: &[f64],
    m: &AveragingMoments,
    dw: &[f64],
    j: &[f64],
    x_out: &mut [f64],
    i_out: &mut [f64],
) {
    let d = x.len();
    let (dt, da) = (m.dt, m.delta_a);
    let drift_area = da * dt - dt * m.m1;
    for r in 0..d {
        let row = &sigma[r * d..(r + 1) * d];
        let sdw: f64 = linalg::dot(row, dw);
        let sj: f64 = linalg::dot(row, j);
        x_out[r] = x[r] + mu[r] * dt + sdw;
        i_out[r] = i[r] + x[r] * da + mu[r] * drift_area + (da * sdw - sj);
    }
}

/// Same update for `I` written with the end-point state:
/// `i' = i + x' ΔA - mu dt m1 - sigma J`.
#[allow(clippy::too_many_arguments)]
pub fn integral_update_endpoint(
    i: &[f64],
    x_next: &[f64],
    mu: &[f64],
    sigma: &[f64],
    m: &AveragingMoments,
    j: &[f64],
    i_out: &mut [f64],
) {
    let d = i.len();
    for r in 0..d {
        let sj = linalg::dot(&sigma[r * d..(r + 1) * d], j);
        i_out[r] = i[r] + x_next[r] * m.delta_a - mu[r] * m.dt * m.m1 - sj;
    }
}

/// `M = (sigma^T)^{-1} (m2~ dW - m1 J) / (dt m2)`; `sigma_t_inv` is `(sigma^T)^{-1}`.
pub fn malliavin_into(sigma_t_inv: &[f64], m: &AveragingMoments, dw: &[f64], j: &[f64], out: &mut [f64], work: &mut [f64]) {
    let d = dw.len();
    let scale = 1.0 / (m.dt * m.m2);
    for r in 0..d {
        work[r] = (m.m2_tilde * dw[r] - m.m1 * j[r]) * scale;
    }
    linalg::mat_vec_into(sigma_t_inv, &work[..d], d, out);
}

/// Allocating form of [`malliavin_into`] taking `sigma` itself.
pub fn malliavin_vector(sigma: &[f64], m: &AveragingMoments, draw: &IncrementDraw) -> Result<Vec<f64>> {
    let d = draw.dw.len();
    if !(m.m2 > 0.0) {
        return Err(Error::LocallyConstantWeight {
            s: f64::NAN,
            t: f64::NAN,
            m2: m.m2,
        });
    }
    let mut st = vec![0.0; d * d];
    linalg::transpose_into(sigma, d, &mut st);
    let st_inv = linalg::invert(&st, d)?;
    let mut out = vec![0.0; d];
    let mut work = vec![0.0; d];
    malliavin_into(&st_inv, m, &draw.dw, &draw.j, &mut out, &mut work);
    Ok(out)
}

/// One simulated trajectory on its random grid.
///
/// Index conventions: grid point `k` runs over `0..=N_T`; interval `k` is
/// `[T_k, T_{k+1}]` and carries the draw and Malliavin vector `M_{k+1}`.
#[derive(Debug, Clone, Default)]
pub struct PathRecord {
    dim: usize,
    grid: TimeGrid,
    x: Vec<f64>,
    i: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    sigma_t_inv: Vec<f64>,
    moments: Vec<AveragingMoments>,
    dw: Vec<f64>,
    j: Vec<f64>,
    malliavin: Vec<f64>,
    x_tilde: Vec<f64>,
    i_tilde: Vec<f64>,
    normals: Vec<f64>,
    work: Vec<f64>,
    work2: Vec<f64>,
}

impl PathRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    pub fn n_t(&self) -> usize {
        self.grid.n_t()
    }
    /// State at grid point `k`; `k = N_T + 1` is the terminal state.
    pub fn x_at(&self, k: usize) -> &[f64] {
        &self.x[k * self.dim..(k + 1) * self.dim]
    }
    pub fn i_at(&self, k: usize) -> &[f64] {
        &self.i[k * self.dim..(k + 1) * self.dim]
    }
    pub fn x_terminal(&self) -> &[f64] {
        self.x_at(self.n_t() + 1)
    }
    pub fn i_terminal(&self) -> &[f64] {
        self.i_at(self.n_t() + 1)
    }
    pub fn x_tilde(&self) -> &[f64] {
        &self.x_tilde
    }
    pub fn i_tilde(&self) -> &[f64] {
        &self.i_tilde
    }
    pub fn mu_at(&self, k: usize) -> &[f64] {
        &self.mu[k * self.dim..(k + 1) * self.dim]
    }
    pub fn sigma_at(&self, k: usize) -> &[f64] {
        let dd = self.dim * self.dim;
        &self.sigma[k * dd..(k + 1) * dd]
    }
    /// `(sigma_{T_k}^T)^{-1}`.
    pub fn sigma_t_inv_at(&self, k: usize) -> &[f64] {
        let dd = self.dim * self.dim;
        &self.sigma_t_inv[k * dd..(k + 1) * dd]
    }
    pub fn moments_at(&self, k: usize) -> &AveragingMoments {
        &self.moments[k]
    }
    pub fn dw_at(&self, k: usize) -> &[f64] {
        &self.dw[k * self.dim..(k + 1) * self.dim]
    }
    pub fn j_at(&self, k: usize) -> &[f64] {
        &self.j[k * self.dim..(k + 1) * self.dim]
    }
    /// `M_{k+1}`, the weight of interval `k`.
    pub fn malliavin_at(&self, k: usize) -> &[f64] {
        &self.malliavin[k * self.dim..(k + 1) * self.dim]
    }
    pub fn draw(&self, k: usize) -> IncrementDraw {
        IncrementDraw {
            dw: self.dw_at(k).to_vec(),
            j: self.j_at(k).to_vec(),
            dt: self.grid.steps[k],
        }
    }
    pub fn draws(&self) -> usize {
        self.moments.len()
    }
}

/// Simulates one path: samples the grid, then runs the scheme on it.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &SdeModel,
    weight: &AveragingWeight,
    dist: &StepDistribution,
    rng: &mut R,
    record: &mut PathRecord,
) -> Result<()> {
    let mut grid = std::mem::take(&mut record.grid);
    let res = build_grid_into(dist, model.maturity(), rng, &mut grid);
    record.grid = grid;
    res?;
    run_on_grid(model, weight, rng, record)
}

/// Runs the scheme on a caller-supplied grid.
pub fn simulate_on_grid<R: Rng + ?Sized>(
    model: &SdeModel,
    weight: &AveragingWeight,
    grid: TimeGrid,
    rng: &mut R,
    record: &mut PathRecord,
) -> Result<()> {
    if (grid.horizon() - model.maturity()).abs() > 0.0 {
        return Err(Error::param("grid", "grid must end at the model maturity"));
    }
    record.grid = grid;
    run_on_grid(model, weight, rng, record)
}

fn run_on_grid<R: Rng + ?Sized>(
    model: &SdeModel,
    weight: &AveragingWeight,
    rng: &mut R,
    rec: &mut PathRecord,
) -> Result<()> {
    let d = model.dim();
    let dd = d * d;
    let n = rec.grid.n_t();
    let intervals = n + 1;
    rec.dim = d;
    rec.x.resize((n + 2) * d, 0.0);
    rec.i.resize((n + 2) * d, 0.0);
    rec.mu.resize(intervals * d, 0.0);
    rec.sigma.resize(intervals * dd, 0.0);
    rec.sigma_t_inv.resize(intervals * dd, 0.0);
    rec.dw.resize(intervals * d, 0.0);
    rec.j.resize(intervals * d, 0.0);
    rec.malliavin.resize(intervals * d, 0.0);
    rec.moments.clear();
    rec.x_tilde.resize(d, 0.0);
    rec.i_tilde.resize(d, 0.0);
    rec.normals.resize(2 * d, 0.0);
    rec.work.resize(dd, 0.0);
    rec.work2.resize(dd, 0.0);

    rec.x[..d].copy_from_slice(model.x0());
    rec.i[..d].fill(0.0);

    for k in 0..intervals {
        let t_k = rec.grid.times[k];
        let dt = rec.grid.steps[k];
        let m = weight.moments_span(t_k, dt)?;

        let (xs, xrest) = rec.x.split_at_mut((k + 1) * d);
        let (is, irest) = rec.i.split_at_mut((k + 1) * d);
        let x_k = &xs[k * d..];
        let i_k = &is[k * d..];
        let mu_k = &mut rec.mu[k * d..(k + 1) * d];
        let sigma_k = &mut rec.sigma[k * dd..(k + 1) * dd];
        model.drift_into(t_k, x_k, i_k, mu_k);
        model.vol_into(t_k, x_k, i_k, sigma_k);

        linalg::transpose_into(sigma_k, d, &mut rec.work2);
        let st_inv = &mut rec.sigma_t_inv[k * dd..(k + 1) * dd];
        linalg::invert_into(&rec.work2, d, st_inv, &mut rec.work)?;

        for z in rec.normals.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        let dw = &mut rec.dw[k * d..(k + 1) * d];
        let j = &mut rec.j[k * d..(k + 1) * d];
        increment_from_normals(&m, &rec.normals, dw, j).map_err(|e| match e {
            Error::CovarianceNotPsd { value, .. } => Error::CovarianceNotPsd { s: t_k, t: t_k + dt, value },
            e => e,
        })?;

        step(x_k, i_k, mu_k, sigma_k, &m, dw, j, &mut xrest[..d], &mut irest[..d]);
        malliavin_into(st_inv, &m, dw, j, &mut rec.malliavin[k * d..(k + 1) * d], &mut rec.work);

        if k == n {
            // antithetic tail: same drift part, (dW, J) negated
            let drift_area = m.delta_a * dt - dt * m.m1;
            for r in 0..d {
                let row = &sigma_k[r * d..(r + 1) * d];
                let sdw = linalg::dot(row, dw);
                let sj = linalg::dot(row, j);
                rec.x_tilde[r] = x_k[r] + mu_k[r] * dt - sdw;
                rec.i_tilde[r] = i_k[r] + x_k[r] * m.delta_a + mu_k[r] * drift_area - (m.delta_a * sdw - sj);
            }
        }
        rec.moments.push(m);
    }
    Ok(())
}
