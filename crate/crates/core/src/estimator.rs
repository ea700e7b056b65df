//! Per-path estimator values.
//!
//! With `W_k = Ŵ¹_k + Ŵ²_k` the raw estimator is
//!
//! ```text
//! psi_hat = [g(X_T, I_T) - g(X_{T_N}, I_{T_N}) 1{N > 0}] / (1 - F(ΔT_{N+1}))
//!           * prod_{k=1..N} W_k / rho(ΔT_k)
//! ```
//!
//! and its antithetic twin replaces the terminal state by the one driven by
//! the negated last increment, which flips the sign of `Ŵ¹_N` (odd in the
//! increment) and leaves `Ŵ²_N` unchanged (even).

use rand::Rng;

use crate::averaging::{AveragingMoments, AveragingWeight};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::SdeModel;
use crate::path::{increment_from_normals, PathRecord};
use crate::steps::StepDistribution;

/// Running product that switches to log-magnitude once it leaves the range
/// where direct multiplication is safe.
#[derive(Debug, Clone, Copy)]
struct WeightProduct {
    direct: f64,
    log_mag: f64,
    negative: bool,
    in_log: bool,
}

const LOG_SWITCH: f64 = 1e100;

impl WeightProduct {
    fn one() -> Self {
        WeightProduct {
            direct: 1.0,
            log_mag: 0.0,
            negative: false,
            in_log: false,
        }
    }

    fn mul(&mut self, f: f64) {
        if f == 0.0 {
            *self = WeightProduct {
                direct: 0.0,
                log_mag: f64::NEG_INFINITY,
                negative: false,
                in_log: false,
            };
            return;
        }
        if !self.in_log {
            let next = self.direct * f;
            if next.abs() <= LOG_SWITCH || next == 0.0 {
                self.direct = next;
                return;
            }
            if self.direct == 0.0 {
                return;
            }
            self.in_log = true;
            self.negative = self.direct < 0.0;
            self.log_mag = self.direct.abs().ln();
        }
        self.log_mag += f.abs().ln();
        self.negative ^= f < 0.0;
    }

    fn value(&self) -> f64 {
        if self.in_log {
            let v = self.log_mag.exp();
            if self.negative {
                -v
            } else {
                v
            }
        } else {
            self.direct
        }
    }
}

/// Estimator values of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSample {
    pub psi_hat: f64,
    pub psi_tilde: f64,
    pub psi: f64,
    pub n_t: usize,
    /// `prod_{k=1..N} (Ŵ¹_k + Ŵ²_k) / rho(ΔT_k)`.
    pub weight_product: f64,
}

/// `Ŵ¹ = (mu_k - mu_{k-1}) · M_{k+1}`.
pub fn weight_w1(mu_k: &[f64], mu_prev: &[f64], m_next: &[f64]) -> f64 {
    mu_k.iter().zip(mu_prev).zip(m_next).map(|((a, b), m)| (a - b) * m).sum()
}

/// `Ŵ² = ½ Tr[(a_k - a_{k-1}) (M M^T - (m2~/m2) a_k^{-1} / ΔT_{k+1})]`.
///
/// Matrices are row-major `d x d`; `a_k_inv` must be the inverse of `a_k`.
pub fn weight_w2(a_k: &[f64], a_prev: &[f64], a_k_inv: &[f64], m_next: &[f64], moments: &AveragingMoments, dt_next: f64) -> f64 {
    let d = m_next.len();
    let mut diff = [0.0f64; 16];
    let mut heap;
    let diff: &mut [f64] = if d * d <= 16 {
        &mut diff[..d * d]
    } else {
        heap = vec![0.0; d * d];
        &mut heap
    };
    for ((o, a), b) in diff.iter_mut().zip(a_k).zip(a_prev) {
        *o = a - b;
    }
    let quad = linalg::quadratic_form(diff, m_next, d);
    let comp = moments.ratio() / dt_next * linalg::trace_of_product(diff, a_k_inv, d);
    0.5 * (quad - comp)
}

/// Per-path scratch for the weight computations.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    a_k: Vec<f64>,
    a_prev: Vec<f64>,
    a_inv: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// `(Ŵ¹_k, Ŵ²_k)` for `k = 1..=N_T`; `with_second = false` skips Ŵ².
fn step_weights(path: &PathRecord, k: usize, with_second: bool, ws: &mut Workspace) -> (f64, f64) {
    let d = path.dim();
    let w1 = weight_w1(path.mu_at(k), path.mu_at(k - 1), path.malliavin_at(k));
    if !with_second {
        return (w1, 0.0);
    }
    if path.sigma_at(k) == path.sigma_at(k - 1) {
        return (w1, 0.0);
    }
    let dd = d * d;
    ws.a_k.resize(dd, 0.0);
    ws.a_prev.resize(dd, 0.0);
    ws.a_inv.resize(dd, 0.0);
    ws.tmp.resize(dd, 0.0);
    linalg::mul_transpose_into(path.sigma_at(k), path.sigma_at(k), d, &mut ws.a_k);
    linalg::mul_transpose_into(path.sigma_at(k - 1), path.sigma_at(k - 1), d, &mut ws.a_prev);
    // a^{-1} = S S^T with S = (sigma^T)^{-1}
    let s = path.sigma_t_inv_at(k);
    linalg::mul_transpose_into(s, s, d, &mut ws.a_inv);
    let m = path.moments_at(k);
    let w2 = weight_w2(&ws.a_k, &ws.a_prev, &ws.a_inv, path.malliavin_at(k), m, m.dt);
    (w1, w2)
}

struct Factors {
    /// product over k = 1..N-1
    head: WeightProduct,
    last_w1: f64,
    last_w2: f64,
    last_rho: f64,
}

fn collect_factors(path: &PathRecord, dist: &StepDistribution, with_second: bool, ws: &mut Workspace) -> Factors {
    let n = path.n_t();
    let steps = path.grid().steps();
    let mut head = WeightProduct::one();
    let (mut last_w1, mut last_w2, mut last_rho) = (0.0, 0.0, 1.0);
    for k in 1..=n {
        let (w1, w2) = step_weights(path, k, with_second, ws);
        let rho = dist.density_unchecked(steps[k - 1]);
        if k < n {
            head.mul((w1 + w2) / rho);
        } else {
            (last_w1, last_w2, last_rho) = (w1, w2, rho);
        }
    }
    Factors {
        head,
        last_w1,
        last_w2,
        last_rho,
    }
}

fn prefactor(path: &PathRecord, model: &SdeModel, dist: &StepDistribution, terminal_x: &[f64], terminal_i: &[f64]) -> f64 {
    let n = path.n_t();
    let mut num = model.payoff(terminal_x, terminal_i);
    if n > 0 {
        num -= model.payoff(path.x_at(n), path.i_at(n));
    }
    num / dist.survival(path.grid().steps()[n])
}

fn assemble(path: &PathRecord, model: &SdeModel, dist: &StepDistribution, f: &Factors) -> EstimatorSample {
    let n = path.n_t();
    let df = model.discount_factor();
    let mut full = f.head;
    let mut tilde = f.head;
    if n > 0 {
        full.mul((f.last_w1 + f.last_w2) / f.last_rho);
        tilde.mul((f.last_w2 - f.last_w1) / f.last_rho);
    }
    let hat_pre = prefactor(path, model, dist, path.x_terminal(), path.i_terminal());
    let tilde_pre = prefactor(path, model, dist, path.x_tilde(), path.i_tilde());
    let weight_product = full.value();
    let psi_hat = df * hat_pre * weight_product;
    let psi_tilde = df * tilde_pre * tilde.value();
    EstimatorSample {
        psi_hat,
        psi_tilde,
        psi: 0.5 * (psi_hat + psi_tilde),
        n_t: n,
        weight_product,
    }
}

/// `psi_hat`, `psi_tilde` and their average for one path.
pub fn psi(path: &PathRecord, model: &SdeModel, dist: &StepDistribution) -> EstimatorSample {
    psi_with(path, model, dist, &mut Workspace::new())
}

pub fn psi_with(path: &PathRecord, model: &SdeModel, dist: &StepDistribution, ws: &mut Workspace) -> EstimatorSample {
    let f = collect_factors(path, dist, true, ws);
    assemble(path, model, dist, &f)
}

pub fn psi_hat(path: &PathRecord, model: &SdeModel, dist: &StepDistribution) -> f64 {
    psi(path, model, dist).psi_hat
}

/// Antithetic twin. For `N_T = 0` there is no trailing weight and the value
/// is the payoff at the mirrored terminal state over `1 - F(T)`.
pub fn psi_tilde(path: &PathRecord, model: &SdeModel, dist: &StepDistribution) -> f64 {
    psi(path, model, dist).psi_tilde
}

/// Raw estimator with the second-order weights dropped; valid when the
/// volatility is constant. Fails if the path's frozen volatilities differ.
pub fn psi_hat_constvol(path: &PathRecord, model: &SdeModel, dist: &StepDistribution) -> Result<f64> {
    psi_hat_constvol_with(path, model, dist, &mut Workspace::new())
}

pub fn psi_hat_constvol_with(path: &PathRecord, model: &SdeModel, dist: &StepDistribution, ws: &mut Workspace) -> Result<f64> {
    let first = path.sigma_at(0);
    if (1..=path.n_t()).any(|k| path.sigma_at(k) != first) {
        return Err(Error::NonConstantVolatility);
    }
    let f = collect_factors(path, dist, false, ws);
    Ok(assemble(path, model, dist, &f).psi_hat)
}

/// How the Euler baseline accumulates `I` over a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralRule {
    /// Exact joint `(ΔW, J)` update of the frozen-coefficient scheme.
    #[default]
    Exact,
    /// Rectangle rule at the right end point: `I += X_{t_{k+1}} ΔA`.
    RightPoint,
}

/// Scratch for [`euler_baseline_with`].
#[derive(Debug, Default, Clone)]
pub struct EulerScratch {
    x: Vec<f64>,
    i: Vec<f64>,
    xn: Vec<f64>,
    inext: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    dw: Vec<f64>,
    j: Vec<f64>,
    z: Vec<f64>,
}

/// Discounted payoff of one uniform-grid Euler path with exact `I` updates.
pub fn euler_baseline<R: Rng + ?Sized>(model: &SdeModel, weight: &AveragingWeight, n_steps: usize, rng: &mut R) -> Result<f64> {
    euler_baseline_with(model, weight, n_steps, IntegralRule::Exact, rng, &mut EulerScratch::default())
}

pub fn euler_baseline_with<R: Rng + ?Sized>(
    model: &SdeModel,
    weight: &AveragingWeight,
    n_steps: usize,
    rule: IntegralRule,
    rng: &mut R,
    s: &mut EulerScratch,
) -> Result<f64> {
    if n_steps == 0 {
        return Err(Error::param("euler_steps", "need at least one step"));
    }
    let d = model.dim();
    let horizon = model.maturity();
    let h = horizon / n_steps as f64;
    for v in [&mut s.x, &mut s.i, &mut s.xn, &mut s.inext, &mut s.mu, &mut s.dw, &mut s.j] {
        v.resize(d, 0.0);
    }
    s.sigma.resize(d * d, 0.0);
    s.z.resize(2 * d, 0.0);
    s.x.copy_from_slice(model.x0());
    s.i.fill(0.0);
    let linear = weight.is_linear();
    let uniform = AveragingMoments::linear(h);
    for k in 0..n_steps {
        let t = k as f64 * h;
        let m = if linear { uniform } else { weight.moments(t, if k + 1 == n_steps { horizon } else { t + h })? };
        model.drift_into(t, &s.x, &s.i, &mut s.mu);
        model.vol_into(t, &s.x, &s.i, &mut s.sigma);
        for z in s.z.iter_mut() {
            *z = rng.sample(rand_distr::StandardNormal);
        }
        increment_from_normals(&m, &s.z, &mut s.dw, &mut s.j)?;
        crate::path::step(&s.x, &s.i, &s.mu, &s.sigma, &m, &s.dw, &s.j, &mut s.xn, &mut s.inext);
        if rule == IntegralRule::RightPoint {
            for r in 0..d {
                s.inext[r] = s.i[r] + s.xn[r] * m.delta_a;
            }
        }
        std::mem::swap(&mut s.x, &mut s.xn);
        std::mem::swap(&mut s.i, &mut s.inext);
    }
    Ok(model.discount_factor() * model.payoff(&s.x, &s.i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{simulate_on_grid, simulate_path, TimeGrid};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn w1_values() {
        assert_eq!(weight_w1(&[0.4], &[0.4], &[3.0]), 0.0);
        assert_relative_eq!(weight_w1(&[1.3], &[1.0], &[2.0]), 0.6, max_relative = 1e-14);
    }

    #[test]
    fn w2_values() {
        let m = AveragingMoments::linear(1.0);
        assert_eq!(weight_w2(&[2.0], &[2.0], &[0.5], &[1.7], &m, 1.0), 0.0);
        let mm = 1.3;
        let v = weight_w2(&[1.0], &[0.9], &[1.0], &[mm], &m, 1.0);
        assert_relative_eq!(v, 0.05 * (mm * mm - 4.0), max_relative = 1e-12);
    }

    #[test]
    fn w2_two_dimensional_trace() {
        // diagonal case splits into a sum of scalar weights
        let m = AveragingMoments::linear(0.5);
        let a_k = [2.0, 0.0, 0.0, 3.0];
        let a_prev = [1.5, 0.0, 0.0, 3.5];
        let a_inv = [0.5, 0.0, 0.0, 1.0 / 3.0];
        let mv = [0.7, -1.1];
        let v = weight_w2(&a_k, &a_prev, &a_inv, &mv, &m, 0.5);
        let s1 = weight_w2(&[2.0], &[1.5], &[0.5], &[0.7], &m, 0.5);
        let s2 = weight_w2(&[3.0], &[3.5], &[1.0 / 3.0], &[-1.1], &m, 0.5);
        assert_relative_eq!(v, s1 + s2, max_relative = 1e-13);
    }

    #[test]
    fn weight_product_switches_to_log() {
        let mut p = WeightProduct::one();
        for _ in 0..5 {
            p.mul(-1e60);
        }
        assert!(p.in_log);
        assert_relative_eq!(p.value(), -1e300, max_relative = 1e-10);
        p.mul(1e60);
        assert!(p.value().is_infinite() && p.value() < 0.0);
        let mut q = WeightProduct::one();
        q.mul(1e80);
        q.mul(1e80);
        q.mul(1e-90);
        assert_relative_eq!(q.value(), 1e70, max_relative = 1e-10);
        let mut z = WeightProduct::one();
        z.mul(1e200);
        z.mul(0.0);
        assert_eq!(z.value(), 0.0);
    }

    #[test]
    fn empty_product_when_no_grid_points() {
        let model = SdeModel::constant_coefficients(1.0, 1.0, 0.0, 0.5, 1.0).unwrap();
        let dist = StepDistribution::power_law(0.35, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut rec = PathRecord::new();
        simulate_on_grid(&model, &AveragingWeight::linear(), TimeGrid::from_steps(1.0, [1.5]).unwrap(), &mut rng, &mut rec).unwrap();
        let s = psi(&rec, &model, &dist);
        assert_eq!(s.n_t, 0);
        assert_eq!(s.weight_product, 1.0);
        let surv = dist.survival(1.0);
        assert_relative_eq!(s.psi_hat, model.payoff(rec.x_terminal(), rec.i_terminal()) / surv, max_relative = 1e-14);
        assert_relative_eq!(s.psi_tilde, model.payoff(rec.x_tilde(), rec.i_tilde()) / surv, max_relative = 1e-14);
        assert_eq!(s.psi, 0.5 * (s.psi_hat + s.psi_tilde));
    }

    #[test]
    fn constant_coefficients_vanish_on_positive_n() {
        let model = SdeModel::constant_coefficients(1.0, 1.0, 0.2, 0.5, 0.8).unwrap();
        let dist = StepDistribution::power_law(0.35, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rec = PathRecord::new();
        let mut seen = 0;
        for _ in 0..5000 {
            simulate_path(&model, &AveragingWeight::linear(), &dist, &mut rng, &mut rec).unwrap();
            let s = psi(&rec, &model, &dist);
            if s.n_t > 0 {
                seen += 1;
                assert_eq!(s.weight_product, 0.0);
                assert_eq!(s.psi_hat, 0.0);
                assert_eq!(s.psi_tilde, 0.0);
            } else {
                assert_eq!(s.weight_product, 1.0);
            }
        }
        assert!(seen > 100);
    }

    #[test]
    fn constvol_trailing_factor_is_negated_w1() {
        let p = crate::model::BachelierParams::new(0.05, 100.0, 0.1, 100.0, 1.0);
        let model = crate::model::bachelier_model(&p).unwrap();
        let dist = StepDistribution::power_law(0.35, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut rec = PathRecord::new();
        let mut ws = Workspace::new();
        for _ in 0..2000 {
            simulate_path(&model, &AveragingWeight::linear(), &dist, &mut rng, &mut rec).unwrap();
            let n = rec.n_t();
            for k in 1..=n {
                let (_, w2) = step_weights(&rec, k, true, &mut ws);
                assert_eq!(w2, 0.0);
            }
            let s = psi_with(&rec, &model, &dist, &mut ws);
            assert_eq!(psi_hat_constvol_with(&rec, &model, &dist, &mut ws).unwrap(), s.psi_hat);
            if n > 0 {
                let f = collect_factors(&rec, &dist, true, &mut ws);
                let mut mirrored = f.head;
                mirrored.mul(-f.last_w1 / f.last_rho);
                let pre = prefactor(&rec, &model, &dist, rec.x_tilde(), rec.i_tilde());
                assert_eq!(s.psi_tilde, model.discount_factor() * pre * mirrored.value());
            }
        }
    }

    #[test]
    fn constvol_rejects_varying_vol() {
        let model = crate::model::local_vol_model(&crate::model::LocalVolParams::reference(
            crate::model::LocalVolVariant::Sin4,
        ))
        .unwrap();
        let dist = StepDistribution::power_law(0.35, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rec = PathRecord::new();
        loop {
            simulate_path(&model, &AveragingWeight::linear(), &dist, &mut rng, &mut rec).unwrap();
            if rec.n_t() > 0 {
                break;
            }
        }
        assert_eq!(psi_hat_constvol(&rec, &model, &dist), Err(Error::NonConstantVolatility));
    }

    #[test]
    fn euler_rejects_zero_steps() {
        let model = SdeModel::constant_coefficients(1.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(euler_baseline(&model, &AveragingWeight::linear(), 0, &mut rng).is_err());
    }

    #[test]
    fn euler_right_point_on_deterministic_path() {
        // mu = 1, sigma ~ 0: X_t = t, right-point sum of X over 4 steps = (1+2+3+4)/16
        let model = SdeModel::new(
            "det",
            vec![0.0],
            1.0,
            |_, _, _, out| out[0] = 1.0,
            |_, _, _, out| out[0] = 1e-300,
            |_, xbar| xbar[0],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = EulerScratch::default();
        let w = AveragingWeight::linear();
        let exact = euler_baseline_with(&model, &w, 4, IntegralRule::Exact, &mut rng, &mut s).unwrap();
        let right = euler_baseline_with(&model, &w, 4, IntegralRule::RightPoint, &mut rng, &mut s).unwrap();
        assert_relative_eq!(exact, 0.5, max_relative = 1e-12);
        assert_relative_eq!(right, 10.0 / 16.0, max_relative = 1e-12);
    }
}
