//! Unbiasedness and antithetic structure of the estimator.

mod common;

use common::{mean_se, sample_variance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ubsim::estimator::{self, euler_baseline};
use ubsim::model::{bachelier_model, normal_call};
use ubsim::path::simulate_path;
use ubsim::tables::bachelier_problem;
use ubsim::{AveragingWeight, BachelierParams, Method, PathRecord, SdeModel, StepDistribution};

// X = x0 + mu t + sigma W, I_T = ∫ X dt ~ N(x0 T + mu T^2/2, sigma^2 T^3/3).
const X0: f64 = 1.0;
const MU: f64 = 0.2;
const SIGMA: f64 = 0.5;
const STRIKE: f64 = 1.05;

fn constant_model() -> SdeModel {
    SdeModel::constant_coefficients(X0, 1.0, MU, SIGMA, STRIKE).unwrap()
}

fn constant_closed_form() -> f64 {
    normal_call(X0 + MU / 2.0, SIGMA / 3f64.sqrt(), STRIKE)
}

struct Samples {
    hat: Vec<f64>,
    tilde: Vec<f64>,
    psi: Vec<f64>,
}

fn sample(model: &SdeModel, n: usize, seed: u64) -> Samples {
    let weight = AveragingWeight::linear();
    let dist = StepDistribution::power_law(0.35, model.maturity()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = PathRecord::new();
    let mut out = Samples {
        hat: Vec::with_capacity(n),
        tilde: Vec::with_capacity(n),
        psi: Vec::with_capacity(n),
    };
    for _ in 0..n {
        simulate_path(model, &weight, &dist, &mut rng, &mut rec).unwrap();
        let s = estimator::psi(&rec, model, &dist);
        if s.n_t == 0 {
            assert_eq!(s.weight_product, 1.0);
        }
        assert!(s.weight_product.is_finite());
        out.hat.push(s.psi_hat);
        out.tilde.push(s.psi_tilde);
        out.psi.push(s.psi);
    }
    out
}

#[test]
fn constant_coefficients_recover_closed_form() {
    let s = sample(&constant_model(), 1_000_000, 21);
    let (mean, se) = mean_se(&s.psi);
    let cf = constant_closed_form();
    assert!((mean - cf).abs() <= 3.0 * se, "{mean} +- {se} vs {cf}");
}

#[test]
fn hat_and_tilde_share_a_mean() {
    let s = sample(&constant_model(), 1_000_000, 22);
    let (a, sa) = mean_se(&s.hat);
    let (b, sb) = mean_se(&s.tilde);
    assert!((a - b).abs() <= 3.0 * (sa * sa + sb * sb).sqrt());
}

#[test]
fn antithetic_average_reduces_variance() {
    let s = sample(&constant_model(), 100_000, 23);
    assert!(sample_variance(&s.psi) < sample_variance(&s.hat));
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[test]
fn hat_and_tilde_are_identically_distributed() {
    // split seeds so the two samples are independent
    let n = 100_000;
    let model = constant_model();
    let a = sample(&model, n, 24).hat;
    let b = sample(&model, n, 25).tilde;
    let crit = 1.628 * (2.0 / n as f64).sqrt();
    let d = ks(a, b);
    assert!(d < crit, "KS {d} vs 1% critical value {crit}");
}

#[test]
fn euler_is_exact_for_constant_coefficients() {
    let model = constant_model();
    let weight = AveragingWeight::linear();
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for steps in [1, 7] {
        let xs: Vec<f64> = (0..400_000).map(|_| euler_baseline(&model, &weight, steps, &mut rng).unwrap()).collect();
        let (mean, se) = mean_se(&xs);
        let cf = constant_closed_form();
        assert!((mean - cf).abs() <= 3.0 * se, "{steps} steps: {mean} +- {se} vs {cf}");
    }
}

#[test]
fn constvol_and_full_estimator_agree_on_bachelier() {
    let problem = bachelier_problem(0.1).unwrap();
    let a = problem.simulate(Method::UnbiasedConstVol, 400_000, 27, 1).unwrap();
    let b = problem.simulate(Method::Unbiased, 400_000, 28, 1).unwrap();
    let (sa, sb) = (a.stderr().unwrap(), b.stderr().unwrap());
    assert!((a.mean - b.mean).abs() <= 3.0 * (sa * sa + sb * sb).sqrt());
}

#[test]
fn constant_vol_second_weight_is_exactly_zero() {
    let p = BachelierParams::new(0.05, 100.0, 0.2, 100.0, 1.0);
    let model = bachelier_model(&p).unwrap();
    let weight = AveragingWeight::linear();
    let dist = StepDistribution::power_law(0.35, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut rec = PathRecord::new();
    let mut checked = 0;
    while checked < 2000 {
        simulate_path(&model, &weight, &dist, &mut rng, &mut rec).unwrap();
        let n = rec.n_t();
        if n == 0 {
            continue;
        }
        let s = estimator::psi(&rec, &model, &dist);
        let cv = estimator::psi_hat_constvol(&rec, &model, &dist).unwrap();
        assert_eq!(s.psi_hat.to_bits(), cv.to_bits());
        let m = rec.moments_at(n);
        let a = rec.sigma_at(n)[0].powi(2);
        let w2 = estimator::weight_w2(&[a], &[a], &[1.0 / a], rec.malliavin_at(n), m, m.dt);
        assert_eq!(w2, 0.0);
        checked += 1;
    }
}
