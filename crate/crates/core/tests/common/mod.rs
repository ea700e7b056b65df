//! Oracles shared by the statistical test suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ubsim::path::{malliavin_vector, sample_increment, step};
use ubsim::{AveragingMoments, AveragingWeight};

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let (_, se) = mean_se(xs);
    se * se * xs.len() as f64
}

pub fn normals(rng: &mut ChaCha8Rng) -> [f64; 2] {
    [rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

/// `n` draws of the scalar weight `M` over `[s, t]` with volatility `sigma`.
pub fn malliavin_samples(weight: &AveragingWeight, s: f64, t: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = weight.moments(s, t).unwrap();
    (0..n)
        .map(|_| {
            let draw = sample_increment(weight, s, t, &normals(&mut rng)).unwrap();
            malliavin_vector(&[sigma], &m, &draw).unwrap()[0]
        })
        .collect()
}

/// Empirical mean and variance of `M` against zero and `(m2~/m2) / (dt sigma^2)`.
pub struct MalliavinLaw {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub target_variance: f64,
}

impl MalliavinLaw {
    pub fn measure(weight: &AveragingWeight, s: f64, t: f64, sigma: f64, n: usize, seed: u64) -> Self {
        let m = weight.moments(s, t).unwrap();
        let xs = malliavin_samples(weight, s, t, sigma, n, seed);
        let (mean, se) = mean_se(&xs);
        MalliavinLaw {
            mean,
            mean_se: se,
            variance: sample_variance(&xs),
            target_variance: m.ratio() / (m.dt * sigma * sigma),
        }
    }

    pub fn mean_ok(&self) -> bool {
        self.mean.abs() <= 3.0 * self.mean_se
    }

    pub fn variance_rel_err(&self) -> f64 {
        (self.variance / self.target_variance - 1.0).abs()
    }
}

/// One frozen-coefficient step from `(x, xbar)`.
pub struct OneStep {
    pub mu: f64,
    pub sigma: f64,
    pub m: AveragingMoments,
}

impl OneStep {
    pub fn phi(&self, x: f64, xbar: f64, dw: f64, j: f64) -> (f64, f64) {
        let (mut xo, mut io) = ([0.0], [0.0]);
        step(&[x], &[xbar], &[self.mu], &[self.sigma], &self.m, &[dw], &[j], &mut xo, &mut io);
        (xo[0], io[0])
    }
}

pub type Payoff = fn(f64, f64) -> f64;

pub fn smooth_payoffs() -> [(&'static str, Payoff); 3] {
    [
        ("sin", |x, i| (x + 0.5 * i).sin()),
        ("gauss bump", |x, i| (1.0 + x) * (-(x * x + i * i) / 2.0).exp()),
        ("cubic", |x, i| (x - i).powi(3) / 6.0 + x * i),
    ]
}

/// Weighted-payoff estimate of a derivative against its central finite
/// difference under common random numbers.
pub struct DerivativeCheck {
    pub payoff: &'static str,
    pub order: u8,
    pub weighted: (f64, f64),
    pub finite_difference: (f64, f64),
}

impl DerivativeCheck {
    pub fn combined_se(&self) -> f64 {
        self.weighted.1.hypot(self.finite_difference.1)
    }

    pub fn z(&self) -> f64 {
        (self.weighted.0 - self.finite_difference.0) / self.combined_se()
    }

    pub fn ok(&self) -> bool {
        self.z().abs() <= 3.0
    }
}

/// First and second `x`-derivatives of `E[g(Φ(x))]` for the three smooth
/// payoffs, bump `1e-3` on a unit scale.
pub fn derivative_checks(n: usize, seed: u64) -> Vec<DerivativeCheck> {
    let w = AveragingWeight::linear();
    let (s, t) = (0.2, 0.7);
    let one = OneStep {
        mu: 0.3,
        sigma: 1.2,
        m: w.moments(s, t).unwrap(),
    };
    let (x, xbar) = (0.4, 0.1);
    let h = 1e-3;
    let second_shift = one.m.ratio() / (one.m.dt * one.sigma * one.sigma);
    let mut out = Vec::new();
    for (name, g) in smooth_payoffs() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: [Vec<f64>; 4] = Default::default();
        for c in cols.iter_mut() {
            c.reserve(n);
        }
        for _ in 0..n {
            let draw = sample_increment(&w, s, t, &normals(&mut rng)).unwrap();
            let (dw, j) = (draw.dw[0], draw.j[0]);
            let mv = malliavin_vector(&[one.sigma], &one.m, &draw).unwrap()[0];
            let (x0, i0) = one.phi(x, xbar, dw, j);
            let (xp, ip) = one.phi(x + h, xbar, dw, j);
            let (xm, im) = one.phi(x - h, xbar, dw, j);
            let (g0, gp, gm) = (g(x0, i0), g(xp, ip), g(xm, im));
            cols[0].push(g0 * mv);
            cols[1].push((gp - gm) / (2.0 * h));
            cols[2].push(g0 * (mv * mv - second_shift));
            cols[3].push((gp - 2.0 * g0 + gm) / (h * h));
        }
        out.push(DerivativeCheck {
            payoff: name,
            order: 1,
            weighted: mean_se(&cols[0]),
            finite_difference: mean_se(&cols[1]),
        });
        out.push(DerivativeCheck {
            payoff: name,
            order: 2,
            weighted: mean_se(&cols[2]),
            finite_difference: mean_se(&cols[3]),
        });
    }
    out
}
