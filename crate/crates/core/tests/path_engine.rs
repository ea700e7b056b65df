//! Grid and path statistics against independent oracles.

mod common;

use common::mean_se;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_pcg_free::Lcg;
use ubsim::model::bachelier_model;
use ubsim::path::{build_grid, simulate_path};
use ubsim::{AveragingWeight, BachelierParams, PathRecord, SdeModel, StepDistribution};

/// Minimal 64-bit LCG with the top 53 bits as the uniform; an RNG unrelated
/// to the engine's stream for the renewal oracle.
mod rand_pcg_free {
    pub struct Lcg(pub u64);
    impl Lcg {
        pub fn uniform(&mut self) -> f64 {
            loop {
                self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (self.0 >> 11) as f64 / (1u64 << 53) as f64;
                if u > 0.0 {
                    return u;
                }
            }
        }
    }
}

#[test]
fn mean_grid_size_matches_renewal_oracle() {
    let n = 1_000_000;
    let dist = StepDistribution::power_law(0.35, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let engine: Vec<f64> = (0..n).map(|_| build_grid(&dist, 1.0, &mut rng).unwrap().n_t() as f64).collect();

    // Renewal count with steps 2 U^(1/0.35), counted by hand.
    let mut lcg = Lcg(12345);
    let oracle: Vec<f64> = (0..n)
        .map(|_| {
            let (mut t, mut k) = (0.0, 0usize);
            loop {
                t += 2.0 * lcg.uniform().powf(1.0 / 0.35);
                if t >= 1.0 {
                    return k as f64;
                }
                k += 1;
            }
        })
        .collect();
    let (a, sa) = mean_se(&engine);
    let (b, sb) = mean_se(&oracle);
    assert!((a - b).abs() <= 3.0 * (sa * sa + sb * sb).sqrt(), "engine {a} +- {sa}, oracle {b} +- {sb}");
}

#[test]
fn grid_ends_exactly_at_horizon() {
    let dist = StepDistribution::power_law(0.35, 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let g = build_grid(&dist, 0.7, &mut rng).unwrap();
        assert_eq!(*g.times().last().unwrap(), 0.7);
        assert!(g.times().windows(2).all(|w| w[0] <= w[1]));
        assert!(g.steps().iter().all(|&s| s > 0.0));
    }
}

#[test]
fn bachelier_average_has_closed_form_mean() {
    let p = BachelierParams::new(0.05, 100.0, 0.2, 100.0, 1.0);
    let model = bachelier_model(&p).unwrap();
    let weight = AveragingWeight::linear();
    let dist = StepDistribution::power_law(0.35, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut rec = PathRecord::new();
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| {
            simulate_path(&model, &weight, &dist, &mut rng, &mut rec).unwrap();
            rec.i_terminal()[0]
        })
        .collect();
    let (mean, se) = mean_se(&xs);
    assert!((mean - p.average_mean()).abs() <= 3.0 * se, "{mean} +- {se} vs {}", p.average_mean());
}

#[test]
fn driftless_constant_model_has_centred_average() {
    let model = SdeModel::constant_coefficients(0.0, 1.0, 0.0, 0.8, 0.0).unwrap();
    let weight = AveragingWeight::linear();
    let dist = StepDistribution::power_law(0.35, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rec = PathRecord::new();
    let mut xs = Vec::new();
    for _ in 0..100_000 {
        simulate_path(&model, &weight, &dist, &mut rng, &mut rec).unwrap();
        xs.push(rec.i_terminal()[0]);
        // tail reversal: the sigma dW part flips, the drift part is shared
        let n = rec.n_t();
        let base = rec.x_at(n)[0] + rec.mu_at(n)[0] * rec.grid().steps()[n];
        let (up, down) = (rec.x_terminal()[0] - base, rec.x_tilde()[0] - base);
        assert!((up + down).abs() <= 1e-14 * (1.0 + base.abs()), "{up} vs {down}");
    }
    let (mean, se) = mean_se(&xs);
    assert!(mean.abs() <= 3.0 * se);
}
