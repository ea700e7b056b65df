// One path of the frozen-coefficient scheme and its weight vectors.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ubsim::model::{local_vol_model, LocalVolParams};
use ubsim::path::simulate_path;
use ubsim::{estimator, AveragingWeight, LocalVolVariant, PathRecord, StepDistribution};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = local_vol_model(&LocalVolParams::reference(LocalVolVariant::Sin4))?;
    let weight = AveragingWeight::linear();
    let dist = StepDistribution::power_law(0.35, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut path = PathRecord::new();
    // look for a path with a couple of grid points so the weights are visible
    loop {
        simulate_path(&model, &weight, &dist, &mut rng, &mut path)?;
        if path.n_t() >= 2 {
            break;
        }
    }
    for k in 0..=path.n_t() {
        let m = path.moments_at(k);
        println!(
            "interval {k}: dt = {:.4e}, dW = {:+.4}, J = {:+.4e}, M = {:+.4}",
            m.dt,
            path.dw_at(k)[0],
            path.j_at(k)[0],
            path.malliavin_at(k)[0]
        );
    }
    let s = estimator::psi(&path, &model, &dist);
    println!(
        "N_T = {}, weight product = {:+.4}, psi_hat = {:+.4}, psi_tilde = {:+.4}, psi = {:+.4}",
        s.n_t, s.weight_product, s.psi_hat, s.psi_tilde, s.psi
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
