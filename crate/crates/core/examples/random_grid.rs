// Random renewal grids drawn from the power-law step density.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ubsim::path::build_grid;
use ubsim::StepDistribution;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dist = StepDistribution::power_law(0.35, 1.0)?;
    println!("P(tau > T) = {:.5}, mean step = {:.4}", dist.survival(1.0), dist.mean());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total = 0usize;
    for k in 0..5 {
        let grid = build_grid(&dist, 1.0, &mut rng)?;
        total += grid.n_t();
        println!("grid {k}: N_T = {}, times = {:?}", grid.n_t(), grid.times());
    }
    println!("{total} interior points over 5 grids");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
