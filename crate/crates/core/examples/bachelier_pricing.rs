// Asian call under the Bachelier model: closed form against the unbiased
// constant-volatility estimator.
use ubsim::model::{bachelier_model, bachelier_reference_price};
use ubsim::{AveragingWeight, BachelierParams, Method, Problem, StepDistribution};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for sigma in [0.05, 0.1, 0.15, 0.2] {
        let p = BachelierParams::new(0.05, 100.0, sigma, 100.0, 1.0);
        let problem = Problem {
            model: bachelier_model(&p)?,
            weight: AveragingWeight::linear(),
            dist: StepDistribution::power_law(0.35, 1.0)?,
        };
        let stats = problem.simulate(Method::UnbiasedConstVol, 50_000, 1, 1)?;
        println!(
            "sigma = {sigma:<4}: closed form {:.4}, MC {:.4} +- {:.4} (mean N_T {:.2})",
            bachelier_reference_price(&p)?,
            stats.mean,
            stats.stderr().unwrap_or(f64::NAN),
            stats.mean_n_t
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
