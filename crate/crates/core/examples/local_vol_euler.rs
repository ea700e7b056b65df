// Path-dependent local volatility: Euler bias as the step count grows,
// against the unbiased estimator.
use ubsim::tables::local_vol_problem;
use ubsim::{IntegralRule, LocalVolVariant, Method};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let problem = local_vol_problem(LocalVolVariant::Sin4)?;
    let n = 20_000;
    for steps in [5, 10, 40] {
        for rule in [IntegralRule::Exact, IntegralRule::RightPoint] {
            let s = problem.simulate(Method::Euler { steps, rule }, n, 9, 1)?;
            println!("euler {steps:>3} steps, {rule:?}: {:.4} +- {:.4}", s.mean, s.stderr().unwrap_or(f64::NAN));
        }
    }
    let s = problem.simulate(Method::Unbiased, n, 9, 1)?;
    println!("unbiased: {:.4} +- {:.4}", s.mean, s.stderr().unwrap_or(f64::NAN));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
