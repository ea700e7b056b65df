// A user-defined two-dimensional model with state-dependent volatility.
use ubsim::{AveragingWeight, Method, Problem, SdeModel, StepDistribution};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = SdeModel::new(
        "basket",
        vec![1.0, 1.0],
        1.0,
        |_, x, _, mu| {
            mu[0] = 0.1 * (1.0 - x[0]);
            mu[1] = 0.1 * (1.0 - x[1]);
        },
        // row-major 2x2 volatility, mildly dependent on the running average
        |_, x, xbar, s| {
            let lvl = 0.3 * (1.0 + 0.2 * (x[0] - xbar[0]).tanh());
            s[0] = lvl;
            s[1] = 0.0;
            s[2] = 0.1;
            s[3] = 0.25;
        },
        |_, xbar| (0.5 * (xbar[0] + xbar[1]) - 1.0).max(0.0),
    )?
    .with_ellipticity_floor(0.01);
    let problem = Problem {
        model,
        weight: AveragingWeight::linear(),
        dist: StepDistribution::power_law(0.5, 1.0)?,
    };
    let unbiased = problem.simulate(Method::Unbiased, 20_000, 5, 1)?;
    let euler = problem.simulate(
        Method::Euler {
            steps: 50,
            rule: ubsim::IntegralRule::Exact,
        },
        20_000,
        5,
        1,
    )?;
    println!("unbiased {:.5} +- {:.5}", unbiased.mean, unbiased.stderr().unwrap_or(f64::NAN));
    println!("euler/50 {:.5} +- {:.5}", euler.mean, euler.stderr().unwrap_or(f64::NAN));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
