// Interval moments of the averaging weight `A` and the ratio condition.
use ubsim::AveragingWeight;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let linear = AveragingWeight::linear();
    let m = linear.moments(0.25, 0.75)?;
    println!("A_t = t on [0.25, 0.75]: m1 = {}, m2~ = {}, m2 = {}, ratio = {}", m.m1, m.m2_tilde, m.m2, m.ratio());

    // A piecewise-linear weight that only starts averaging at t = 0.5.
    let tab = AveragingWeight::tabulated(vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 0.5])?;
    match tab.moments(0.1, 0.4) {
        Ok(_) => println!("unexpected: flat piece accepted"),
        Err(e) => println!("flat piece rejected: {e}"),
    }
    let m = tab.moments(0.4, 0.9)?;
    println!("kinked interval: m2 = {:.6e}, quadrature error {:.1e}", m.m2, m.quadrature_error);

    let squares = AveragingWeight::from_fn(1.0, |t| t * t)?;
    let report = squares.ratio_bound_check(&[(0.0, 1.0), (0.5, 0.6), (0.9, 0.901)])?;
    println!("A_t = t^2: empirical C3 = {:.4}, flagged = {:?}", report.empirical_c3, report.flagged);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
