// Integrability conditions and the moment series bound.
use ubsim::diagnostics::{check_integrability, series_moment_bound, IntegrabilityInputs, SeriesInputs};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for (kappa, p) in [(0.35, 1.0), (0.35, 2.0), (1.0, 2.0), (0.9, 4.0)] {
        let r = check_integrability(&IntegrabilityInputs {
            alpha1: 1.0,
            alpha2: 1.0,
            beta: 0.0,
            kappa1: kappa,
            kappa2: kappa,
            p,
            const_vol: false,
        })?;
        println!("kappa = {kappa}, p = {p}: margins {:?}, verdicts {:?}", r.margins, r.verdicts);
    }
    let kappa: f64 = 0.35;
    let bound = series_moment_bound(
        &SeriesInputs {
            c: 1.0,
            c_tilde: kappa / 2f64.powf(kappa),
            eta: 1.0,
            theta: 0.0,
            kappa,
            horizon: 1.0,
        },
        1e-12,
    )?;
    println!("series bound {:.6} after {} terms (tail {:.1e})", bound.value, bound.terms, bound.tail_estimate);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
