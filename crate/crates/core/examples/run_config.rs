// Driving the engine from a JSON configuration, as the CLI does.
use ubsim::RunConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::from_json(
        r#"{
            "model": {"name": "localvol_sin2", "sigma": 0.2},
            "method": "unbiased",
            "n_sims": 20000,
            "seed": 11,
            "workers": 2
        }"#,
    )?;
    let out = ubsim::run(&cfg)?;
    println!("{}", out.to_json());
    print!("{}", out.to_csv()?);

    let bad = RunConfig::from_json(r#"{"model": {"name": "bachelier", "sigma": 0.1}, "n_sim": 5}"#);
    println!("typo in key: {}", bad.unwrap_err());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
