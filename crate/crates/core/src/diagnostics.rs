//! Integrability checks for the estimator and empirical probes of the
//! structural assumptions on a model.

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::averaging::AveragingWeight;
use crate::error::{Error, Result};
use crate::model::SdeModel;
use crate::steps::StepDistribution;

/// Exponents entering the integrability conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityInputs {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub p: f64,
    pub const_vol: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    /// Within `1e-12` of zero for inputs that are not recognisably rational.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub p1_ok: bool,
    pub p2_ok: bool,
    pub margins: (f64, f64),
    pub verdicts: (Verdict, Verdict),
    pub exact: bool,
}

const BOUNDARY_BAND: f64 = 1e-12;
const MAX_DENOMINATOR: i128 = 1_000_000;

/// Evaluates the two strict inequalities of the applicable regime.
///
/// General volatility:
/// `kappa2 + p (alpha1/2 - kappa1 - beta) > 0` and `p (alpha2 - beta - 1) + 1 > 0`.
/// Constant volatility:
/// `2 kappa2 + p (1 + alpha1 - 2 kappa1 - beta) > 0` and `p (alpha2 - beta - 1) + 2 > 0`.
pub fn check_integrability(inp: &IntegrabilityInputs) -> Result<IntegrabilityReport> {
    let fields = [inp.alpha1, inp.alpha2, inp.beta, inp.kappa1, inp.kappa2, inp.p];
    if fields.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("integrability", "all inputs must be finite"));
    }
    if inp.p < 1.0 {
        return Err(Error::param("p", "must be at least 1"));
    }
    let margins = margins_f64(inp);
    let rationals: Option<Vec<Ratio<i128>>> = fields.iter().map(|&v| to_rational(v)).collect();
    let (verdicts, exact) = match rationals {
        Some(q) => {
            let exact_margins = margins_exact(&q, inp.const_vol);
            let v = |m: &Ratio<i128>| {
                if *m > Ratio::from_integer(0) {
                    Verdict::Holds
                } else {
                    Verdict::Fails
                }
            };
            ((v(&exact_margins.0), v(&exact_margins.1)), true)
        }
        None => {
            let v = |m: f64| {
                if m.abs() <= BOUNDARY_BAND {
                    Verdict::Boundary
                } else if m > 0.0 {
                    Verdict::Holds
                } else {
                    Verdict::Fails
                }
            };
            ((v(margins.0), v(margins.1)), false)
        }
    };
    Ok(IntegrabilityReport {
        p1_ok: verdicts.0 == Verdict::Holds,
        p2_ok: verdicts.1 == Verdict::Holds,
        margins,
        verdicts,
        exact,
    })
}

fn margins_f64(inp: &IntegrabilityInputs) -> (f64, f64) {
    let IntegrabilityInputs {
        alpha1: a1,
        alpha2: a2,
        beta: b,
        kappa1: k1,
        kappa2: k2,
        p,
        const_vol,
    } = *inp;
    if const_vol {
        (2.0 * k2 + p * (1.0 + a1 - 2.0 * k1 - b), p * (a2 - b - 1.0) + 2.0)
    } else {
        (k2 + p * (a1 / 2.0 - k1 - b), p * (a2 - b - 1.0) + 1.0)
    }
}

fn margins_exact(q: &[Ratio<i128>], const_vol: bool) -> (Ratio<i128>, Ratio<i128>) {
    let (a1, a2, b, k1, k2, p) = (q[0], q[1], q[2], q[3], q[4], q[5]);
    let one = Ratio::from_integer(1);
    let two = Ratio::from_integer(2);
    if const_vol {
        (two * k2 + p * (one + a1 - two * k1 - b), p * (a2 - b - one) + two)
    } else {
        (k2 + p * (a1 / two - k1 - b), p * (a2 - b - one) + one)
    }
}

/// Recovers `v` as `n/d` with `d <= 10^6` when `v` is that fraction up to
/// float rounding; `None` otherwise.
fn to_rational(v: f64) -> Option<Ratio<i128>> {
    if v == v.trunc() && v.abs() < 1e15 {
        return Some(Ratio::from_integer(v as i128));
    }
    let tol = 4.0 * f64::EPSILON * v.abs().max(1.0);
    let (mut h0, mut h1): (i128, i128) = (0, 1);
    let (mut k0, mut k1): (i128, i128) = (1, 0);
    let mut x = v;
    for _ in 0..64 {
        let a = x.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > MAX_DENOMINATOR {
            return None;
        }
        if (h2 as f64 / k2 as f64 - v).abs() <= tol {
            return Some(Ratio::new(h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = x - a;
        if frac == 0.0 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

/// Series bound on `E[(T - T_N)^(eta-1) prod_k C ΔT_k^(-theta)]` for a step
/// density dominated by `C~ s^(kappa-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesBound {
    pub value: f64,
    pub terms: usize,
    /// Geometric estimate of the neglected tail.
    pub tail_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesInputs {
    pub c: f64,
    pub c_tilde: f64,
    pub eta: f64,
    pub theta: f64,
    pub kappa: f64,
    pub horizon: f64,
}

/// Sums `sum_n (C C~)^n T^(eta + n(kappa-theta) - 1) Γ(eta) Γ(kappa-theta)^n / Γ(eta + n(kappa-theta))`
/// in log space until a term drops below `truncation_tol` times the partial sum.
pub fn series_moment_bound(inp: &SeriesInputs, truncation_tol: f64) -> Result<SeriesBound> {
    let SeriesInputs {
        c,
        c_tilde,
        eta,
        theta,
        kappa,
        horizon,
    } = *inp;
    if !(theta < kappa) {
        return Err(Error::param("theta", "must be strictly below kappa; the series diverges termwise"));
    }
    if !(eta > 0.0) || !(horizon > 0.0) || !(c >= 0.0) || !(c_tilde >= 0.0) || !(kappa > 0.0) {
        return Err(Error::param("series", "need eta > 0, T > 0, kappa > 0 and nonnegative constants"));
    }
    if !(truncation_tol > 0.0) {
        return Err(Error::param("truncation_tol", "must be positive"));
    }
    let gap = kappa - theta;
    let lg_eta = ln_gamma(eta);
    let lg_gap = ln_gamma(gap);
    let ln_t = horizon.ln();
    let ln_cc = (c * c_tilde).ln();
    let term = |n: usize| -> f64 {
        let nf = n as f64;
        let ln_prod = if n == 0 { 0.0 } else { nf * ln_cc };
        (ln_prod + (eta + nf * gap - 1.0) * ln_t + lg_eta + nf * lg_gap - ln_gamma(eta + nf * gap)).exp()
    };
    let mut sum = term(0);
    if c * c_tilde == 0.0 {
        return Ok(SeriesBound {
            value: sum,
            terms: 1,
            tail_estimate: 0.0,
        });
    }
    let mut prev = sum;
    let mut n = 1;
    let mut tail = f64::INFINITY;
    loop {
        let t = term(n);
        sum += t;
        let ratio = if prev > 0.0 { t / prev } else { 0.0 };
        // past the peak the ratios keep shrinking, so the tail is geometric
        if ratio < 1.0 && t <= truncation_tol * sum {
            tail = t * ratio / (1.0 - ratio);
            break;
        }
        if n > 1_000_000 || !sum.is_finite() {
            break;
        }
        prev = t;
        n += 1;
    }
    Ok(SeriesBound {
        value: sum,
        terms: n + 1,
        tail_estimate: tail,
    })
}

/// Empirical probe of boundedness and ellipticity on sampled states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub warnings: Vec<String>,
    pub ellipticity_floor_estimate: f64,
    pub drift_sup: f64,
    pub vol_sup: f64,
    pub samples: usize,
}

/// Samples states in growing boxes around `x0` (and `I` around `x0 * ΔA`)
/// and reports suspected violations of boundedness or non-degeneracy.
/// Never fails.
pub fn regularity_report(model: &SdeModel, weight: &AveragingWeight, sample_budget: usize) -> RegularityReport {
    let d = model.dim();
    let horizon = model.maturity();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1a6);
    let radii = [1.0, 10.0, 100.0, 1000.0];
    let per_radius = (sample_budget / radii.len()).max(1);
    let x0 = model.x0();
    let a_span = weight.value(horizon.min(weight.horizon())) - weight.value(0.0);
    let unit = 1.0 + x0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut mu = vec![0.0; d];
    let mut sigma = vec![0.0; d * d];
    let mut x = vec![0.0; d];
    let mut xbar = vec![0.0; d];
    let mut drift_sups = Vec::new();
    let mut vol_sups = Vec::new();
    let mut floor = f64::INFINITY;
    let mut nonfinite = false;
    let mut samples = 0;
    for &r in &radii {
        let (mut dsup, mut vsup) = (0.0f64, 0.0f64);
        for _ in 0..per_radius {
            let t = rng.random_range(0.0..=horizon);
            for k in 0..d {
                x[k] = x0[k] + r * unit * rng.random_range(-1.0..=1.0);
                xbar[k] = x0[k] * a_span + r * unit * rng.random_range(-1.0..=1.0);
            }
            model.drift_into(t, &x, &xbar, &mut mu);
            model.vol_into(t, &x, &xbar, &mut sigma);
            if mu.iter().chain(&sigma).any(|v| !v.is_finite()) {
                nonfinite = true;
                continue;
            }
            dsup = dsup.max(mu.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            vsup = vsup.max(sigma.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            floor = floor.min(min_eigen_of_a(&sigma, d));
            samples += 1;
        }
        drift_sups.push(dsup);
        vol_sups.push(vsup);
    }
    let mut warnings = Vec::new();
    if nonfinite {
        warnings.push("coefficients return non-finite values on sampled states".to_string());
    }
    if grows(&drift_sups) {
        warnings.push(format!(
            "drift unbounded on sampled range: sup |mu| grows from {:.3e} to {:.3e} as the sampling box widens 1000x",
            drift_sups[0],
            drift_sups[drift_sups.len() - 1]
        ));
    }
    if grows(&vol_sups) {
        warnings.push(format!(
            "volatility unbounded on sampled range: sup |sigma| grows from {:.3e} to {:.3e}",
            vol_sups[0],
            vol_sups[vol_sups.len() - 1]
        ));
    }
    if !(floor > 0.0) {
        warnings.push("sigma sigma^T is degenerate on sampled states".to_string());
    } else if floor < model.ellipticity_floor() * (1.0 - 1e-9) {
        warnings.push(format!(
            "sampled ellipticity {floor:.6e} is below the declared floor {:.6e}",
            model.ellipticity_floor()
        ));
    }
    RegularityReport {
        warnings,
        ellipticity_floor_estimate: floor,
        drift_sup: drift_sups.iter().cloned().fold(0.0, f64::max),
        vol_sup: vol_sups.iter().cloned().fold(0.0, f64::max),
        samples,
    }
}

fn grows(sups: &[f64]) -> bool {
    let first = sups[0];
    let last = sups[sups.len() - 1];
    last > 10.0 * first.max(f64::MIN_POSITIVE) && sups.windows(2).all(|w| w[1] >= w[0])
}

fn min_eigen_of_a(sigma: &[f64], d: usize) -> f64 {
    if d == 1 {
        return sigma[0] * sigma[0];
    }
    let s = DMatrix::from_row_slice(d, d, sigma);
    let a = &s * s.transpose();
    SymmetricEigen::new(a).eigenvalues.min()
}

/// Lemma-style moment series for one `p`, or why it does not apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesCheck {
    pub p: f64,
    pub inputs: Option<SeriesInputs>,
    pub bound: Option<SeriesBound>,
    pub note: Option<String>,
}

/// Everything `ubsim diagnose` prints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnosis {
    pub integrability: Vec<(f64, IntegrabilityReport)>,
    pub ratio_c3: f64,
    pub ratio_flagged: Vec<(f64, f64)>,
    pub regularity: RegularityReport,
    pub series: Vec<SeriesCheck>,
}

/// Runs the advisory checks for `p = 1, 2` on a configured problem.
///
/// The series uses `theta = p (kappa + beta - alpha1/2)`,
/// `eta = 1 + p (alpha2 - beta - 1)` and `C = L^(p+1)`, the exponents that
/// control the `p`-th moment of the estimator.
pub fn diagnose(model: &SdeModel, weight: &AveragingWeight, dist: &StepDistribution, const_vol: bool) -> Result<Diagnosis> {
    let reg = model.regularity();
    let (kappa1, kappa2) = dist.envelope();
    let beta = weight.beta();
    let mut integrability = Vec::new();
    let mut series = Vec::new();
    for p in [1.0, 2.0] {
        let inp = IntegrabilityInputs {
            alpha1: reg.alpha1,
            alpha2: reg.alpha2,
            beta,
            kappa1,
            kappa2,
            p,
            const_vol,
        };
        integrability.push((p, check_integrability(&inp)?));
        let theta = p * (kappa1 + beta - reg.alpha1 / 2.0);
        let eta = 1.0 + p * (reg.alpha2 - beta - 1.0);
        let horizon = model.maturity();
        let check = if theta < kappa2 && eta > 0.0 {
            let si = SeriesInputs {
                c: reg.lipschitz.powf(p + 1.0),
                c_tilde: dist.envelope_upper_constant(),
                eta,
                theta,
                kappa: kappa2,
                horizon,
            };
            SeriesCheck {
                p,
                inputs: Some(si),
                bound: Some(series_moment_bound(&si, 1e-12)?),
                note: None,
            }
        } else {
            SeriesCheck {
                p,
                inputs: None,
                bound: None,
                note: Some(format!("series diverges: theta = {theta}, kappa = {kappa2}, eta = {eta}")),
            }
        };
        series.push(check);
    }
    let horizon = model.maturity();
    let intervals: Vec<(f64, f64)> = (0..64)
        .flat_map(|k| {
            let s = horizon * k as f64 / 64.0;
            [1.0 / 64.0, 1e-3 / 64.0, 1e-6 / 64.0].map(|f| (s, s + horizon * f))
        })
        .collect();
    let ratio = weight.ratio_bound_check(&intervals)?;
    Ok(Diagnosis {
        integrability,
        ratio_c3: ratio.empirical_c3,
        ratio_flagged: ratio.flagged,
        regularity: regularity_report(model, weight, 20_000),
        series,
    })
}
