//! SDE coefficients, payoffs and the built-in model zoo.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub type CoefficientFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;
pub type PayoffFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// Structural constants `(L, alpha1, alpha2)` of the coefficients and payoff.
/// Metadata only; consumed by the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub lipschitz: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for Regularity {
    fn default() -> Self {
        Regularity {
            lipschitz: 1.0,
            alpha1: 1.0,
            alpha2: 1.0,
        }
    }
}

/// One pricing problem: `dX = mu(t, X, I) dt + sigma(t, X, I) dW`,
/// `I = ∫ X dA`, value `e^{-rT} E[g(X_T, I_T)]`.
#[derive(Clone)]
pub struct SdeModel {
    name: String,
    dim: usize,
    x0: Vec<f64>,
    maturity: f64,
    drift: Arc<CoefficientFn>,
    vol: Arc<CoefficientFn>,
    payoff: Arc<PayoffFn>,
    discount_rate: f64,
    regularity: Regularity,
    ellipticity_floor: f64,
    constant_vol: bool,
}

impl fmt::Debug for SdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("x0", &self.x0)
            .field("maturity", &self.maturity)
            .field("discount_rate", &self.discount_rate)
            .field("regularity", &self.regularity)
            .field("ellipticity_floor", &self.ellipticity_floor)
            .field("constant_vol", &self.constant_vol)
            .finish()
    }
}

impl SdeModel {
    /// `vol` writes a row-major `dim x dim` matrix.
    pub fn new<D, V, G>(name: impl Into<String>, x0: Vec<f64>, maturity: f64, drift: D, vol: V, payoff: G) -> Result<Self>
    where
        D: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        V: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        G: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        if x0.is_empty() {
            return Err(Error::param("x0", "dimension must be at least 1"));
        }
        if !(maturity > 0.0) || !maturity.is_finite() {
            return Err(Error::param("maturity", "must be positive"));
        }
        Ok(SdeModel {
            name: name.into(),
            dim: x0.len(),
            x0,
            maturity,
            drift: Arc::new(drift),
            vol: Arc::new(vol),
            payoff: Arc::new(payoff),
            discount_rate: 0.0,
            regularity: Regularity::default(),
            ellipticity_floor: f64::MIN_POSITIVE,
            constant_vol: false,
        })
    }

    pub fn with_discount_rate(mut self, r: f64) -> Self {
        self.discount_rate = r;
        self
    }

    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self
    }

    pub fn with_ellipticity_floor(mut self, eps0: f64) -> Self {
        self.ellipticity_floor = eps0;
        self
    }

    /// Declares the volatility constant. The constant-volatility estimator
    /// still checks the frozen coefficients on every path.
    pub fn with_constant_vol(mut self, constant: bool) -> Self {
        self.constant_vol = constant;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }
    pub fn maturity(&self) -> f64 {
        self.maturity
    }
    pub fn discount_rate(&self) -> f64 {
        self.discount_rate
    }
    pub fn discount_factor(&self) -> f64 {
        (-self.discount_rate * self.maturity).exp()
    }
    pub fn regularity(&self) -> Regularity {
        self.regularity
    }
    pub fn ellipticity_floor(&self) -> f64 {
        self.ellipticity_floor
    }
    pub fn declares_constant_vol(&self) -> bool {
        self.constant_vol
    }

    #[inline]
    pub fn drift_into(&self, t: f64, x: &[f64], xbar: &[f64], out: &mut [f64]) {
        (self.drift)(t, x, xbar, out)
    }

    #[inline]
    pub fn vol_into(&self, t: f64, x: &[f64], xbar: &[f64], out: &mut [f64]) {
        (self.vol)(t, x, xbar, out)
    }

    #[inline]
    pub fn payoff(&self, x: &[f64], xbar: &[f64]) -> f64 {
        (self.payoff)(x, xbar)
    }

    pub fn drift(&self, t: f64, x: &[f64], xbar: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.drift_into(t, x, xbar, &mut out);
        out
    }

    pub fn vol(&self, t: f64, x: &[f64], xbar: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        self.vol_into(t, x, xbar, &mut out);
        out
    }

    /// One-dimensional model with constant drift and volatility and an Asian
    /// call payoff `(xbar - K)+`.
    pub fn constant_coefficients(x0: f64, maturity: f64, mu: f64, sigma: f64, strike: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::param("vol", "must be positive"));
        }
        Ok(SdeModel::new(
            "constant",
            vec![x0],
            maturity,
            move |_, _, _, out| out[0] = mu,
            move |_, _, _, out| out[0] = sigma,
            move |_, xbar| (xbar[0] - strike).max(0.0),
        )?
        .with_ellipticity_floor(sigma * sigma)
        .with_constant_vol(true))
    }
}

/// Parameters of the arithmetic Asian call under `dX = r X dt + sigma dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BachelierParams {
    pub r: f64,
    pub x0: f64,
    /// Volatility quoted relative to `vol_scale`; the absolute volatility is
    /// `sigma_rel * vol_scale`.
    pub sigma_rel: f64,
    pub strike: f64,
    pub maturity: f64,
    pub vol_scale: f64,
}

impl BachelierParams {
    /// `vol_scale` defaults to `x0`.
    pub fn new(r: f64, x0: f64, sigma_rel: f64, strike: f64, maturity: f64) -> Self {
        BachelierParams {
            r,
            x0,
            sigma_rel,
            strike,
            maturity,
            vol_scale: x0,
        }
    }

    pub fn sigma_abs(&self) -> f64 {
        self.sigma_rel * self.vol_scale
    }

    fn validate(&self) -> Result<()> {
        if !(self.maturity > 0.0) {
            return Err(Error::param("model.maturity", "must be positive"));
        }
        if !(self.x0 > 0.0) {
            return Err(Error::param("model.x0", "must be positive"));
        }
        if !(self.sigma_rel > 0.0) {
            return Err(Error::param("model.sigma", "must be positive"));
        }
        if !(self.vol_scale > 0.0) {
            return Err(Error::param("model.vol_scale", "must be positive"));
        }
        Ok(())
    }

    /// Mean of `I_T = ∫ X dt`.
    pub fn average_mean(&self) -> f64 {
        let (r, t) = (self.r, self.maturity);
        if r == 0.0 {
            self.x0 * t
        } else {
            (r * t).exp_m1() * self.x0 / r
        }
    }

    /// Standard deviation of `I_T`.
    pub fn average_sd(&self) -> f64 {
        let (r, t, s) = (self.r, self.maturity, self.sigma_abs());
        if r == 0.0 {
            return s * (t * t * t / 3.0).sqrt();
        }
        let var = s * s / (r * r) * ((2.0 * r * t).exp_m1() / (2.0 * r) - 2.0 * (r * t).exp_m1() / r + t);
        var.sqrt()
    }
}

pub fn bachelier_model(p: &BachelierParams) -> Result<SdeModel> {
    p.validate()?;
    let (r, k, sigma) = (p.r, p.strike, p.sigma_abs());
    Ok(SdeModel::new(
        "bachelier",
        vec![p.x0],
        p.maturity,
        move |_, x, _, out| out[0] = r * x[0],
        move |_, _, _, out| out[0] = sigma,
        move |_, xbar| (xbar[0] - k).max(0.0),
    )?
    .with_discount_rate(r)
    .with_ellipticity_floor(sigma * sigma)
    .with_constant_vol(true))
}

/// Discounted closed-form price of the Asian call under the Bachelier model.
pub fn bachelier_reference_price(p: &BachelierParams) -> Result<f64> {
    p.validate()?;
    if p.r == 0.0 {
        return Err(Error::param(
            "model.r",
            "the closed form divides by r; for r = 0 use the Gaussian call on I_T with mean x0*T and variance sigma^2 T^3/3",
        ));
    }
    let df = (-p.r * p.maturity).exp();
    Ok(df * normal_call(p.average_mean(), p.average_sd(), p.strike))
}

/// `E[(Y - K)+]` for `Y ~ N(mean, sd^2)`.
pub fn normal_call(mean: f64, sd: f64, strike: f64) -> f64 {
    if sd == 0.0 {
        return (mean - strike).max(0.0);
    }
    let d = (strike - mean) / sd;
    sd * normal_pdf(d) + (mean - strike) * normal_cdf(-d)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalVolVariant {
    /// `sigma0 (1 + sin(.)/4)`
    Sin4,
    /// `sigma0 (1 + sin(.)/2)`
    Sin2,
}

impl LocalVolVariant {
    fn divisor(self) -> f64 {
        match self {
            LocalVolVariant::Sin4 => 4.0,
            LocalVolVariant::Sin2 => 2.0,
        }
    }
}

/// Path-dependent local volatility
/// `sigma(x, xbar) = vol_scale * sigma0 * (1 + sin((x - xbar) / arg_scale) / c)`.
///
/// `arg_scale = 1` is the literal reading; `arg_scale = x0` expresses the
/// model in units of the initial price, which is the reading that matches
/// the published reference numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalVolParams {
    pub variant: LocalVolVariant,
    pub r: f64,
    pub x0: f64,
    pub sigma0: f64,
    pub strike: f64,
    pub maturity: f64,
    pub vol_scale: f64,
    pub arg_scale: f64,
}

impl LocalVolParams {
    /// `r = 0.05, x0 = K = 100, sigma0 = 0.2, T = 1`, both scales at `x0`.
    pub fn reference(variant: LocalVolVariant) -> Self {
        LocalVolParams {
            variant,
            r: 0.05,
            x0: 100.0,
            sigma0: 0.2,
            strike: 100.0,
            maturity: 1.0,
            vol_scale: 100.0,
            arg_scale: 100.0,
        }
    }
}

pub fn local_vol_model(p: &LocalVolParams) -> Result<SdeModel> {
    if !(p.sigma0 > 0.0) {
        return Err(Error::param("model.sigma0", "must be positive"));
    }
    if !(p.vol_scale > 0.0) {
        return Err(Error::param("model.vol_scale", "must be positive"));
    }
    if !(p.arg_scale > 0.0) {
        return Err(Error::param("model.arg_scale", "must be positive"));
    }
    let (r, k) = (p.r, p.strike);
    let level = p.vol_scale * p.sigma0;
    let c = p.variant.divisor();
    let arg_scale = p.arg_scale;
    let floor = level * (1.0 - 1.0 / c);
    let name = match p.variant {
        LocalVolVariant::Sin4 => "localvol_sin4",
        LocalVolVariant::Sin2 => "localvol_sin2",
    };
    Ok(SdeModel::new(
        name,
        vec![p.x0],
        p.maturity,
        move |_, x, _, out| out[0] = r * x[0],
        move |_, x, xbar, out| out[0] = level * (1.0 + ((x[0] - xbar[0]) / arg_scale).sin() / c),
        move |_, xbar| (xbar[0] - k).max(0.0),
    )?
    .with_discount_rate(r)
    .with_ellipticity_floor(floor * floor))
}
