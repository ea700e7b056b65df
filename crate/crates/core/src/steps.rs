//! Step-length laws for the random time grid.

use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepKind {
    /// `F(t) = (t / scale)^kappa` on `[0, scale]`.
    PowerLaw,
    /// Gamma law with shape `kappa` and scale `theta`.
    Gamma,
}

/// Law of the i.i.d. step lengths `tau_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDistribution {
    kind: StepKind,
    kappa: f64,
    support_scale: f64,
}

impl StepDistribution {
    /// Power law on `[0, 2 * horizon]`, the default grid law.
    pub fn power_law(kappa: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::param("maturity", "must be positive"));
        }
        Self::power_law_on(kappa, 2.0 * horizon)
    }

    pub fn power_law_on(kappa: f64, support: f64) -> Result<Self> {
        check_positive("steps.kappa", kappa)?;
        check_positive("steps.support", support)?;
        Ok(StepDistribution {
            kind: StepKind::PowerLaw,
            kappa,
            support_scale: support,
        })
    }

    pub fn gamma(kappa: f64, theta: f64) -> Result<Self> {
        check_positive("steps.kappa", kappa)?;
        check_positive("steps.theta", theta)?;
        Ok(StepDistribution {
            kind: StepKind::Gamma,
            kappa,
            support_scale: theta,
        })
    }

    pub fn kind(&self) -> StepKind {
        self.kind
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn support_scale(&self) -> f64 {
        self.support_scale
    }

    /// Exponents `(kappa1, kappa2)` of the envelope
    /// `C1 s^(kappa1-1) <= rho(s) <= C2 s^(kappa2-1)` near zero.
    pub fn envelope(&self) -> (f64, f64) {
        (self.kappa, self.kappa)
    }

    /// Smallest `C` with `rho(s) <= C s^(kappa-1)` on `(0, horizon]`.
    pub fn envelope_upper_constant(&self) -> f64 {
        match self.kind {
            StepKind::PowerLaw => self.kappa / self.support_scale.powf(self.kappa),
            StepKind::Gamma => (-ln_gamma(self.kappa) - self.kappa * self.support_scale.ln()).exp(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            StepKind::PowerLaw => self.support_scale * self.kappa / (self.kappa + 1.0),
            StepKind::Gamma => self.kappa * self.support_scale,
        }
    }

    /// Density `rho(s)` for `s > 0`.
    pub fn density(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::param("s", "density is only evaluated at positive times"));
        }
        Ok(self.density_unchecked(s))
    }

    pub(crate) fn density_unchecked(&self, s: f64) -> f64 {
        let k = self.kappa;
        match self.kind {
            StepKind::PowerLaw => {
                if s > self.support_scale {
                    0.0
                } else {
                    k / self.support_scale * (s / self.support_scale).powf(k - 1.0)
                }
            }
            StepKind::Gamma => {
                let theta = self.support_scale;
                ((k - 1.0) * s.ln() - s / theta - ln_gamma(k) - k * theta.ln()).exp()
            }
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self.kind {
            StepKind::PowerLaw => {
                if s >= self.support_scale {
                    1.0
                } else {
                    (s / self.support_scale).powf(self.kappa)
                }
            }
            StepKind::Gamma => gamma_lr(self.kappa, s / self.support_scale),
        }
    }

    pub fn survival(&self, s: f64) -> f64 {
        1.0 - self.cdf(s)
    }

    /// Inverse-CDF sample from a uniform draw in `(0, 1)`.
    pub fn sample_step(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidDraw(u));
        }
        Ok(match self.kind {
            StepKind::PowerLaw => self.support_scale * u.powf(1.0 / self.kappa),
            StepKind::Gamma => self.gamma_quantile(u),
        })
    }

    fn gamma_quantile(&self, u: f64) -> f64 {
        let (k, theta) = (self.kappa, self.support_scale);
        // gamma_lr(k, x) <= x^k / Gamma(k + 1) gives a lower bracket
        let mut lo = theta * (u * (ln_gamma(k + 1.0)).exp()).powf(1.0 / k);
        if !(lo > 0.0) {
            lo = f64::MIN_POSITIVE;
        }
        if self.cdf(lo) >= u {
            return lo;
        }
        let mut hi = lo.max(theta);
        while self.cdf(hi) < u {
            lo = hi;
            hi *= 2.0;
        }
        // bisect in log space so tiny quantiles keep relative accuracy
        for _ in 0..200 {
            if hi - lo <= 1e-12 * hi {
                break;
            }
            let mid = (lo * hi).sqrt();
            let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}
