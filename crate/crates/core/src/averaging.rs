//! The deterministic averaging weight `A` and its interval moments.
//!
//! For an interval `[s, t]` with `dt = t - s` the engine needs
//!
//! * `m1  = (1/dt) ∫ (A_r - A_s) dr`
//! * `m2~ = (1/dt) ∫ (A_r - A_s)^2 dr`
//! * `m2  = (1/dt) ∫ (A_r - Ā)^2 dr`, with `Ā` the interval mean of `A`,
//!
//! which parametrise both the joint law of `(ΔW, ∫(A - A_s) dW)` and the
//! Malliavin weight of a step. For `A_t = t` they are `dt/2`, `dt²/3` and
//! `dt²/12`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const DEFAULT_QUADRATURE_POINTS: usize = 257;
pub const DEFAULT_M2_FLOOR: f64 = 1e-14;

#[derive(Clone)]
enum Kind {
    Linear,
    Tabulated { times: Vec<f64>, values: Vec<f64> },
    Callable { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, horizon: f64 },
}

/// Continuous finite-variation function `A` on `[0, T]`.
#[derive(Clone)]
pub struct AveragingWeight {
    kind: Kind,
    beta: f64,
    quadrature_points: usize,
    m2_floor: f64,
}

impl fmt::Debug for AveragingWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::Linear => "linear".to_string(),
            Kind::Tabulated { times, .. } => format!("tabulated({} nodes)", times.len()),
            Kind::Callable { horizon, .. } => format!("callable(horizon={horizon})"),
        };
        f.debug_struct("AveragingWeight")
            .field("kind", &kind)
            .field("beta", &self.beta)
            .field("quadrature_points", &self.quadrature_points)
            .finish()
    }
}

/// Interval statistics of `A` over `[s, t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingMoments {
    pub delta_a: f64,
    pub m1: f64,
    pub m2: f64,
    pub m2_tilde: f64,
    pub dt: f64,
    /// Estimated quadrature error on the moments; zero for closed forms.
    pub quadrature_error: f64,
}

impl AveragingMoments {
    /// `m2~ / m2`, the factor multiplying `a^{-1} / dt` in the second weight.
    pub fn ratio(&self) -> f64 {
        self.m2_tilde / self.m2
    }

    pub fn linear(dt: f64) -> Self {
        AveragingMoments {
            delta_a: dt,
            m1: dt / 2.0,
            m2: dt * dt / 12.0,
            m2_tilde: dt * dt / 3.0,
            dt,
            quadrature_error: 0.0,
        }
    }
}

/// Result of [`AveragingWeight::ratio_bound_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    /// `max (m2~/m2) (t - s)^beta` over the non-degenerate intervals.
    pub empirical_c3: f64,
    /// Intervals on which `m2` vanishes (A locally constant).
    pub flagged: Vec<(f64, f64)>,
    pub evaluated: usize,
}

impl AveragingWeight {
    /// `A_t = t`.
    pub fn linear() -> Self {
        AveragingWeight {
            kind: Kind::Linear,
            beta: 0.0,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
            m2_floor: DEFAULT_M2_FLOOR,
        }
    }

    /// Piecewise-linear interpolation through `(times[i], values[i])`.
    /// `times` must start at 0 and be strictly increasing.
    pub fn tabulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::param(
                "averaging.times",
                "need at least two nodes and one value per node",
            ));
        }
        if times[0] != 0.0 {
            return Err(Error::param("averaging.times", "first node must be 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("averaging.times", "nodes must be strictly increasing"));
        }
        if values.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(Error::param("averaging.values", "nodes and values must be finite"));
        }
        Ok(AveragingWeight {
            kind: Kind::Tabulated { times, values },
            beta: 0.0,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
            m2_floor: DEFAULT_M2_FLOOR,
        })
    }

    /// General `A` given as a callable on `[0, horizon]`.
    pub fn from_fn<F>(horizon: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(horizon > 0.0) {
            return Err(Error::param("averaging.horizon", "must be positive"));
        }
        Ok(AveragingWeight {
            kind: Kind::Callable {
                f: Arc::new(f),
                horizon,
            },
            beta: 0.0,
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
            m2_floor: DEFAULT_M2_FLOOR,
        })
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::param("averaging.beta", "must be a finite nonnegative number"));
        }
        self.beta = beta;
        Ok(self)
    }

    /// Number of Simpson nodes per interval; rounded up to the next odd number.
    pub fn with_quadrature_points(mut self, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::param("averaging.quadrature_points", "need at least 3 nodes"));
        }
        self.quadrature_points = if n.is_multiple_of(2) { n + 1 } else { n };
        Ok(self)
    }

    /// Relative floor on `m2 / dt²` below which `A` counts as locally constant.
    pub fn with_m2_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor >= 0.0) {
            return Err(Error::param("averaging.m2_floor", "must be nonnegative"));
        }
        self.m2_floor = floor;
        Ok(self)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn quadrature_points(&self) -> usize {
        self.quadrature_points
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, Kind::Linear)
    }

    pub fn horizon(&self) -> f64 {
        match &self.kind {
            Kind::Linear => f64::INFINITY,
            Kind::Tabulated { times, .. } => *times.last().expect("validated nonempty"),
            Kind::Callable { horizon, .. } => *horizon,
        }
    }

    /// Evaluates `A(t)`.
    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Linear => t,
            Kind::Tabulated { times, values } => interpolate(times, values, t),
            Kind::Callable { f, .. } => f(t),
        }
    }

    /// Interval moments over `[s, t]`.
    pub fn moments(&self, s: f64, t: f64) -> Result<AveragingMoments> {
        if !(s < t) || !(s >= 0.0) {
            return Err(Error::DegenerateInterval { s, t });
        }
        if t > self.horizon() * (1.0 + 1e-12) {
            return Err(Error::param(
                "averaging",
                format!("interval end {t} exceeds the horizon {} of A", self.horizon()),
            ));
        }
        self.moments_span(s, t - s)
    }

    /// Interval moments over `[s, s + dt]`.
    ///
    /// The random grid can produce steps far below the float resolution of
    /// `s`; passing the length separately keeps the closed form exact there.
    pub fn moments_span(&self, s: f64, dt: f64) -> Result<AveragingMoments> {
        if !(dt > 0.0) {
            return Err(Error::DegenerateInterval { s, t: s + dt });
        }
        let m = match self.kind {
            Kind::Linear => AveragingMoments::linear(dt),
            _ => {
                let t = s + dt;
                if !(t > s) {
                    return Err(Error::DegenerateInterval { s, t });
                }
                let fine = self.quadrature(s, t, self.quadrature_points);
                let coarse = self.quadrature(s, t, self.quadrature_points / 2 + 1);
                let err = (fine.m1 - coarse.m1)
                    .abs()
                    .max((fine.m2 - coarse.m2).abs())
                    .max((fine.m2_tilde - coarse.m2_tilde).abs());
                AveragingMoments {
                    quadrature_error: err,
                    ..fine
                }
            }
        };
        if !(m.m2 > self.m2_floor * dt * dt) {
            return Err(Error::LocallyConstantWeight {
                s,
                t: s + dt,
                m2: m.m2,
            });
        }
        Ok(m)
    }

    fn quadrature(&self, s: f64, t: f64, nodes: usize) -> AveragingMoments {
        let n = if nodes.is_multiple_of(2) { nodes + 1 } else { nodes.max(3) };
        let dt = t - s;
        let h = dt / (n - 1) as f64;
        let a_s = self.value(s);
        let shifted: Vec<f64> = (0..n)
            .map(|i| {
                let r = if i == n - 1 { t } else { s + i as f64 * h };
                self.value(r) - a_s
            })
            .collect();
        let simpson = |g: &dyn Fn(f64) -> f64| -> f64 {
            let mut acc = g(shifted[0]) + g(shifted[n - 1]);
            for (i, &v) in shifted.iter().enumerate().take(n - 1).skip(1) {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(v);
            }
            acc * h / 3.0
        };
        let m1 = simpson(&|v| v) / dt;
        let m2_tilde = simpson(&|v| v * v) / dt;
        let m2 = simpson(&|v| (v - m1) * (v - m1)) / dt;
        AveragingMoments {
            delta_a: shifted[n - 1],
            m1,
            m2: m2.max(0.0),
            m2_tilde,
            dt,
            quadrature_error: 0.0,
        }
    }

    /// Empirical `C3` for the ratio condition `m2~/m2 <= C3 (t - s)^(-beta)`.
    pub fn ratio_bound_check(&self, intervals: &[(f64, f64)]) -> Result<RatioReport> {
        if intervals.is_empty() {
            return Err(Error::param("intervals", "need at least one interval"));
        }
        let mut report = RatioReport {
            empirical_c3: 0.0,
            flagged: Vec::new(),
            evaluated: 0,
        };
        for &(s, t) in intervals {
            match self.moments(s, t) {
                Ok(m) => {
                    report.empirical_c3 = report.empirical_c3.max(m.ratio() * (t - s).powf(self.beta));
                    report.evaluated += 1;
                }
                Err(Error::LocallyConstantWeight { .. }) => report.flagged.push((s, t)),
                Err(e) => return Err(e),
            }
        }
        Ok(report)
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let last = times.len() - 1;
    if t <= times[0] {
        return values[0];
    }
    if t >= times[last] {
        return values[last];
    }
    let idx = times.partition_point(|&x| x <= t);
    let (t0, t1) = (times[idx - 1], times[idx]);
    let (v0, v1) = (values[idx - 1], values[idx]);
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn linear_unit_interval() {
        let m = AveragingWeight::linear().moments(0.0, 1.0).unwrap();
        assert_eq!(m.delta_a, 1.0);
        assert_eq!(m.m1, 0.5);
        assert_relative_eq!(m.m2_tilde, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(m.m2, 1.0 / 12.0, max_relative = 1e-15);
        assert_eq!(m.dt, 1.0);
    }

    #[test]
    fn linear_ratio_is_four() {
        for (s, t) in [(0.0, 0.25), (0.3, 0.31), (0.0, 1e-9), (2.0, 7.0)] {
            let m = AveragingWeight::linear().moments(s, t).unwrap();
            assert_relative_eq!(m.ratio(), 4.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn tabulated_identity_matches_closed_form() {
        let times: Vec<f64> = (0..1001).map(|i| i as f64 / 1000.0).collect();
        let w = AveragingWeight::tabulated(times.clone(), times).unwrap();
        let m = w.moments(0.0, 1.0).unwrap();
        assert!((m.m2 - 1.0 / 12.0).abs() < 1e-8);
        assert!((m.m1 - 0.5).abs() < 1e-8);
        assert!((m.m2_tilde - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn callable_quadratic_weight() {
        // A_t = t^2 on [0, 1]: m1 = 1/3, m2~ = 1/5, m2 = 1/5 - 1/9.
        let w = AveragingWeight::from_fn(1.0, |t| t * t).unwrap();
        let m = w.moments(0.0, 1.0).unwrap();
        assert_relative_eq!(m.m1, 1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(m.m2_tilde, 0.2, max_relative = 1e-9);
        assert_relative_eq!(m.m2, 0.2 - 1.0 / 9.0, max_relative = 1e-9);
        assert!(m.quadrature_error < 1e-9);
    }

    #[test]
    fn degenerate_interval_rejected() {
        let w = AveragingWeight::linear();
        assert!(matches!(w.moments(0.5, 0.5), Err(Error::DegenerateInterval { .. })));
        assert!(matches!(w.moments(0.6, 0.5), Err(Error::DegenerateInterval { .. })));
        assert!(w.ratio_bound_check(&[(0.2, 0.2)]).is_err());
    }

    #[test]
    fn ratio_check_linear_is_four() {
        let w = AveragingWeight::linear();
        let rep = w
            .ratio_bound_check(&[(0.0, 1.0), (0.1, 0.2), (0.5, 0.5001)])
            .unwrap();
        assert_relative_eq!(rep.empirical_c3, 4.0, max_relative = 1e-12);
        assert!(rep.flagged.is_empty());
        assert_eq!(rep.evaluated, 3);
    }

    #[test]
    fn flat_piece_is_flagged() {
        let w = AveragingWeight::tabulated(vec![0.0, 0.4, 0.6, 1.0], vec![0.0, 0.4, 0.4, 0.8]).unwrap();
        let rep = w.ratio_bound_check(&[(0.45, 0.55), (0.0, 1.0)]).unwrap();
        assert_eq!(rep.flagged, vec![(0.45, 0.55)]);
        assert_eq!(rep.evaluated, 1);
        assert!(matches!(
            w.moments(0.45, 0.55),
            Err(Error::LocallyConstantWeight { .. })
        ));
    }

    #[test]
    fn refinement_is_stable() {
        let f = |t: f64| (3.0 * t).sin() + t;
        let coarse = AveragingWeight::from_fn(1.0, f).unwrap();
        let fine = coarse.clone().with_quadrature_points(513).unwrap();
        let a = coarse.moments(0.1, 0.9).unwrap();
        let b = fine.moments(0.1, 0.9).unwrap();
        let tol = a.quadrature_error.max(1e-14);
        assert!((a.m1 - b.m1).abs() <= tol);
        assert!((a.m2 - b.m2).abs() <= tol);
        assert!((a.m2_tilde - b.m2_tilde).abs() <= tol);
    }

    proptest! {
        #[test]
        fn linear_scaling_and_decomposition(s in 0.0f64..10.0, h in 1e-6f64..5.0) {
            let m = AveragingWeight::linear().moments_span(s, h).unwrap();
            prop_assert_eq!(m.m1, h / 2.0);
            prop_assert!((m.m2_tilde - h * h / 3.0).abs() <= 1e-15 * h * h);
            prop_assert!((m.m2 - (m.m2_tilde - m.m1 * m.m1)).abs() <= 1e-10 * h * h);
            prop_assert!(m.m2_tilde >= m.m2);
        }

        #[test]
        fn general_decomposition(s in 0.0f64..0.8, h in 0.01f64..0.2, w in 0.5f64..4.0) {
            let a = AveragingWeight::from_fn(1.0, move |t| t + 0.3 * (w * t).sin()).unwrap();
            let m = a.moments(s, s + h).unwrap();
            prop_assert!((m.m2 - (m.m2_tilde - m.m1 * m.m1)).abs() <= 1e-10 * h * h + m.quadrature_error);
            prop_assert!(m.m2_tilde >= m.m2);
        }
    }
}
