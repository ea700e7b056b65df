//! Streaming mean/variance with pairwise merging.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStats {
    pub count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
    pub min: f64,
    pub max: f64,
    pub mean_n_t: f64,
}

impl Default for RunStats {
    fn default() -> Self {
        RunStats {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            mean_n_t: 0.0,
        }
    }
}

impl RunStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64, n_t: usize) {
        self.count += 1;
        let n = self.count as f64;
        let delta = value - self.mean;
        self.mean += delta / n;
        self.m2 += delta * (value - self.mean);
        self.min = self.min.min(value);
        self.max = self.max.max(value);
        self.mean_n_t += (n_t as f64 - self.mean_n_t) / n;
    }

    pub fn merge(&self, other: &RunStats) -> RunStats {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        RunStats {
            count: self.count + other.count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
            mean_n_t: self.mean_n_t + (other.mean_n_t - self.mean_n_t) * nb / n,
        }
    }

    /// Sample variance; `None` below two samples.
    pub fn variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.m2 / (self.count - 1) as f64)
    }

    /// Standard error of the mean; `None` below two samples.
    pub fn stderr(&self) -> Option<f64> {
        (self.count >= 2).then(|| (self.m2 / (self.count as f64 * (self.count - 1) as f64)).sqrt())
    }
}

impl Extend<(f64, usize)> for RunStats {
    fn extend<T: IntoIterator<Item = (f64, usize)>>(&mut self, iter: T) {
        for (v, n) in iter {
            self.push(v, n);
        }
    }
}
