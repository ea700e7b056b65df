//! Configuration, parallel execution and result output.
//!
//! Path `n` of a run always draws from substream `n` of the master seed and
//! paths are reduced in fixed-size chunks merged in index order, so the
//! result does not depend on the number of workers.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::AveragingWeight;
use crate::error::{Error, Result};
use crate::estimator::{self, EulerScratch, IntegralRule, Workspace};
use crate::model::{self, BachelierParams, LocalVolParams, LocalVolVariant, Regularity, SdeModel};
use crate::path::{self, PathRecord};
use crate::rng::path_rng;
use crate::stats::RunStats;
use crate::steps::StepDistribution;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const WORKERS_ENV: &str = "UBSIM_WORKERS";
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Bachelier,
    LocalvolSin4,
    LocalvolSin2,
    /// `mu = drift_const + drift_linear * x`, constant `vol`, Asian call payoff.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: ModelName,
    #[serde(default = "d_r")]
    pub r: f64,
    #[serde(default = "d_hundred")]
    pub x0: f64,
    /// Relative volatility (Bachelier) or `sigma0` (local volatility).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "d_hundred")]
    pub strike: f64,
    #[serde(default = "d_one")]
    pub maturity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vol_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arg_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_const: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_linear: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularity: Option<Regularity>,
}

fn d_r() -> f64 {
    0.05
}
fn d_hundred() -> f64 {
    100.0
}
fn d_one() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn bachelier(sigma_rel: f64) -> Self {
        ModelConfig {
            name: ModelName::Bachelier,
            r: 0.05,
            x0: 100.0,
            sigma: Some(sigma_rel),
            strike: 100.0,
            maturity: 1.0,
            vol_scale: None,
            arg_scale: None,
            drift_const: None,
            drift_linear: None,
            vol: None,
            regularity: None,
        }
    }

    pub fn local_vol(variant: LocalVolVariant) -> Self {
        ModelConfig {
            name: match variant {
                LocalVolVariant::Sin4 => ModelName::LocalvolSin4,
                LocalVolVariant::Sin2 => ModelName::LocalvolSin2,
            },
            sigma: Some(0.2),
            ..Self::bachelier(0.2)
        }
    }

    pub fn build(&self) -> Result<SdeModel> {
        let wrap = |e: Error| match e {
            Error::InvalidParameter { name, reason } => Error::config(prefixed(name), reason),
            e => e,
        };
        let sigma = || self.sigma.ok_or_else(|| Error::config("model.sigma", "required for this model"));
        let m = match self.name {
            ModelName::Bachelier => {
                let mut p = BachelierParams::new(self.r, self.x0, sigma()?, self.strike, self.maturity);
                if let Some(s) = self.vol_scale {
                    p.vol_scale = s;
                }
                model::bachelier_model(&p).map_err(wrap)?
            }
            ModelName::LocalvolSin4 | ModelName::LocalvolSin2 => {
                let variant = if self.name == ModelName::LocalvolSin4 {
                    LocalVolVariant::Sin4
                } else {
                    LocalVolVariant::Sin2
                };
                let vol_scale = self.vol_scale.unwrap_or(self.x0);
                let p = LocalVolParams {
                    variant,
                    r: self.r,
                    x0: self.x0,
                    sigma0: sigma()?,
                    strike: self.strike,
                    maturity: self.maturity,
                    vol_scale,
                    arg_scale: self.arg_scale.unwrap_or(vol_scale),
                };
                model::local_vol_model(&p).map_err(wrap)?
            }
            ModelName::Custom => {
                let vol = self.vol.ok_or_else(|| Error::config("model.vol", "required for the custom model"))?;
                if !(vol > 0.0) {
                    return Err(Error::config("model.vol", "must be positive"));
                }
                let a = self.drift_const.unwrap_or(0.0);
                let b = self.drift_linear.unwrap_or(0.0);
                let k = self.strike;
                SdeModel::new(
                    "custom",
                    vec![self.x0],
                    self.maturity,
                    move |_, x, _, out| out[0] = a + b * x[0],
                    move |_, _, _, out| out[0] = vol,
                    move |_, xbar| (xbar[0] - k).max(0.0),
                )
                .map_err(wrap)?
                .with_discount_rate(self.r)
                .with_ellipticity_floor(vol * vol)
                .with_constant_vol(true)
            }
        };
        Ok(match self.regularity {
            Some(r) => m.with_regularity(r),
            None => m,
        })
    }
}

fn prefixed(name: &str) -> String {
    if name.contains('.') {
        name.to_string()
    } else {
        format!("model.{name}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AveragingKind {
    #[default]
    Linear,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingConfig {
    #[serde(default)]
    pub kind: AveragingKind,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "d_quad")]
    pub quadrature_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

fn d_quad() -> usize {
    crate::averaging::DEFAULT_QUADRATURE_POINTS
}

impl Default for AveragingConfig {
    fn default() -> Self {
        AveragingConfig {
            kind: AveragingKind::Linear,
            beta: 0.0,
            quadrature_points: d_quad(),
            times: None,
            values: None,
        }
    }
}

impl AveragingConfig {
    pub fn build(&self) -> Result<AveragingWeight> {
        let w = match self.kind {
            AveragingKind::Linear => AveragingWeight::linear(),
            AveragingKind::Tabulated => {
                let times = self.times.clone().ok_or_else(|| Error::config("averaging.times", "required for tabulated A"))?;
                let values = self.values.clone().ok_or_else(|| Error::config("averaging.values", "required for tabulated A"))?;
                AveragingWeight::tabulated(times, values).map_err(as_config)?
            }
        };
        w.with_beta(self.beta)
            .and_then(|w| w.with_quadrature_points(self.quadrature_points))
            .map_err(as_config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepsKind {
    #[default]
    PowerLaw,
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsConfig {
    #[serde(default)]
    pub kind: StepsKind,
    #[serde(default = "d_kappa")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

fn d_kappa() -> f64 {
    0.35
}

impl Default for StepsConfig {
    fn default() -> Self {
        StepsConfig {
            kind: StepsKind::PowerLaw,
            kappa: d_kappa(),
            theta: None,
        }
    }
}

impl StepsConfig {
    pub fn build(&self, horizon: f64) -> Result<StepDistribution> {
        let d = match self.kind {
            StepsKind::PowerLaw => StepDistribution::power_law(self.kappa, horizon),
            StepsKind::Gamma => {
                let theta = self.theta.ok_or_else(|| Error::config("steps.theta", "required for the gamma law"))?;
                StepDistribution::gamma(self.kappa, theta)
            }
        }
        .map_err(as_config)?;
        if !(d.survival(horizon) > 0.0) {
            return Err(Error::config("steps", "the step law must put mass beyond the maturity (F(T) < 1)"));
        }
        Ok(d)
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::config(name, reason),
        e => e,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Unbiased,
    UnbiasedConstvol,
    Euler,
}

impl MethodName {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodName::Unbiased => "unbiased",
            MethodName::UnbiasedConstvol => "unbiased_constvol",
            MethodName::Euler => "euler",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "unbiased" => Ok(MethodName::Unbiased),
            "unbiased_constvol" => Ok(MethodName::UnbiasedConstvol),
            "euler" => Ok(MethodName::Euler),
            other => Err(Error::config("method", format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Workers {
    Count(usize),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub averaging: AveragingConfig,
    #[serde(default)]
    pub steps: StepsConfig,
    #[serde(default)]
    pub method: MethodName,
    #[serde(default = "d_sims")]
    pub n_sims: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euler_steps: Option<usize>,
    #[serde(default)]
    pub euler_rule: IntegralRule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<Workers>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub output_format: OutputFormat,
}

fn d_sims() -> u64 {
    100_000
}

impl RunConfig {
    pub fn new(model: ModelConfig, method: MethodName, n_sims: u64, seed: u64) -> Self {
        RunConfig {
            model,
            averaging: AveragingConfig::default(),
            steps: StepsConfig::default(),
            method,
            n_sims,
            euler_steps: None,
            euler_rule: IntegralRule::Exact,
            seed,
            workers: None,
            output_path: None,
            output_format: OutputFormat::Json,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::config(if key == "." { "<root>".to_string() } else { key }, e.inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sims == 0 {
            return Err(Error::config("n_sims", "must be at least 1"));
        }
        if self.method == MethodName::Euler && self.euler_steps.unwrap_or(0) == 0 {
            return Err(Error::config("euler_steps", "the euler method needs a positive step count"));
        }
        if let Some(Workers::Count(0)) = self.workers {
            return Err(Error::config("workers", "must be positive or \"auto\""));
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem> {
        let model = self.model.build()?;
        let weight = self.averaging.build()?;
        let dist = self.steps.build(model.maturity())?;
        Ok(Problem { model, weight, dist })
    }

    pub fn method(&self) -> Method {
        match self.method {
            MethodName::Unbiased => Method::Unbiased,
            MethodName::UnbiasedConstvol => Method::UnbiasedConstVol,
            MethodName::Euler => Method::Euler {
                steps: self.euler_steps.unwrap_or(1),
                rule: self.euler_rule,
            },
        }
    }

    /// Config key, then `UBSIM_WORKERS`, then available parallelism.
    pub fn resolved_workers(&self) -> usize {
        let auto = || std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        match self.workers {
            Some(Workers::Count(n)) => n,
            Some(Workers::Auto(_)) => auto(),
            None => std::env::var(WORKERS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .filter(|&n| n > 0)
                .unwrap_or_else(auto),
        }
    }
}

/// Model, averaging weight and step law of one run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: SdeModel,
    pub weight: AveragingWeight,
    pub dist: StepDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Unbiased,
    UnbiasedConstVol,
    Euler { steps: usize, rule: IntegralRule },
}

#[derive(Default)]
struct Scratch {
    record: PathRecord,
    ws: Workspace,
    euler: EulerScratch,
}

impl Problem {
    /// Value and `N_T` of simulation `index`.
    fn sample(&self, method: Method, seed: u64, index: u64, s: &mut Scratch) -> Result<(f64, usize)> {
        let mut rng: ChaCha8Rng = path_rng(seed, index);
        match method {
            Method::Unbiased => {
                path::simulate_path(&self.model, &self.weight, &self.dist, &mut rng, &mut s.record)?;
                let v = estimator::psi_with(&s.record, &self.model, &self.dist, &mut s.ws);
                Ok((v.psi, v.n_t))
            }
            Method::UnbiasedConstVol => {
                path::simulate_path(&self.model, &self.weight, &self.dist, &mut rng, &mut s.record)?;
                let v = estimator::psi_hat_constvol_with(&s.record, &self.model, &self.dist, &mut s.ws)?;
                Ok((v, s.record.n_t()))
            }
            Method::Euler { steps, rule } => {
                let v = estimator::euler_baseline_with(&self.model, &self.weight, steps, rule, &mut rng, &mut s.euler)?;
                Ok((v, steps))
            }
        }
    }

    /// Runs `n_sims` simulations on `workers` threads. The result is
    /// bit-identical for any worker count.
    pub fn simulate(&self, method: Method, n_sims: u64, seed: u64, workers: usize) -> Result<RunStats> {
        if n_sims == 0 {
            return Err(Error::config("n_sims", "must be at least 1"));
        }
        let chunks = n_sims.div_ceil(CHUNK);
        let work = || {
            (0..chunks)
                .into_par_iter()
                .map_init(Scratch::default, |scratch, c| {
                    let mut stats = RunStats::new();
                    let end = ((c + 1) * CHUNK).min(n_sims);
                    for index in c * CHUNK..end {
                        let (v, n) = self.sample(method, seed, index, scratch)?;
                        stats.push(v, n);
                    }
                    Ok(stats)
                })
                .collect::<Result<Vec<RunStats>>>()
        };
        let parts = if workers <= 1 {
            (0..chunks)
                .map(|c| {
                    let mut scratch = Scratch::default();
                    let mut stats = RunStats::new();
                    for index in c * CHUNK..((c + 1) * CHUNK).min(n_sims) {
                        let (v, n) = self.sample(method, seed, index, &mut scratch)?;
                        stats.push(v, n);
                    }
                    Ok(stats)
                })
                .collect::<Result<Vec<RunStats>>>()?
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Io(e.to_string()))?
                .install(work)?
        };
        Ok(parts.iter().fold(RunStats::new(), |acc, p| acc.merge(p)))
    }

    /// Per-simulation values, in index order; for tests and diagnostics.
    pub fn samples(&self, method: Method, n_sims: u64, seed: u64) -> Result<Vec<f64>> {
        let mut s = Scratch::default();
        (0..n_sims).map(|i| self.sample(method, seed, i, &mut s).map(|(v, _)| v)).collect()
    }
}

/// Result of [`run`]; serialises to the documented output schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub method: String,
    pub model: String,
    pub params: serde_json::Value,
    pub n_sims: u64,
    pub seed: u64,
    pub mean: f64,
    pub stderr: Option<f64>,
    pub min: f64,
    pub max: f64,
    pub mean_n_t: f64,
    pub wall_time_ms: u64,
    pub engine_version: String,
}

#[derive(Serialize)]
struct Hashable<'a> {
    method: &'a str,
    model: &'a str,
    params: &'a serde_json::Value,
    n_sims: u64,
    seed: u64,
    mean: f64,
    stderr: Option<f64>,
    min: f64,
    max: f64,
    mean_n_t: f64,
    engine_version: &'a str,
}

const EXECUTION_KEYS: [&str; 3] = ["workers", "output_path", "output_format"];

const FIELDS: [&str; 12] = [
    "method",
    "model",
    "params",
    "n_sims",
    "seed",
    "mean",
    "stderr",
    "min",
    "max",
    "mean_n_t",
    "wall_time_ms",
    "engine_version",
];

impl RunOutput {
    /// Everything except the wall time and the execution-only config keys
    /// (worker count, output destination). Identical for identical config
    /// and seed, whatever the parallelism.
    pub fn hashable_payload(&self) -> String {
        let mut params = self.params.clone();
        if let Some(obj) = params.as_object_mut() {
            for key in EXECUTION_KEYS {
                obj.remove(key);
            }
        }
        serde_json::to_string(&Hashable {
            method: &self.method,
            model: &self.model,
            params: &params,
            n_sims: self.n_sims,
            seed: self.seed,
            mean: self.mean,
            stderr: self.stderr,
            min: self.min,
            max: self.max,
            mean_n_t: self.mean_n_t,
            engine_version: &self.engine_version,
        })
        .expect("plain data serialises")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serialises")
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let num = |v: f64| v.to_string();
        let row = [
            self.method.clone(),
            self.model.clone(),
            self.params.to_string(),
            self.n_sims.to_string(),
            self.seed.to_string(),
            num(self.mean),
            self.stderr.map(num).unwrap_or_default(),
            num(self.min),
            num(self.max),
            num(self.mean_n_t),
            self.wall_time_ms.to_string(),
            self.engine_version.clone(),
        ];
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(FIELDS).map_err(io)?;
        w.write_record(&row).map_err(io)?;
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => Ok(self.to_json() + "\n"),
            OutputFormat::Csv => self.to_csv(),
        }
    }

    pub fn write_to(&self, path: &Path, format: OutputFormat) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.render(format)?.as_bytes())?;
        Ok(())
    }
}

/// Runs a configuration end to end.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let problem = config.problem()?;
    let start = Instant::now();
    let stats = problem.simulate(config.method(), config.n_sims, config.seed, config.resolved_workers())?;
    let wall = start.elapsed().as_millis() as u64;
    Ok(RunOutput {
        method: config.method.as_str().to_string(),
        model: problem.model.name().to_string(),
        params: serde_json::to_value(config).expect("config serialises"),
        n_sims: stats.count,
        seed: config.seed,
        mean: stats.mean,
        stderr: stats.stderr(),
        min: stats.min,
        max: stats.max,
        mean_n_t: stats.mean_n_t,
        wall_time_ms: wall,
        engine_version: ENGINE_VERSION.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(method: MethodName, n: u64) -> RunConfig {
        RunConfig::new(ModelConfig::bachelier(0.05), method, n, 7)
    }

    #[test]
    fn unknown_key_names_the_key() {
        let text = r#"{"model": {"name": "bachelier", "sigma": 0.1, "colour": 1}}"#;
        match RunConfig::from_json(text) {
            Err(Error::Config { key, message }) => {
                assert_eq!(key, "model.colour");
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = r#"{"model": {"name": "bachelier", "sigma": 0.1}, "nsims": 3}"#;
        assert!(matches!(RunConfig::from_json(text), Err(Error::Config { .. })));
    }

    #[test]
    fn bad_values_name_the_key() {
        let text = r#"{"model": {"name": "bachelier", "sigma": 0.1}, "n_sims": 0}"#;
        assert!(matches!(RunConfig::from_json(text), Err(Error::Config { key, .. }) if key == "n_sims"));
        let text = r#"{"model": {"name": "bachelier", "sigma": 0.1}, "steps": {"kappa": "x"}}"#;
        assert!(matches!(RunConfig::from_json(text), Err(Error::Config { key, .. }) if key == "steps.kappa"));
        let text = r#"{"model": {"name": "bachelier"}}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert!(matches!(cfg.problem(), Err(Error::Config { key, .. }) if key == "model.sigma"));
        let text = r#"{"model": {"name": "bachelier", "sigma": -1}}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert!(matches!(cfg.problem(), Err(Error::Config { key, .. }) if key == "model.sigma"));
        let text = r#"{"model": {"name": "bachelier", "sigma": 0.1}, "method": "euler"}"#;
        assert!(matches!(RunConfig::from_json(text), Err(Error::Config { key, .. }) if key == "euler_steps"));
    }

    #[test]
    fn workers_accepts_auto_and_counts() {
        let cfg = RunConfig::from_json(r#"{"model": {"name": "bachelier", "sigma": 0.1}, "workers": "auto"}"#).unwrap();
        assert!(cfg.resolved_workers() >= 1);
        let cfg = RunConfig::from_json(r#"{"model": {"name": "bachelier", "sigma": 0.1}, "workers": 3}"#).unwrap();
        assert_eq!(cfg.resolved_workers(), 3);
        assert!(RunConfig::from_json(r#"{"model": {"name": "bachelier", "sigma": 0.1}, "workers": "many"}"#).is_err());
    }

    #[test]
    fn single_simulation_has_null_stderr() {
        let out = run(&small(MethodName::UnbiasedConstvol, 1)).unwrap();
        assert_eq!(out.stderr, None);
        assert!(out.to_json().contains("\"stderr\": null"));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut a = small(MethodName::Unbiased, 10_000);
        a.workers = Some(Workers::Count(1));
        let mut b = a.clone();
        b.workers = Some(Workers::Count(4));
        let (ra, rb) = (run(&a).unwrap(), run(&b).unwrap());
        assert_eq!(ra.mean.to_bits(), rb.mean.to_bits());
        assert_ne!(ra.params, rb.params);
        assert_eq!(ra.hashable_payload(), rb.hashable_payload());
        assert!(!ra.hashable_payload().contains("wall_time_ms"));
    }

    #[test]
    fn streaming_stats_match_stored_samples() {
        let cfg = small(MethodName::Unbiased, 10_000);
        let p = cfg.problem().unwrap();
        let stats = p.simulate(cfg.method(), 10_000, 7, 2).unwrap();
        let xs = p.samples(cfg.method(), 10_000, 7).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let m2: f64 = xs.iter().map(|v| (v - mean).powi(2)).sum();
        assert!((stats.mean - mean).abs() <= 1e-10 * mean.abs());
        assert!((stats.m2 - m2).abs() <= 1e-10 * m2);
    }

    #[test]
    fn csv_has_header_and_one_row() {
        let out = run(&small(MethodName::UnbiasedConstvol, 100)).unwrap();
        let text = out.to_csv().unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers().unwrap().clone();
        assert_eq!(headers.iter().collect::<Vec<_>>(), FIELDS.to_vec());
        let rows: Vec<_> = rdr.records().collect();
        assert_eq!(rows.len(), 1);
        let row = rows[0].as_ref().unwrap();
        assert_eq!(row.get(5).unwrap().parse::<f64>().unwrap(), out.mean);
    }

    #[test]
    fn constvol_method_rejects_local_vol() {
        let cfg = RunConfig::new(ModelConfig::local_vol(LocalVolVariant::Sin4), MethodName::UnbiasedConstvol, 5000, 1);
        assert_eq!(run(&cfg).unwrap_err(), Error::NonConstantVolatility);
        assert_eq!(Error::NonConstantVolatility.exit_code(), 3);
    }
}
