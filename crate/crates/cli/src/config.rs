use std::path::PathBuf;
use std::time::Duration;

use adaptive_cp::recursions::DEFAULT_TRUNCATION;
use adaptive_cp::sampler::{default_thin, SamplerConfig};
use adaptive_cp::{GapPrior, SegmentModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ADAPTIVE_CP_OUT";
/// Largest series the recursions engine accepts without an override.
pub const DEFAULT_MAX_RECURSION_N: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Adaptive,
    NonAdaptive,
    Recursions,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Self::Adaptive => "adaptive",
            Self::NonAdaptive => "non-adaptive",
            Self::Recursions => "recursions",
        }
    }
}

/// Which column of the input file holds the series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    /// Zero-based field index.
    Index(usize),
    /// Header name; implies the file has a header row.
    Name(String),
}

impl Column {
    /// Reads an index when the text is a non-negative integer, a name otherwise.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => Self::Index(i),
            Err(_) => Self::Name(s.to_string()),
        }
    }
}

impl Default for Column {
    fn default() -> Self {
        Self::Index(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    PoissonGamma { alpha: f64, beta: f64 },
    GaussianMean { mean: f64, sigma2: f64, tau2: f64 },
    GaussianPrecision { mu: f64, alpha0: f64, beta0: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<SegmentModel> {
        let m = match *self {
            Self::PoissonGamma { alpha, beta } => SegmentModel::poisson_gamma(alpha, beta),
            Self::GaussianMean { mean, sigma2, tau2 } => {
                SegmentModel::gaussian_mean(mean, sigma2, tau2)
            }
            Self::GaussianPrecision { mu, alpha0, beta0 } => {
                SegmentModel::gaussian_precision(mu, alpha0, beta0)
            }
        };
        m.map_err(|e| CliError::Config(e.to_string()))
    }
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::GaussianMean {
            mean: 0.0,
            sigma2: 1.0,
            tau2: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    Geometric { p: f64 },
    NegativeBinomial { k: u32, p: f64 },
}

impl PriorSpec {
    pub fn build(&self) -> Result<GapPrior> {
        let g = match *self {
            Self::Geometric { p } => GapPrior::geometric(p),
            Self::NegativeBinomial { k, p } => GapPrior::negative_binomial(k, p),
        };
        g.map_err(|e| CliError::Config(e.to_string()))
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self::Geometric { p: 0.01 }
    }
}

/// Serializable mirror of the sampler settings. Burn-in and thinning default
/// to half the run and at most a million retained samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerSettings {
    pub iterations: u64,
    pub burn_in: Option<u64>,
    pub thin: Option<u64>,
    pub p_add: f64,
    pub alpha_target: f64,
    pub h: f64,
    pub adjust: bool,
    pub thresholding: bool,
    pub dual_adaptation: bool,
    pub dual_weight: f64,
    pub log_weight_floor: f64,
    pub log_weight_ceil: f64,
    pub log_cutoff: f64,
    /// Stop early after this many seconds of sampling.
    pub time_budget_seconds: Option<f64>,
    /// Initial changepoint positions; empty starts from no changepoints.
    pub init: Vec<usize>,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        let c = SamplerConfig::default();
        Self {
            iterations: c.iterations,
            burn_in: None,
            thin: None,
            p_add: c.p_add,
            alpha_target: c.alpha_target,
            h: c.h,
            adjust: c.adjust_enabled,
            thresholding: c.thresholding_enabled,
            dual_adaptation: c.dual_adaptation_enabled,
            dual_weight: c.dual_weight,
            log_weight_floor: c.log_weight_floor,
            log_weight_ceil: c.log_weight_ceil,
            log_cutoff: c.log_cutoff,
            time_budget_seconds: None,
            init: Vec::new(),
        }
    }
}

impl SamplerSettings {
    /// Core configuration for one chain of `engine` seeded with `seed`.
    pub fn to_config(&self, engine: Engine, seed: u64) -> Result<SamplerConfig> {
        let mut c = SamplerConfig::with_iterations(self.iterations);
        c.burn_in = self.burn_in.unwrap_or(self.iterations / 2);
        c.thin = self
            .thin
            .unwrap_or_else(|| default_thin(self.iterations.saturating_sub(c.burn_in)));
        c.p_add = self.p_add;
        c.alpha_target = self.alpha_target;
        c.h = self.h;
        c.adjust_enabled = self.adjust;
        c.thresholding_enabled = self.thresholding;
        c.dual_adaptation_enabled = self.dual_adaptation;
        c.dual_weight = self.dual_weight;
        c.log_weight_floor = self.log_weight_floor;
        c.log_weight_ceil = self.log_weight_ceil;
        c.log_cutoff = self.log_cutoff;
        c.seed = seed;
        if let Some(s) = self.time_budget_seconds {
            if !(s > 0.0 && s.is_finite()) {
                return Err(CliError::Config(format!(
                    "time budget must be positive, got {s}"
                )));
            }
            c.time_budget = Some(Duration::from_secs_f64(s));
        }
        if engine == Engine::NonAdaptive {
            c = c.non_adaptive();
        }
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub input: PathBuf,
    pub column: Column,
    /// Whether the first row is a header; implied by a named column.
    pub header: bool,
    pub delimiter: char,
    pub engine: Engine,
    /// Optional second engine run on the same data for a divergence report.
    pub compare: Option<Engine>,
    pub model: ModelSpec,
    pub prior: PriorSpec,
    pub sampler: SamplerSettings,
    pub truncation: f64,
    /// Posterior draws taken by the recursions engine.
    pub recursion_draws: usize,
    pub max_recursion_n: usize,
    pub allow_large: bool,
    /// Smoothing constant of the count-histogram divergence.
    pub delta: f64,
    /// Independent sampler chains, seeded `seed`, `seed + 1`, ...
    pub chains: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            column: Column::default(),
            header: false,
            delimiter: ',',
            engine: Engine::Adaptive,
            compare: None,
            model: ModelSpec::default(),
            prior: PriorSpec::default(),
            sampler: SamplerSettings::default(),
            truncation: DEFAULT_TRUNCATION,
            recursion_draws: 100_000,
            max_recursion_n: DEFAULT_MAX_RECURSION_N,
            allow_large: false,
            delta: adaptive_cp::diagnostics::DEFAULT_DELTA,
            chains: 1,
            seed: 0,
            output_dir: default_output_dir(),
        }
    }
}

/// `$ADAPTIVE_CP_OUT` when set, `adaptive-cp-out` otherwise.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("adaptive-cp-out"))
}

impl RunConfig {
    /// Reads a configuration file, or the `config` entry of a run manifest.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("bad config file: {e}")))?;
        let value = match value.get("config") {
            Some(inner) if value.get("versions").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("bad config file: {e}")))
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.input.as_os_str().is_empty() {
            return Err(CliError::Config("no input file given".into()));
        }
        self.model.build()?;
        self.prior.build()?;
        if self.chains == 0 {
            return Err(CliError::Config("chains must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(CliError::Config(format!(
                "delta must lie in [0, 1), got {}",
                self.delta
            )));
        }
        if !(self.truncation >= 0.0 && self.truncation.is_finite()) {
            return Err(CliError::Config(format!(
                "truncation must be non-negative, got {}",
                self.truncation
            )));
        }
        for engine in std::iter::once(self.engine).chain(self.compare) {
            match engine {
                Engine::Recursions => {
                    if self.recursion_draws == 0 {
                        return Err(CliError::Config(
                            "recursion_draws must be at least 1".into(),
                        ));
                    }
                }
                _ => {
                    self.sampler.to_config(engine, self.seed)?;
                }
            }
        }
        if self.compare == Some(self.engine) {
            return Err(CliError::Config(
                "compare engine equals the main engine".into(),
            ));
        }
        Ok(())
    }

    /// Checks the parts that depend on the series length.
    pub fn validate_for_length(&self, n: usize) -> Result<()> {
        let uses_recursions =
            self.engine == Engine::Recursions || self.compare == Some(Engine::Recursions);
        if uses_recursions && n > self.max_recursion_n && !self.allow_large {
            return Err(CliError::Config(format!(
                "the recursions engine is quadratic in the series length; n = {n} exceeds {} \
                 (use the adaptive engine, or pass --allow-large)",
                self.max_recursion_n
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_parsing() {
        assert_eq!(Column::parse("2"), Column::Index(2));
        assert_eq!(Column::parse("depth"), Column::Name("depth".into()));
    }

    #[test]
    fn json_round_trip() {
        let mut c = RunConfig {
            input: "data.csv".into(),
            ..Default::default()
        };
        c.model = ModelSpec::GaussianPrecision {
            mu: 0.0,
            alpha0: 12.0,
            beta0: 4.8,
        };
        c.sampler.time_budget_seconds = Some(5.0);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
        let manifest = format!(r#"{{"config": {text}, "versions": {{}}}}"#);
        assert_eq!(RunConfig::from_json(&manifest).unwrap(), c);
    }

    #[test]
    fn validation() {
        let ok = RunConfig {
            input: "x".into(),
            ..Default::default()
        };
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.prior = PriorSpec::Geometric { p: 1.5 };
        assert!(matches!(bad.validate(), Err(CliError::Config(_))));
        let mut bad = ok.clone();
        bad.sampler.burn_in = Some(bad.sampler.iterations);
        assert!(bad.validate().is_err());
        let mut rec = ok.clone();
        rec.engine = Engine::Recursions;
        assert!(rec.validate_for_length(100_001).is_err());
        rec.allow_large = true;
        assert!(rec.validate_for_length(100_001).is_ok());
    }

    #[test]
    fn non_adaptive_engine_turns_off_adaptation() {
        let s = SamplerSettings::default();
        let c = s.to_config(Engine::NonAdaptive, 3).unwrap();
        assert!(!c.adaptation_enabled);
        assert_eq!(c.seed, 3);
        assert!(s.to_config(Engine::Adaptive, 3).unwrap().adaptation_enabled);
    }
}
