//! Scenario configuration: TOML with one section per domain object.
//! Unknown keys anywhere are rejected before any computation runs.

use impactlab_core::averaging::RhoLaw;
use impactlab_core::generator::{NonEqSpec, ScenarioSpec, TimeGap, VolumeLaw};
use impactlab_core::kernel::{EtaSpec, ImpactKernel, ThetaSpec};
use impactlab_core::relaxation::{DecayFamily, RelaxationProfile};
use impactlab_core::schedule::Side;
use impactlab_core::sizes::{LengthLaw, SizeAnchor, SizeLaw};
use serde::Deserialize;

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Invalid(String),
    MissingSection(&'static str),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(e) => write!(f, "config parse error: {e}"),
            ConfigError::Invalid(e) => write!(f, "invalid config value: {e}"),
            ConfigError::MissingSection(s) => {
                write!(f, "config is missing the required [{s}] section")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn default_start_price() -> f64 {
    100.0
}
fn default_side() -> String {
    "buy".into()
}
fn default_u0() -> f64 {
    1.0
}
fn default_one() -> f64 {
    1.0
}
fn default_volume_noise() -> f64 {
    0.1
}
fn default_n0() -> usize {
    10
}
fn default_growth() -> f64 {
    8.0
}
fn default_x_grid() -> usize {
    30
}
fn default_mc_samples() -> usize {
    100_000
}
fn default_n_max() -> u64 {
    10_000_000
}
fn default_anchor() -> String {
    "lower".into()
}
fn default_hill_samples() -> usize {
    1_000_000
}
fn default_alpha() -> f64 {
    1.0 / 3.0
}
fn default_family() -> String {
    "exponential".into()
}
fn default_std_scale() -> f64 {
    0.2
}
fn default_horizon() -> f64 {
    6.0
}
fn default_grid_points() -> usize {
    60
}
fn default_paths() -> usize {
    10_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub n: usize,
    pub q_minus: f64,
    pub q_plus: f64,
    /// "uniform" or "constant"
    pub volume_law: String,
    /// fixed gap between executions (exclusive with `time_gap_rate`)
    pub time_gap: Option<f64>,
    /// rate of exponential gaps
    pub time_gap_rate: Option<f64>,
    #[serde(default = "default_start_price")]
    pub start_price: f64,
    #[serde(default = "default_side")]
    pub side: String,
    /// target participation rate for the market-volume column
    #[serde(default = "default_one")]
    pub participation: f64,
    /// lognormal noise on the volume filling rule (0 = deterministic)
    #[serde(default = "default_volume_noise")]
    pub volume_noise: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub rho: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub eta_a: f64,
    #[serde(default = "default_one")]
    pub eta_p: f64,
    #[serde(default)]
    pub theta_b: f64,
    #[serde(default = "default_one")]
    pub theta_p: f64,
    #[serde(default = "default_u0")]
    pub u0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonEqSection {
    pub rho1: f64,
    pub rho2: f64,
    #[serde(default = "default_n0")]
    pub n0: usize,
    #[serde(default = "default_growth")]
    pub growth: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoLawSection {
    /// "dirac" | "uniform" | "exponential" | "empirical"
    pub variant: String,
    pub lambda: Option<f64>,
    #[serde(default)]
    pub samples: Vec<f64>,
    #[serde(default = "default_x_grid")]
    pub x_grid: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizesSection {
    pub beta: f64,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_anchor")]
    pub anchor: String,
    pub q_minus: f64,
    pub q_plus: f64,
    /// moment orders to test; defaults to {0.5, 0.9, 1, 1.1, 2} * beta
    #[serde(default)]
    pub nu_grid: Vec<f64>,
    #[serde(default = "default_hill_samples")]
    pub hill_samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// "exponential" | "power"
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(default = "default_one")]
    pub tau: f64,
    #[serde(default = "default_one")]
    pub t0: f64,
    #[serde(default = "default_one")]
    pub p: f64,
    #[serde(default = "default_std_scale")]
    pub std_scale: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_paths")]
    pub paths: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// lowest-precedence output directory (overridden by --out and
    /// IMPACTLAB_OUT)
    pub dir: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub schedule: Option<ScheduleSection>,
    pub kernel: Option<KernelSection>,
    pub noneq: Option<NonEqSection>,
    pub rho_law: Option<RhoLawSection>,
    pub sizes: Option<SizesSection>,
    pub relaxation: Option<RelaxationSection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn schedule(&self) -> Result<&ScheduleSection, ConfigError> {
        self.schedule
            .as_ref()
            .ok_or(ConfigError::MissingSection("schedule"))
    }

    pub fn kernel(&self) -> Result<&KernelSection, ConfigError> {
        self.kernel
            .as_ref()
            .ok_or(ConfigError::MissingSection("kernel"))
    }
}

impl ScheduleSection {
    pub fn to_spec(&self, seed: u64) -> Result<ScenarioSpec, ConfigError> {
        let volume_law = match self.volume_law.as_str() {
            "uniform" => VolumeLaw::Uniform,
            "constant" => VolumeLaw::Constant,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "volume_law must be \"uniform\" or \"constant\", got \"{other}\""
                )))
            }
        };
        let time_gap = match (self.time_gap, self.time_gap_rate) {
            (Some(dt), None) => TimeGap::Fixed(dt),
            (None, Some(rate)) => TimeGap::ExponentialRate(rate),
            (None, None) => TimeGap::Fixed(1.0),
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(
                    "set either time_gap or time_gap_rate, not both".into(),
                ))
            }
        };
        let side = match self.side.as_str() {
            "buy" => Side::Buy,
            "sell" => Side::Sell,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "side must be \"buy\" or \"sell\", got \"{other}\""
                )))
            }
        };
        if !(self.participation > 0.0 && self.participation <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "participation must lie in (0, 1], got {}",
                self.participation
            )));
        }
        Ok(ScenarioSpec {
            n: self.n,
            q_minus: self.q_minus,
            q_plus: self.q_plus,
            volume_law,
            time_gap,
            start_price: self.start_price,
            side,
            seed,
        })
    }
}

impl KernelSection {
    pub fn to_kernel(&self) -> Result<ImpactKernel, ConfigError> {
        let eta = if self.eta_a == 0.0 {
            EtaSpec::Constant(self.kappa)
        } else {
            EtaSpec::LogDecay {
                kappa: self.kappa,
                a: self.eta_a,
                p: self.eta_p,
            }
        };
        let theta = if self.theta_b == 0.0 {
            ThetaSpec::Zero
        } else {
            ThetaSpec::LogDecay {
                b: self.theta_b,
                p: self.theta_p,
            }
        };
        ImpactKernel::new(self.rho, eta, theta, self.u0)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

impl NonEqSection {
    pub fn to_spec(&self) -> Result<NonEqSpec, ConfigError> {
        NonEqSpec::new(self.rho1, self.rho2, self.n0, self.growth)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

impl RhoLawSection {
    pub fn to_law(&self) -> Result<RhoLaw, ConfigError> {
        let law = match self.variant.as_str() {
            "dirac" => RhoLaw::Dirac(
                self.lambda
                    .ok_or_else(|| ConfigError::Invalid("dirac law needs lambda".into()))?,
            ),
            "uniform" => RhoLaw::Uniform01,
            "exponential" => RhoLaw::Exponential(
                self.lambda
                    .ok_or_else(|| ConfigError::Invalid("exponential law needs lambda".into()))?,
            ),
            "empirical" => RhoLaw::Empirical(self.samples.clone()),
            other => {
                return Err(ConfigError::Invalid(format!(
                    "rho_law variant \"{other}\" is not one of dirac|uniform|exponential|empirical|all"
                )))
            }
        };
        law.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(law)
    }

    /// The law(s) the psi command plots: the configured one, or the three
    /// canonical laws side by side for `variant = "all"`.
    pub fn to_laws(&self) -> Result<Vec<RhoLaw>, ConfigError> {
        if self.variant == "all" {
            Ok(vec![
                RhoLaw::Dirac(0.5),
                RhoLaw::Uniform01,
                RhoLaw::Exponential(1.0),
            ])
        } else {
            Ok(vec![self.to_law()?])
        }
    }
}

impl SizesSection {
    pub fn to_laws(&self) -> Result<(LengthLaw, SizeLaw), ConfigError> {
        let anchor = match self.anchor.as_str() {
            "lower" => SizeAnchor::Lower,
            "upper" => SizeAnchor::Upper,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "anchor must be \"lower\" or \"upper\", got \"{other}\""
                )))
            }
        };
        let length = LengthLaw::new(self.beta, self.n_max)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let size = SizeLaw::new(self.gamma, anchor, self.q_minus, self.q_plus)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok((length, size))
    }

    pub fn nu_grid(&self) -> Vec<f64> {
        if self.nu_grid.is_empty() {
            [0.5, 0.9, 1.0, 1.1, 2.0]
                .iter()
                .map(|f| f * self.beta)
                .collect()
        } else {
            self.nu_grid.clone()
        }
    }
}

impl RelaxationSection {
    pub fn to_profile(&self) -> Result<RelaxationProfile, ConfigError> {
        let family = match self.family.as_str() {
            "exponential" => DecayFamily::Exponential { tau: self.tau },
            "power" => DecayFamily::Power {
                t0: self.t0,
                p: self.p,
            },
            other => {
                return Err(ConfigError::Invalid(format!(
                    "family must be \"exponential\" or \"power\", got \"{other}\""
                )))
            }
        };
        RelaxationProfile::new(self.alpha, family).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}
