//! The law of the random index `rho` and population-averaged quantities:
//! the averaged normalized impact function `psi(x) = E[x^rho]`, its
//! derivative, and the averaged equilibrium level `E[1/(1+rho)]`.
//!
//! Closed forms exist for the three canonical laws (Dirac, uniform on
//! [0,1], exponential); empirical sample laws fall back to plug-in means.

use crate::oracle::KahanSum;
use crate::rng::stream;
use crate::special::{exp_integral_ei, SpecialError};
use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AveragingError {
    #[error("psi is defined on (0, 1]; got x = {0}")]
    Domain(f64),
    #[error("invalid law parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Probability law of the equilibrium index `rho`.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoLaw {
    /// Point mass at `lambda >= 0`.
    Dirac(f64),
    /// Uniform on `[0, 1]`.
    Uniform01,
    /// Exponential with rate `lambda > 0`.
    Exponential(f64),
    /// Plug-in law over observed indices (all >= 0).
    Empirical(Vec<f64>),
}

impl RhoLaw {
    pub fn validate(&self) -> Result<(), AveragingError> {
        match self {
            RhoLaw::Dirac(l) => {
                if !(l.is_finite() && *l >= 0.0) {
                    return Err(AveragingError::InvalidParameter(format!(
                        "Dirac mass must be finite and >= 0, got {l}"
                    )));
                }
            }
            RhoLaw::Uniform01 => {}
            RhoLaw::Exponential(l) => {
                if !(l.is_finite() && *l > 0.0) {
                    return Err(AveragingError::InvalidParameter(format!(
                        "exponential rate must be positive, got {l}"
                    )));
                }
            }
            RhoLaw::Empirical(s) => {
                if s.is_empty() || s.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(AveragingError::InvalidParameter(
                        "empirical law needs a non-empty sample of non-negative indices".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `psi(x) = E[x^rho]` on `(0, 1]`, by closed form (plug-in mean for
    /// empirical laws). The removable singularity of the uniform law at
    /// `x = 1` is handled by its limit, so `psi(1) = 1` for every law.
    pub fn psi(&self, x: f64) -> Result<f64, AveragingError> {
        self.validate()?;
        if !(x > 0.0 && x <= 1.0) {
            return Err(AveragingError::Domain(x));
        }
        Ok(match self {
            RhoLaw::Dirac(l) => x.powf(*l),
            RhoLaw::Uniform01 => {
                if x == 1.0 {
                    1.0
                } else {
                    (x - 1.0) / x.ln()
                }
            }
            RhoLaw::Exponential(l) => l / (l - x.ln()),
            RhoLaw::Empirical(s) => s.iter().map(|&r| x.powf(r)).sum::<f64>() / s.len() as f64,
        })
    }

    /// Monte Carlo estimate of `psi(x)` with its standard error.
    pub fn psi_mc(&self, x: f64, samples: usize, seed: u64) -> Result<(f64, f64), AveragingError> {
        self.validate()?;
        if !(x > 0.0 && x <= 1.0) {
            return Err(AveragingError::Domain(x));
        }
        if samples == 0 {
            return Err(AveragingError::InvalidParameter(
                "sample count must be positive".into(),
            ));
        }
        let mut rng = stream(seed, 2);
        let mut sum = KahanSum::default();
        let mut sum_sq = KahanSum::default();
        for _ in 0..samples {
            let v = x.powf(self.sample(&mut rng));
            sum.add(v);
            sum_sq.add(v * v);
        }
        let m = samples as f64;
        let mean = sum.value() / m;
        let var = ((sum_sq.value() / m) - mean * mean).max(0.0);
        let std_err = (var / m).sqrt();
        Ok((mean, std_err))
    }

    /// Draw one index from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RhoLaw::Dirac(l) => *l,
            RhoLaw::Uniform01 => rng.random_range(0.0..=1.0),
            RhoLaw::Exponential(l) => Exp::new(*l).expect("validated rate").sample(rng),
            RhoLaw::Empirical(s) => s[rng.random_range(0..s.len())],
        }
    }

    /// `E[1/(1+rho)]`: the averaged equilibrium friction level.
    pub fn mean_inv_one_plus_rho(&self) -> Result<f64, AveragingError> {
        self.validate()?;
        Ok(match self {
            RhoLaw::Dirac(l) => 1.0 / (1.0 + l),
            RhoLaw::Uniform01 => std::f64::consts::LN_2,
            // int_0^inf l e^{-l r} / (1+r) dr = -l e^l Ei(-l)
            RhoLaw::Exponential(l) => -l * l.exp() * exp_integral_ei(-l)?,
            RhoLaw::Empirical(s) => {
                s.iter().map(|&r| 1.0 / (1.0 + r)).sum::<f64>() / s.len() as f64
            }
        })
    }

    /// `E[rho]`.
    pub fn mean(&self) -> Result<f64, AveragingError> {
        self.validate()?;
        Ok(match self {
            RhoLaw::Dirac(l) => *l,
            RhoLaw::Uniform01 => 0.5,
            RhoLaw::Exponential(l) => 1.0 / l,
            RhoLaw::Empirical(s) => s.iter().sum::<f64>() / s.len() as f64,
        })
    }

    /// `psi'(x) = E[rho x^{rho-1}]` for integrable `rho`.
    pub fn psi_derivative(&self, x: f64) -> Result<f64, AveragingError> {
        self.validate()?;
        if !(x > 0.0 && x <= 1.0) {
            return Err(AveragingError::Domain(x));
        }
        Ok(match self {
            RhoLaw::Dirac(l) => {
                if *l == 0.0 {
                    0.0
                } else {
                    l * x.powf(l - 1.0)
                }
            }
            RhoLaw::Uniform01 => {
                // int_0^1 r x^{r-1} dr = (x (log x - 1) + 1) / (x log^2 x)
                let lx = x.ln();
                if lx.abs() < 1e-6 {
                    // series around x = 1: 1/2 - lx/6 + O(lx^2)
                    0.5 - lx / 6.0
                } else {
                    (x * (lx - 1.0) + 1.0) / (x * lx * lx)
                }
            }
            RhoLaw::Exponential(l) => {
                let d = l - x.ln();
                l / (x * d * d)
            }
            RhoLaw::Empirical(s) => {
                s.iter()
                    .map(|&r| if r == 0.0 { 0.0 } else { r * x.powf(r - 1.0) })
                    .sum::<f64>()
                    / s.len() as f64
            }
        })
    }

    /// `lim_{x->0+} psi(x) = P(rho = 0)`.
    pub fn zero_limit(&self) -> f64 {
        match self {
            RhoLaw::Dirac(l) => {
                if *l == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            RhoLaw::Uniform01 | RhoLaw::Exponential(_) => 0.0,
            RhoLaw::Empirical(s) => s.iter().filter(|&&r| r == 0.0).count() as f64 / s.len() as f64,
        }
    }
}
