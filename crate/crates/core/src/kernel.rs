//! Regularly varying impact kernels in Karamata form.
//!
//! A kernel is `f(x) = x^rho * exp(eta(x) + int_{u0}^{x} theta(u)/u du)`
//! with `eta` bounded and convergent at infinity, `theta` bounded and
//! vanishing at infinity, and `theta == 0` below the anchor `u0` so the
//! integral is well defined down to zero. `rho` is the regular-variation
//! index: `rho = 1/2` is the square-root impact law, `rho = 0` a slowly
//! varying (e.g. logarithmic) impact, `rho = 1` linear impact.

use crate::quad::{adaptive_simpson, QuadError};
use thiserror::Error;

/// Default anchor below which `theta` vanishes.
pub const DEFAULT_U0: f64 = 1.0;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel overflow: f({x}) is not representable (log f = {log_f})")]
    Overflow { x: f64, log_f: f64 },
    #[error("kernel evaluation needs x > 0 (got {0})")]
    Domain(f64),
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// The slowly varying exponent part converging to `kappa` at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSpec {
    /// `eta(x) = kappa`.
    Constant(f64),
    /// `eta(x) = kappa + a * (1 + log(max(x, 1)))^{-p}`, `p > 0`.
    LogDecay { kappa: f64, a: f64, p: f64 },
}

impl EtaSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            EtaSpec::Constant(kappa) => kappa,
            EtaSpec::LogDecay { kappa, a, p } => kappa + a * (1.0 + x.max(1.0).ln()).powf(-p),
        }
    }

    /// Limit at infinity.
    pub fn kappa(&self) -> f64 {
        match *self {
            EtaSpec::Constant(kappa) => kappa,
            EtaSpec::LogDecay { kappa, .. } => kappa,
        }
    }
}

/// The vanishing part integrated against `du/u`, zero below the anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSpec {
    Zero,
    /// `theta(u) = b * (1 + log u)^{-p}` for `u > u0`, `p > 0`.
    LogDecay {
        b: f64,
        p: f64,
    },
}

impl ThetaSpec {
    pub fn eval(&self, u: f64, u0: f64) -> f64 {
        match *self {
            ThetaSpec::Zero => 0.0,
            ThetaSpec::LogDecay { b, p } => {
                if u > u0 && u > 0.0 {
                    b * (1.0 + u.ln()).powf(-p)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Impact kernel `f(x) = x^rho * exp(eta(x) + int_{u0}^{x} theta(u)/u du)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactKernel {
    rho: f64,
    eta: EtaSpec,
    theta: ThetaSpec,
    u0: f64,
}

impl ImpactKernel {
    pub fn new(rho: f64, eta: EtaSpec, theta: ThetaSpec, u0: f64) -> Result<Self, KernelError> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(KernelError::InvalidParameter(format!(
                "rho must be finite and >= 0, got {rho}"
            )));
        }
        if !(u0 > 0.0) {
            return Err(KernelError::InvalidParameter(format!(
                "u0 must be positive, got {u0}"
            )));
        }
        if let EtaSpec::LogDecay { p, .. } = eta {
            if !(p > 0.0) {
                return Err(KernelError::InvalidParameter(format!(
                    "eta decay exponent must be positive, got {p}"
                )));
            }
        }
        if let ThetaSpec::LogDecay { p, .. } = theta {
            // u0 >= 1 keeps 1 + log(u) positive on the support of theta.
            if !(p > 0.0) || u0 < 1.0 {
                return Err(KernelError::InvalidParameter(format!(
                    "theta log-decay needs p > 0 and u0 >= 1 (p = {p}, u0 = {u0})"
                )));
            }
        }
        Ok(Self {
            rho,
            eta,
            theta,
            u0,
        })
    }

    /// Pure power `f(x) = x^rho` (`eta = 0`, `theta = 0`).
    pub fn power(rho: f64) -> Self {
        Self::new(rho, EtaSpec::Constant(0.0), ThetaSpec::Zero, DEFAULT_U0)
            .expect("rho checked by caller")
    }

    /// Power with the standard log-decay perturbation `theta(u) = b (1+log u)^{-p}`.
    pub fn perturbed(rho: f64, b: f64, p: f64) -> Result<Self, KernelError> {
        Self::new(
            rho,
            EtaSpec::Constant(0.0),
            ThetaSpec::LogDecay { b, p },
            DEFAULT_U0,
        )
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eta(&self) -> &EtaSpec {
        &self.eta
    }

    pub fn theta(&self) -> &ThetaSpec {
        &self.theta
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    /// Closed form of `int_{u0}^{x} theta(u)/u du`.
    ///
    /// Substituting `v = 1 + log u` turns the log-decay family into a pure
    /// power integral, so no quadrature is needed for the built-ins.
    pub fn theta_integral(&self, x: f64) -> f64 {
        match self.theta {
            ThetaSpec::Zero => 0.0,
            ThetaSpec::LogDecay { b, p } => {
                if x <= self.u0 {
                    return 0.0;
                }
                let v0 = 1.0 + self.u0.ln();
                let v1 = 1.0 + x.ln();
                if (p - 1.0).abs() < 1e-12 {
                    b * (v1 / v0).ln()
                } else {
                    b * (v1.powf(1.0 - p) - v0.powf(1.0 - p)) / (1.0 - p)
                }
            }
        }
    }

    /// Same integral by adaptive quadrature; cross-checks the closed form.
    pub fn theta_integral_quadrature(&self, x: f64, rel_tol: f64) -> Result<f64, KernelError> {
        if x <= self.u0 {
            return Ok(0.0);
        }
        let v = adaptive_simpson(
            |u| self.theta.eval(u, self.u0) / u,
            self.u0,
            x,
            rel_tol,
            1_000_000,
        )?;
        Ok(v)
    }

    /// `log f(x)`; finite for every `x > 0` even when `f` itself overflows.
    pub fn log_eval(&self, x: f64) -> Result<f64, KernelError> {
        if !(x > 0.0) {
            return Err(KernelError::Domain(x));
        }
        Ok(self.rho * x.ln() + self.eta.eval(x) + self.theta_integral(x))
    }

    /// Evaluate `f(x)` for `x > 0`.
    pub fn eval(&self, x: f64) -> Result<f64, KernelError> {
        let log_f = self.log_eval(x)?;
        let f = log_f.exp();
        if !f.is_finite() || f <= 0.0 {
            return Err(KernelError::Overflow { x, log_f });
        }
        Ok(f)
    }

    /// True if `f` is non-decreasing and concave on a log-spaced grid of
    /// `[lo, hi]` (first differences >= 0, second differences <= slack).
    pub fn is_concave_nondecreasing(&self, lo: f64, hi: f64, points: usize) -> bool {
        assert!(lo > 0.0 && hi > lo && points >= 3);
        let step = (hi / lo).powf(1.0 / (points - 1) as f64);
        // Uniform spacing in x is required for plain second differences, so
        // evaluate on linear segments between log-spaced anchors.
        let mut x = lo;
        let mut anchors = Vec::with_capacity(points);
        for _ in 0..points {
            anchors.push(x);
            x *= step;
        }
        for w in anchors.windows(2) {
            let (a, b) = (w[0], w[1]);
            let m = 0.5 * (a + b);
            let (fa, fm, fb) = match (self.eval(a), self.eval(m), self.eval(b)) {
                (Ok(fa), Ok(fm), Ok(fb)) => (fa, fm, fb),
                _ => return false,
            };
            let slack = 1e-12 * fb.abs();
            if fm < fa - slack || fb < fm - slack {
                return false;
            }
            if fa + fb - 2.0 * fm > slack {
                return false;
            }
        }
        true
    }
}
