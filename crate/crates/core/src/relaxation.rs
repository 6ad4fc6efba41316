//! Post-execution relaxation profiles, the fair pricing point and residual
//! impacts.
//!
//! The averaged relaxation is `G(t) = alpha + (1 - alpha) G0(t)` where
//! `alpha` is the long-run information level and `G0` a convex decreasing
//! uninformed decay with `G0(0) = 1`, `G0(inf) = 0`. The fair pricing time
//! of a path with final friction `R_N` is `T_N = G^{-1}(R_N)`: the moment
//! the decaying price crosses the average execution price, where the
//! residual impact `G(T_N) I_N` equals `<I>_N` identically.

use crate::path::ImpactPath;
use crate::rng::stream;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RelaxError {
    #[error("invalid relaxation parameter: {0}")]
    InvalidParameter(String),
    #[error("no fair pricing: level {level} never reached (decay floor alpha = {alpha})")]
    NoFairPricing { level: f64, alpha: f64 },
}

/// Built-in uninformed decay families; both are convex decreasing with
/// `G0(0) = 1` and limit 0, spanning fast and slow relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayFamily {
    /// `G0(t) = exp(-t / tau)`.
    Exponential { tau: f64 },
    /// `G0(t) = (1 + t/t0)^{-p}`.
    Power { t0: f64, p: f64 },
}

impl DecayFamily {
    fn validate(&self) -> Result<(), RelaxError> {
        match *self {
            DecayFamily::Exponential { tau } if !(tau > 0.0) => Err(RelaxError::InvalidParameter(
                format!("tau must be positive, got {tau}"),
            )),
            DecayFamily::Power { t0, p } if !(t0 > 0.0 && p > 0.0) => {
                Err(RelaxError::InvalidParameter(format!(
                    "power decay needs t0 > 0 and p > 0, got ({t0}, {p})"
                )))
            }
            _ => Ok(()),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        match *self {
            DecayFamily::Exponential { tau } => (-t / tau).exp(),
            DecayFamily::Power { t0, p } => (1.0 + t / t0).powf(-p),
        }
    }

    fn inverse(&self, g0: f64) -> f64 {
        match *self {
            DecayFamily::Exponential { tau } => -tau * g0.ln(),
            DecayFamily::Power { t0, p } => t0 * (g0.powf(-1.0 / p) - 1.0),
        }
    }
}

/// `G(t) = alpha + (1 - alpha) G0(t)` with `alpha` in `[0, 1/2]`.
#[derive(Debug, Clone, Copy)]
pub struct RelaxationProfile {
    alpha: f64,
    family: DecayFamily,
}

impl RelaxationProfile {
    pub fn new(alpha: f64, family: DecayFamily) -> Result<Self, RelaxError> {
        if !(0.0..=0.5).contains(&alpha) {
            return Err(RelaxError::InvalidParameter(format!(
                "alpha must lie in [0, 1/2], got {alpha}"
            )));
        }
        family.validate()?;
        Ok(Self { alpha, family })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn family(&self) -> DecayFamily {
        self.family
    }

    /// `G(t)`, strictly decreasing from 1 to `alpha`.
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        self.alpha + (1.0 - self.alpha) * self.family.eval(t)
    }

    /// `G0(t)`.
    pub fn uninformed(&self, t: f64) -> f64 {
        self.family.eval(t)
    }

    /// `G^{-1}(r)` for `r` in `(alpha, 1]`; `G^{-1}(1) = 0`, and levels at
    /// or below `alpha` are never reached.
    pub fn inverse(&self, r: f64) -> Result<f64, RelaxError> {
        if !(r > self.alpha && r <= 1.0) {
            return Err(RelaxError::NoFairPricing {
                level: r,
                alpha: self.alpha,
            });
        }
        let g0 = (r - self.alpha) / (1.0 - self.alpha);
        Ok(self.family.inverse(g0).max(0.0))
    }
}

/// Fair pricing summary of one path under a profile.
#[derive(Debug, Clone, Copy)]
pub struct FairPricing {
    /// `T_N = G^{-1}(R_N)`.
    pub time: f64,
    /// Residual impact at the fair pricing point, `G(T_N) I_N = <I>_N`.
    pub residual_at_fair_point: f64,
    /// Residual impact at infinity, `alpha * I_N`.
    pub residual_at_inf: f64,
}

/// Fair pricing time and residual impacts for a path's final state.
pub fn fair_pricing(
    path: &ImpactPath,
    profile: &RelaxationProfile,
) -> Result<FairPricing, RelaxError> {
    let r_n = path.final_friction();
    let time = profile.inverse(r_n)?;
    Ok(FairPricing {
        time,
        residual_at_fair_point: profile.eval(time) * path.final_impact(),
        residual_at_inf: profile.alpha() * path.final_impact(),
    })
}

/// Mean-zero per-grid-point Gaussian noise on the relaxation ratio, with
/// standard deviation `std_scale` (as a fraction of the peak impact, which
/// the ratio normalizes away).
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub std_scale: f64,
    pub seed: u64,
}

/// Averaged noisy relaxation over `m` sampled decay trajectories.
#[derive(Debug, Clone)]
pub struct RelaxCurve {
    pub times: Vec<f64>,
    /// Model curve `G(t)`.
    pub g: Vec<f64>,
    /// Monte Carlo average of the noisy trajectories.
    pub g_hat: Vec<f64>,
}

/// Average `m` noisy relaxation trajectories of the path on a uniform grid
/// of `[0, horizon]`. With `std_scale = 0` the average equals `G` exactly;
/// otherwise it converges at the usual `std_scale / sqrt(m)` rate per grid
/// point. Pairwise summation keeps the reduction order-independent.
pub fn relax_paths(
    path: &ImpactPath,
    profile: &RelaxationProfile,
    noise: &NoiseSpec,
    horizon: f64,
    grid_points: usize,
    m: usize,
) -> Result<RelaxCurve, RelaxError> {
    if !(horizon > 0.0) || grid_points < 2 || m == 0 {
        return Err(RelaxError::InvalidParameter(format!(
            "need horizon > 0, grid_points >= 2, m >= 1 (got {horizon}, {grid_points}, {m})"
        )));
    }
    if !(noise.std_scale >= 0.0) {
        return Err(RelaxError::InvalidParameter(format!(
            "noise std must be >= 0, got {}",
            noise.std_scale
        )));
    }
    let _ = path.final_impact(); // the ratio normalizes the peak away
    let times: Vec<f64> = (0..grid_points)
        .map(|i| horizon * i as f64 / (grid_points - 1) as f64)
        .collect();
    let g: Vec<f64> = times.iter().map(|&t| profile.eval(t)).collect();
    if noise.std_scale == 0.0 {
        return Ok(RelaxCurve {
            times,
            g_hat: g.clone(),
            g,
        });
    }
    let normal = Normal::new(0.0, noise.std_scale)
        .map_err(|e| RelaxError::InvalidParameter(e.to_string()))?;
    // one accumulation per grid point; pairwise over chunks of trajectories
    let mut partials: Vec<Vec<f64>> = Vec::new();
    let chunk = 64usize;
    let mut j = 0;
    while j < m {
        let count = chunk.min(m - j);
        let mut acc = vec![0.0f64; grid_points];
        for dj in 0..count {
            let mut rng = stream(noise.seed, 3 + (j + dj) as u64);
            for (i, a) in acc.iter_mut().enumerate() {
                *a += g[i] + normal.sample(&mut rng);
            }
        }
        partials.push(acc);
        j += count;
    }
    while partials.len() > 1 {
        let mut next = Vec::with_capacity(partials.len().div_ceil(2));
        let mut it = partials.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        partials = next;
    }
    let g_hat: Vec<f64> = partials
        .pop()
        .expect("at least one chunk")
        .into_iter()
        .map(|s| s / m as f64)
        .collect();
    Ok(RelaxCurve { times, g, g_hat })
}
