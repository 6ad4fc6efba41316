//! Friction-series analysis: convergence detection, three estimators of the
//! equilibrium index `rho`, limit-point intervals for oscillating paths, and
//! the participation-rate impact check.

use crate::kernel::{ImpactKernel, KernelError};
use crate::path::ImpactPath;
use crate::schedule::MarketVolumes;
use thiserror::Error;

/// Tail fraction used by the estimators unless the caller overrides it.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;
/// Grid resolution for limit-point occupation.
pub const DEFAULT_RESOLUTION: f64 = 0.01;
/// Tail spread below which a friction series counts as converged.
pub const CONVERGENCE_SPREAD: f64 = 0.02;
/// Local estimator level above which (while still rising) a path is flagged
/// as diverging, i.e. the `rho = +inf` regime. Exponential impacts overflow
/// f64 near log I ~ 709, which caps the observable local estimate well
/// below 1000; 100 still separates it cleanly from any finite-rho fit.
pub const DIVERGENCE_THRESHOLD: f64 = 100.0;

#[derive(Debug, Error)]
pub enum FrictionError {
    #[error("path too short for tail analysis: {len} < {min}")]
    TooShort { len: usize, min: usize },
    #[error("tail mean of the friction is not in (0, 1]: {0}; no equilibrium")]
    NonEquilibrium(f64),
    #[error("degenerate log-log window: cumulative size spans no range")]
    DegenerateWindow,
    #[error("window {start}..{end} outside path of length {len}")]
    BadWindow {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("market volumes misaligned: {vols} entries vs path of length {len}")]
    Misaligned { vols: usize, len: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

fn tail_start(len: usize, tail_fraction: f64) -> usize {
    let f = tail_fraction.clamp(0.0, 1.0);
    let keep = ((len as f64) * f).ceil() as usize;
    len - keep.clamp(1, len)
}

/// Estimator from the equilibrium limit `R_inf = 1/(1+rho)`:
/// `rho_hat = 1/mean(R tail) - 1`.
pub fn rho_from_friction(path: &ImpactPath, tail_fraction: f64) -> Result<f64, FrictionError> {
    if path.len() < 100 {
        return Err(FrictionError::TooShort {
            len: path.len(),
            min: 100,
        });
    }
    let start = tail_start(path.len(), tail_fraction);
    let tail = &path.friction()[start..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(FrictionError::NonEquilibrium(mean));
    }
    Ok((1.0 / mean - 1.0).max(0.0))
}

/// Least-squares slope of `log I_n` against `log S_n` over the window
/// (half-open, 0-based), clipped at zero.
pub fn rho_loglog(path: &ImpactPath, window: std::ops::Range<usize>) -> Result<f64, FrictionError> {
    if window.start >= window.end || window.end > path.len() {
        return Err(FrictionError::BadWindow {
            start: window.start,
            end: window.end,
            len: path.len(),
        });
    }
    let xs = &path.cumulative_sizes()[window.clone()];
    let ys = &path.impacts()[window];
    let n = xs.len() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sx += x.ln();
        sy += y.ln();
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (y.ln() - my);
    }
    if sxx <= 0.0 {
        return Err(FrictionError::DegenerateWindow);
    }
    Ok((sxy / sxx).max(0.0))
}

/// Local estimator `rho_hat_n = (S_n / Q_n) * (1 - I_{n-1}/I_n)`, one value
/// per step (`rho_hat_1 = 0` by the `I_0 = 0` convention... the first ratio
/// uses `I_0 = 0`, giving `S_1/Q_1 * 1`, reported as-is).
pub fn rho_local(path: &ImpactPath) -> Vec<f64> {
    let impacts = path.impacts();
    let sizes = path.cumulative_sizes();
    let mut out = Vec::with_capacity(path.len());
    let mut prev = 0.0;
    for k in 0..path.len() {
        let q = path.volume_at(k + 1);
        out.push(sizes[k] / q * (1.0 - prev / impacts[k]));
        prev = impacts[k];
    }
    out
}

/// Limit-point report over the trailing `tail_fraction` of the path.
#[derive(Debug, Clone, Copy)]
pub struct LimitPoints {
    /// Tail minimum of `R_n` (estimates the liminf).
    pub liminf: f64,
    /// Tail maximum of `R_n` (estimates the limsup).
    pub limsup: f64,
    /// Largest empty stretch of an `resolution`-grid histogram between the
    /// two, i.e. how densely the tail fills the interval.
    pub max_gap: f64,
}

pub fn limit_points(path: &ImpactPath, tail_fraction: f64, resolution: f64) -> LimitPoints {
    let start = tail_start(path.len(), tail_fraction);
    let tail = &path.friction()[start..];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r in tail {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if hi - lo < resolution {
        return LimitPoints {
            liminf: lo,
            limsup: hi,
            max_gap: 0.0,
        };
    }
    let bins = ((hi - lo) / resolution).ceil() as usize;
    let mut occupied = vec![false; bins];
    for &r in tail {
        let b = (((r - lo) / resolution) as usize).min(bins - 1);
        occupied[b] = true;
    }
    let mut run = 0usize;
    let mut best = 0usize;
    for &o in &occupied {
        run = if o { 0 } else { run + 1 };
        best = best.max(run);
    }
    LimitPoints {
        liminf: lo,
        limsup: hi,
        max_gap: best as f64 * resolution,
    }
}

/// Ratio `I_n / (sigma_hat_n * (Q/V)^rho)` with the endogenous volatility
/// `sigma_hat_n = f(V_1 + ... + V_n)`; tends to 1 along equilibrium paths.
pub fn participation_impact(
    path: &ImpactPath,
    vols: &MarketVolumes,
    kernel: &ImpactKernel,
) -> Result<Vec<f64>, FrictionError> {
    if vols.volumes().len() != path.len() {
        return Err(FrictionError::Misaligned {
            vols: vols.volumes().len(),
            len: path.len(),
        });
    }
    let scale = vols.participation().powf(kernel.rho());
    let mut cum_v = 0.0;
    let mut out = Vec::with_capacity(path.len());
    for (k, &v) in vols.volumes().iter().enumerate() {
        cum_v += v;
        let sigma_hat = kernel.eval(cum_v)?;
        out.push(path.impacts()[k] / (sigma_hat * scale));
    }
    Ok(out)
}

/// Convergence-speed diagnostic `(S_n/Q_n)(R_{n-1}/R_n - 1)` (zero at the
/// first step). Its tail median vanishes for kernels whose slowly varying
/// exponent part is constant; there is no sharp finite-sample pass/fail
/// threshold, so it is reported rather than asserted.
pub fn convergence_speed(path: &ImpactPath) -> Vec<f64> {
    let r = path.friction();
    let s = path.cumulative_sizes();
    let mut out = Vec::with_capacity(path.len());
    out.push(0.0);
    for k in 1..path.len() {
        let q = path.volume_at(k + 1);
        out.push((s[k] / q) * (r[k - 1] / r[k] - 1.0));
    }
    out
}

/// Summary of a friction series.
#[derive(Debug, Clone)]
pub struct FrictionAnalysis {
    /// Tail mean of `R_n`; the equilibrium level when `converged`.
    pub limit_estimate: f64,
    pub rho_hat_friction: f64,
    pub rho_hat_loglog: f64,
    pub rho_hat_local: f64,
    /// Tail spread below [`CONVERGENCE_SPREAD`].
    pub converged: bool,
    pub tail_liminf: f64,
    pub tail_limsup: f64,
    /// Set when the local estimator blows through [`DIVERGENCE_THRESHOLD`]
    /// while still rising: the `rho = +inf` regime.
    pub divergent: bool,
}

/// Run the full analysis with the default tail fraction and resolution.
pub fn analyze(path: &ImpactPath) -> Result<FrictionAnalysis, FrictionError> {
    let tail_fraction = DEFAULT_TAIL_FRACTION;
    let lp = limit_points(path, tail_fraction, DEFAULT_RESOLUTION);
    let start = tail_start(path.len(), tail_fraction);
    let tail = &path.friction()[start..];
    let limit_estimate = tail.iter().sum::<f64>() / tail.len() as f64;

    let local = rho_local(path);
    let local_tail = &local[start..];
    let rho_hat_local = local_tail.iter().sum::<f64>() / local_tail.len() as f64;
    let divergent = rho_hat_local > DIVERGENCE_THRESHOLD
        && local_tail.last().unwrap() > local_tail.first().unwrap();

    let rho_hat_friction = rho_from_friction(path, tail_fraction)?;
    let rho_hat_loglog = rho_loglog(path, path.len() / 2..path.len())?;

    Ok(FrictionAnalysis {
        limit_estimate,
        rho_hat_friction,
        rho_hat_loglog,
        rho_hat_local,
        converged: lp.limsup - lp.liminf < CONVERGENCE_SPREAD,
        tail_liminf: lp.liminf,
        tail_limsup: lp.limsup,
        divergent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{
        gen_equilibrium, gen_nonequilibrium, gen_volumes, NonEqSpec, ScenarioSpec,
    };
    use crate::kernel::ImpactKernel;
    use crate::path::{impact_path, ImpactPath};
    use crate::schedule::OrderSchedule;
    use approx::assert_relative_eq;

    #[test]
    fn friction_estimator_round_trip() {
        let spec = ScenarioSpec::uniform(10_000, 4);
        let (_, path) = gen_equilibrium(&spec, &ImpactKernel::power(0.5)).unwrap();
        let rho = rho_from_friction(&path, 0.2).unwrap();
        assert!((0.48..=0.52).contains(&rho), "rho_hat = {rho}");
    }

    #[test]
    fn constant_friction_means_rho_zero() {
        let p = ImpactPath::from_impacts(&vec![1.0; 200], vec![3.0; 200]).unwrap();
        assert_relative_eq!(rho_from_friction(&p, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn exact_two_thirds_maps_to_half() {
        // Impacts built so that sum_k I_k = (2/3) n I_n for every n >= 2,
        // i.e. the friction is pinned at 2/3; then rho_hat = 1/(2/3) - 1 = 1/2.
        // R_1 = 1 always, so the n = 2 step absorbs the start: I_2 = 3 I_1.
        let n = 300;
        let mut impacts = vec![1.0, 3.0];
        for k in 3..=n {
            let k = k as f64;
            let next = 2.0 * (k - 1.0) * impacts.last().unwrap() / (2.0 * k - 3.0);
            impacts.push(next);
        }
        let p = ImpactPath::from_impacts(&vec![1.0; n], impacts).unwrap();
        for &r in &p.friction()[1..] {
            assert_relative_eq!(r, 2.0 / 3.0, max_relative = 1e-12);
        }
        assert_relative_eq!(
            rho_from_friction(&p, 0.2).unwrap(),
            0.5,
            max_relative = 1e-11
        );
    }

    #[test]
    fn loglog_recovers_exact_power() {
        let s = OrderSchedule::constant_unit(2000);
        let path = impact_path(&s, &ImpactKernel::power(0.5)).unwrap();
        let slope = rho_loglog(&path, 0..2000).unwrap();
        assert_relative_eq!(slope, 0.5, max_relative = 1e-10);
    }

    #[test]
    fn loglog_round_trip_with_perturbation() {
        let spec = ScenarioSpec::uniform(10_000, 13);
        let k = ImpactKernel::perturbed(0.5, 0.1, 1.0).unwrap();
        let (_, path) = gen_equilibrium(&spec, &k).unwrap();
        // window where S spans roughly [1e2, 1e4]
        let slope = rho_loglog(&path, 100..path.len()).unwrap();
        assert!((0.48..=0.52).contains(&slope), "slope = {slope}");
    }

    #[test]
    fn loglog_slowly_varying_case() {
        let spec = ScenarioSpec::uniform(10_000, 13);
        let k = ImpactKernel::new(
            0.0,
            crate::kernel::EtaSpec::LogDecay {
                kappa: 1.0,
                a: -0.5,
                p: 1.0,
            },
            crate::kernel::ThetaSpec::Zero,
            1.0,
        )
        .unwrap();
        let (_, path) = gen_equilibrium(&spec, &k).unwrap();
        let slope = rho_loglog(&path, 100..path.len()).unwrap();
        assert!(slope < 0.02, "slope = {slope}");
    }

    #[test]
    fn degenerate_window_rejected() {
        let s = OrderSchedule::constant_unit(10);
        let path = impact_path(&s, &ImpactKernel::power(0.5)).unwrap();
        assert!(matches!(
            rho_loglog(&path, 3..4),
            Err(FrictionError::DegenerateWindow)
        ));
        assert!(matches!(
            rho_loglog(&path, 5..20),
            Err(FrictionError::BadWindow { .. })
        ));
    }

    #[test]
    fn local_estimator_linear_kernel_exact() {
        let s = OrderSchedule::constant_unit(100);
        let path = impact_path(&s, &ImpactKernel::power(1.0)).unwrap();
        let local = rho_local(&path);
        for &v in &local[1..] {
            assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn local_estimator_sqrt_kernel() {
        let s = OrderSchedule::constant_unit(1000);
        let path = impact_path(&s, &ImpactKernel::power(0.5)).unwrap();
        let local = rho_local(&path);
        assert!(
            (local[999] - 0.5).abs() < 1e-3,
            "rho_local at n=1000: {}",
            local[999]
        );
    }

    #[test]
    fn exponential_impacts_flagged_divergent() {
        // I_n = exp(S_n) stays representable up to S ~ 700
        let n = 700;
        let q = vec![1.0; n];
        let impacts: Vec<f64> = (1..=n).map(|k| (k as f64).exp()).collect();
        let path = ImpactPath::from_impacts(&q, impacts).unwrap();
        let local = rho_local(&path);
        let last = *local.last().unwrap();
        assert!(last > DIVERGENCE_THRESHOLD, "rho_local = {last}");
        let analysis = analyze(&path).unwrap();
        assert!(analysis.divergent);
        // R_n ~ e/((e-1) n) here: the friction converges, but to zero
        assert!(analysis.limit_estimate < 0.01);
    }

    #[test]
    fn equilibrium_not_flagged_divergent() {
        let spec = ScenarioSpec::uniform(2000, 2);
        let (_, path) = gen_equilibrium(&spec, &ImpactKernel::power(2.0)).unwrap();
        let analysis = analyze(&path).unwrap();
        assert!(!analysis.divergent);
        assert!(analysis.converged);
        assert!((analysis.rho_hat_local - 2.0).abs() < 0.02);
    }

    #[test]
    fn limit_points_equilibrium_is_tight() {
        let spec = ScenarioSpec::uniform(10_000, 6);
        let (_, path) = gen_equilibrium(&spec, &ImpactKernel::power(0.5)).unwrap();
        let lp = limit_points(&path, 0.2, 0.01);
        assert!(lp.limsup - lp.liminf < 0.02);
    }

    #[test]
    fn limit_points_constant_series() {
        let p = ImpactPath::from_impacts(&vec![1.0; 100], vec![2.0; 100]).unwrap();
        // R_n = <I>/I = 1 for all n here; constant series
        let lp = limit_points(&p, 0.5, 0.01);
        assert_eq!(lp.liminf, lp.limsup);
        assert_eq!(lp.max_gap, 0.0);
    }

    #[test]
    fn limit_points_oscillating_fills_interval() {
        let spec = ScenarioSpec::uniform(1_000_000, 1);
        let neq = NonEqSpec::defaults(0.5, 2.0).unwrap();
        let (_, path) = gen_nonequilibrium(&spec, &neq).unwrap();
        let lp = limit_points(&path, 0.99, 0.01);
        assert!(
            (lp.liminf - 1.0 / 3.0).abs() < 0.02,
            "liminf = {}",
            lp.liminf
        );
        assert!(
            (lp.limsup - 2.0 / 3.0).abs() < 0.02,
            "limsup = {}",
            lp.limsup
        );
        assert!(lp.max_gap < 0.05, "max gap = {}", lp.max_gap);
    }

    #[test]
    fn participation_ratio_full_participation_is_exact() {
        let spec = ScenarioSpec::uniform(500, 8);
        let k = ImpactKernel::power(0.5);
        let (schedule, path) = gen_equilibrium(&spec, &k).unwrap();
        let vols = gen_volumes(&schedule, 1.0, 0.0, 8).unwrap();
        let ratios = participation_impact(&path, &vols, &k).unwrap();
        for &r in &ratios {
            assert_relative_eq!(r, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn participation_ratio_deterministic_volumes() {
        let spec = ScenarioSpec::uniform(10_000, 8);
        let k = ImpactKernel::power(0.5);
        let (schedule, path) = gen_equilibrium(&spec, &k).unwrap();
        let vols = gen_volumes(&schedule, 0.1, 0.0, 8).unwrap();
        let ratios = participation_impact(&path, &vols, &k).unwrap();
        let last = *ratios.last().unwrap();
        assert!((last - 1.0).abs() < 1e-12, "ratio = {last}");
    }
}
