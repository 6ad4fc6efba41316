//! Browser demo bindings: equilibrium friction, the two-regime sawtooth,
//! and relaxation with the fair pricing point. Thin wrappers over the core
//! crate returning flat `Float64Array`s for a vanilla-JS canvas page.

use impactlab_core::generator::{gen_equilibrium, gen_nonequilibrium, NonEqSpec, ScenarioSpec};
use impactlab_core::kernel::ImpactKernel;
use impactlab_core::relaxation::{DecayFamily, RelaxationProfile};
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 200_000;

fn clamp_n(n: usize) -> usize {
    n.clamp(2, MAX_POINTS)
}

fn kernel(rho: f64, theta_b: f64) -> Result<ImpactKernel, JsValue> {
    let k = if theta_b == 0.0 {
        Ok(ImpactKernel::power(rho.max(0.0)))
    } else {
        ImpactKernel::perturbed(rho.max(0.0), theta_b, 1.0)
    };
    k.map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Friction series R_1..R_n of an equilibrium path with index `rho` and
/// slowly varying perturbation `theta_b`; converges to 1/(1+rho).
#[wasm_bindgen]
pub fn equilibrium_friction(
    rho: f64,
    theta_b: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, JsValue> {
    let spec = ScenarioSpec::uniform(clamp_n(n), seed);
    let (_, path) = gen_equilibrium(&spec, &kernel(rho, theta_b)?)
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
    Ok(path.friction().to_vec())
}

/// Impact series I_1..I_n of the same equilibrium path (same seed gives the
/// matching trajectory).
#[wasm_bindgen]
pub fn equilibrium_impacts(
    rho: f64,
    theta_b: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, JsValue> {
    let spec = ScenarioSpec::uniform(clamp_n(n), seed);
    let (_, path) = gen_equilibrium(&spec, &kernel(rho, theta_b)?)
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
    Ok(path.impacts().to_vec())
}

/// Friction series of the two-regime construction: oscillates over the whole
/// interval [1/(1+rho2), 1/(1+rho1)].
#[wasm_bindgen]
pub fn sawtooth_friction(
    rho1: f64,
    rho2: f64,
    growth: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, JsValue> {
    let (_, path) = sawtooth_path(rho1, rho2, growth, n, seed)?;
    Ok(path.friction().to_vec())
}

/// Impact series of the same sawtooth path: the alternating concave/convex
/// price segments.
#[wasm_bindgen]
pub fn sawtooth_impacts(
    rho1: f64,
    rho2: f64,
    growth: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, JsValue> {
    let (_, path) = sawtooth_path(rho1, rho2, growth, n, seed)?;
    Ok(path.impacts().to_vec())
}

fn sawtooth_path(
    rho1: f64,
    rho2: f64,
    growth: f64,
    n: usize,
    seed: u64,
) -> Result<
    (
        impactlab_core::schedule::OrderSchedule,
        impactlab_core::path::ImpactPath,
    ),
    JsValue,
> {
    let (lo, hi) = if rho1 <= rho2 {
        (rho1, rho2)
    } else {
        (rho2, rho1)
    };
    let neq = NonEqSpec::new(lo.max(0.0), hi.max(0.0), 10, growth.max(1.01))
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
    let spec = ScenarioSpec::uniform(clamp_n(n), seed);
    gen_nonequilibrium(&spec, &neq).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Relaxation curve G(t) = alpha + (1-alpha) e^{-t/tau} on a uniform grid.
#[wasm_bindgen]
pub fn relaxation_curve(
    alpha: f64,
    tau: f64,
    horizon: f64,
    points: usize,
) -> Result<Vec<f64>, JsValue> {
    let profile = profile(alpha, tau)?;
    let points = points.clamp(2, 4096);
    Ok((0..points)
        .map(|i| profile.eval(horizon.max(1e-9) * i as f64 / (points - 1) as f64))
        .collect())
}

/// Fair pricing time G^{-1}(r): when the decaying price crosses the average
/// execution level r. Returns -1 when r never gets reached (r <= alpha).
#[wasm_bindgen]
pub fn fair_pricing_time(alpha: f64, tau: f64, r: f64) -> Result<f64, JsValue> {
    let profile = profile(alpha, tau)?;
    Ok(profile.inverse(r).map(|t| t.max(0.0)).unwrap_or(-1.0))
}

fn profile(alpha: f64, tau: f64) -> Result<RelaxationProfile, JsValue> {
    RelaxationProfile::new(
        alpha.clamp(0.0, 0.5),
        DecayFamily::Exponential { tau: tau.max(1e-6) },
    )
    .map_err(|e| JsValue::from_str(&e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_series_converges() {
        let r = equilibrium_friction(0.5, 0.0, 10_000, 1).unwrap();
        assert_eq!(r.len(), 10_000);
        assert!((r[9_999] - 2.0 / 3.0).abs() < 5e-3);
        let i = equilibrium_impacts(0.5, 0.0, 10_000, 1).unwrap();
        assert!(i.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn sawtooth_series_oscillates() {
        let r = sawtooth_friction(0.5, 2.0, 8.0, 100_000, 2).unwrap();
        let tail = &r[1_000..];
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo < 0.4 && hi > 0.6, "tail range [{lo}, {hi}]");
    }

    #[test]
    fn relaxation_and_fair_pricing() {
        let g = relaxation_curve(0.5, 1.0, 6.0, 100).unwrap();
        assert_eq!(g[0], 1.0);
        assert!(g.windows(2).all(|w| w[1] <= w[0]));
        let t = fair_pricing_time(0.5, 1.0, 2.0 / 3.0).unwrap();
        assert!((t - 3f64.ln()).abs() < 1e-12);
        assert_eq!(fair_pricing_time(0.5, 1.0, 0.4).unwrap(), -1.0);
    }

    #[test]
    fn oversized_requests_are_clamped() {
        let r = equilibrium_friction(0.5, 0.0, 10_000_000, 1).unwrap();
        assert_eq!(r.len(), MAX_POINTS);
    }
}
