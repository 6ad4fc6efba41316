//! Seeded scenario generation: equilibrium paths driven by a kernel,
//! oscillating (sawtooth) paths built multiplicatively, and market volumes
//! at a target participation rate.

use crate::kernel::ImpactKernel;
use crate::path::{impact_path, ImpactPath, PathError};
use crate::rng::stream;
use crate::schedule::{MarketVolumes, OrderSchedule, ScheduleError, Side};
use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("invalid scenario parameter: {0}")]
    InvalidParameter(String),
}

/// How child volumes are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeLaw {
    /// Uniform on `[q_minus, q_plus]`.
    Uniform,
    /// Every child has volume `q_minus` (requires `q_minus == q_plus`).
    Constant,
}

/// How the gaps between execution times are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeGap {
    /// Fixed positive gap.
    Fixed(f64),
    /// Exponential gaps with the given rate.
    ExponentialRate(f64),
}

/// Scenario description: schedule shape plus the seed.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub n: usize,
    pub q_minus: f64,
    pub q_plus: f64,
    pub volume_law: VolumeLaw,
    pub time_gap: TimeGap,
    pub start_price: f64,
    pub side: Side,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Uniform volumes on `[0.5, 1.5]` at unit time gaps.
    pub fn uniform(n: usize, seed: u64) -> Self {
        Self {
            n,
            q_minus: 0.5,
            q_plus: 1.5,
            volume_law: VolumeLaw::Uniform,
            time_gap: TimeGap::Fixed(1.0),
            start_price: 100.0,
            side: Side::Buy,
            seed,
        }
    }

    /// Constant unit volumes at unit time gaps.
    pub fn constant(n: usize, seed: u64) -> Self {
        Self {
            n,
            q_minus: 1.0,
            q_plus: 1.0,
            volume_law: VolumeLaw::Constant,
            time_gap: TimeGap::Fixed(1.0),
            start_price: 100.0,
            side: Side::Buy,
            seed,
        }
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        if self.n == 0 {
            return Err(GeneratorError::InvalidParameter("n must be >= 1".into()));
        }
        if !(self.q_minus > 0.0 && self.q_minus <= self.q_plus && self.q_plus.is_finite()) {
            return Err(GeneratorError::InvalidParameter(format!(
                "need 0 < q_minus <= q_plus < inf, got [{}, {}]",
                self.q_minus, self.q_plus
            )));
        }
        if self.volume_law == VolumeLaw::Constant && self.q_minus != self.q_plus {
            return Err(GeneratorError::InvalidParameter(
                "constant volume law needs q_minus == q_plus".into(),
            ));
        }
        match self.time_gap {
            TimeGap::Fixed(dt) if !(dt > 0.0) => Err(GeneratorError::InvalidParameter(format!(
                "time gap must be positive, got {dt}"
            ))),
            TimeGap::ExponentialRate(r) if !(r > 0.0) => Err(GeneratorError::InvalidParameter(
                format!("time-gap rate must be positive, got {r}"),
            )),
            _ => Ok(()),
        }
    }

    /// Draw the schedule (stream index 0 of the scenario seed).
    pub fn build_schedule(&self) -> Result<OrderSchedule, GeneratorError> {
        self.validate()?;
        let mut rng = stream(self.seed, 0);
        let volumes: Vec<f64> = match self.volume_law {
            VolumeLaw::Constant => vec![self.q_minus; self.n],
            VolumeLaw::Uniform => (0..self.n)
                .map(|_| rng.random_range(self.q_minus..=self.q_plus))
                .collect(),
        };
        let mut t = 0.0;
        let times: Vec<f64> = match self.time_gap {
            TimeGap::Fixed(dt) => (0..self.n)
                .map(|_| {
                    let cur = t;
                    t += dt;
                    cur
                })
                .collect(),
            TimeGap::ExponentialRate(rate) => {
                let exp = Exp::new(rate).expect("rate validated above");
                (0..self.n)
                    .map(|_| {
                        t += exp.sample(&mut rng);
                        t
                    })
                    .collect()
            }
        };
        Ok(OrderSchedule::new(
            self.side,
            self.start_price,
            volumes,
            times,
            self.q_minus,
            self.q_plus,
        )?)
    }
}

/// Two-regime switching spec for the oscillating construction.
#[derive(Debug, Clone, Copy)]
pub struct NonEqSpec {
    /// Index of the first liquidity-provider group (`rho1 < rho2`).
    pub rho1: f64,
    /// Index of the second group.
    pub rho2: f64,
    /// First block boundary.
    pub n0: usize,
    /// Geometric boundary growth: `n_{j+1} = ceil(g * n_j)`, `g > 1`.
    pub growth: f64,
}

impl NonEqSpec {
    pub fn new(rho1: f64, rho2: f64, n0: usize, growth: f64) -> Result<Self, GeneratorError> {
        if !(rho1 >= 0.0 && rho2 >= rho1) {
            return Err(GeneratorError::InvalidParameter(format!(
                "need 0 <= rho1 <= rho2, got ({rho1}, {rho2})"
            )));
        }
        if n0 == 0 || !(growth > 1.0) {
            return Err(GeneratorError::InvalidParameter(format!(
                "need n0 >= 1 and growth > 1, got ({n0}, {growth})"
            )));
        }
        Ok(Self {
            rho1,
            rho2,
            n0,
            growth,
        })
    }

    /// Defaults that let the friction traverse both regime limits within
    /// the last two decades of a 10^6-step path.
    pub fn defaults(rho1: f64, rho2: f64) -> Result<Self, GeneratorError> {
        Self::new(rho1, rho2, 10, 8.0)
    }
}

/// Generate an equilibrium scenario: schedule drawn from the spec, impacts
/// evaluated through the kernel. Deterministic given the seed.
pub fn gen_equilibrium(
    spec: &ScenarioSpec,
    kernel: &ImpactKernel,
) -> Result<(OrderSchedule, ImpactPath), GeneratorError> {
    let schedule = spec.build_schedule()?;
    let path = impact_path(&schedule, kernel)?;
    Ok((schedule, path))
}

/// Generate an oscillating scenario.
///
/// Impacts are built multiplicatively as `I_n = I_{n-1} / (1 - c_n)` with
/// `c_n = rho(n) Q_n / S_n`, where `rho(n)` alternates between `rho1` and
/// `rho2` on geometrically growing blocks. `c_n` is clamped to 1/2 at the
/// few early indices where it would otherwise reach it, which keeps the
/// construction positive without touching the asymptotics. Both factors of
/// `S_n I_n / (S_{n-1} I_{n-1})` are >= 1, so `S_n I_n` is non-decreasing
/// by construction and the limit points of the friction fill the whole
/// interval `[1/(1+rho2), 1/(1+rho1)]`.
pub fn gen_nonequilibrium(
    spec: &ScenarioSpec,
    neq: &NonEqSpec,
) -> Result<(OrderSchedule, ImpactPath), GeneratorError> {
    NonEqSpec::new(neq.rho1, neq.rho2, neq.n0, neq.growth)?;
    let schedule = spec.build_schedule()?;
    let mut impacts = Vec::with_capacity(schedule.len());
    let mut s = 0.0;
    let mut impact = 1.0;
    let mut boundary = neq.n0 as u64;
    let mut block = 0u64;
    for (k, &q) in schedule.volumes().iter().enumerate() {
        let n = (k + 1) as u64;
        s += q;
        while n >= boundary {
            block += 1;
            boundary = ((neq.growth * boundary as f64).ceil() as u64).max(boundary + 1);
        }
        let rho_n = if block % 2 == 1 { neq.rho1 } else { neq.rho2 };
        let c = (rho_n * q / s).min(0.5);
        if k > 0 {
            impact /= 1.0 - c;
        }
        impacts.push(impact);
    }
    let path = ImpactPath::from_impacts(schedule.volumes(), impacts)?;
    Ok((schedule, path))
}

/// Generate market volumes for a schedule so the running participation
/// `S_n / (V_1 + ... + V_n)` converges to `participation`.
///
/// The filling rule is `V_k = Q_k / participation`, optionally multiplied by
/// unit-mean lognormal noise (`sigma_log = 0` keeps it deterministic), and
/// floored at `Q_k` so market volume always covers the child order.
pub fn gen_volumes(
    schedule: &OrderSchedule,
    participation: f64,
    sigma_log: f64,
    seed: u64,
) -> Result<MarketVolumes, GeneratorError> {
    if !(participation > 0.0 && participation <= 1.0) {
        return Err(GeneratorError::InvalidParameter(format!(
            "participation must lie in (0, 1], got {participation}"
        )));
    }
    if !(sigma_log >= 0.0) {
        return Err(GeneratorError::InvalidParameter(format!(
            "volume noise must be >= 0, got {sigma_log}"
        )));
    }
    let volumes: Vec<f64> = if sigma_log == 0.0 {
        schedule
            .volumes()
            .iter()
            .map(|&q| (q / participation).max(q))
            .collect()
    } else {
        let mut rng = stream(seed, 1);
        // mu = -sigma^2/2 gives unit mean, so the ratio stays unbiased.
        let noise = LogNormal::new(-0.5 * sigma_log * sigma_log, sigma_log)
            .map_err(|e| GeneratorError::InvalidParameter(e.to_string()))?;
        schedule
            .volumes()
            .iter()
            .map(|&q| (q / participation * noise.sample(&mut rng)).max(q))
            .collect()
    };
    Ok(MarketVolumes::new(schedule, volumes, participation)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reproducible_given_seed() {
        let spec = ScenarioSpec::uniform(500, 42);
        let k = ImpactKernel::power(0.5);
        let (s1, p1) = gen_equilibrium(&spec, &k).unwrap();
        let (s2, p2) = gen_equilibrium(&spec, &k).unwrap();
        assert_eq!(s1.volumes(), s2.volumes());
        assert_eq!(p1.impacts(), p2.impacts());
        let other = ScenarioSpec::uniform(500, 43);
        let (s3, _) = gen_equilibrium(&other, &k).unwrap();
        assert_ne!(s1.volumes(), s3.volumes());
    }

    #[test]
    fn constant_linear_friction_value() {
        // n = 100, Q == 1, f(x) = x: R_100 = (sum k)/(100*100) = 0.505
        let spec = ScenarioSpec::constant(100, 7);
        let (_, path) = gen_equilibrium(&spec, &ImpactKernel::power(1.0)).unwrap();
        assert_relative_eq!(path.final_friction(), 0.505, max_relative = 1e-14);
    }

    #[test]
    fn single_order_friction_is_one() {
        let spec = ScenarioSpec::uniform(1, 3);
        let (_, path) = gen_equilibrium(&spec, &ImpactKernel::power(0.8)).unwrap();
        assert_relative_eq!(path.final_friction(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn sqrt_kernel_friction_converges() {
        let spec = ScenarioSpec::uniform(10_000, 11);
        let (_, path) = gen_equilibrium(&spec, &ImpactKernel::power(0.5)).unwrap();
        assert!(
            (path.final_friction() - 2.0 / 3.0).abs() <= 5e-3,
            "R_n = {}",
            path.final_friction()
        );
    }

    #[test]
    fn nonequilibrium_hypothesis_holds_exactly() {
        let spec = ScenarioSpec::uniform(50_000, 5);
        let neq = NonEqSpec::defaults(0.5, 2.0).unwrap();
        let (_, path) = gen_nonequilibrium(&spec, &neq).unwrap();
        let s = path.cumulative_sizes();
        let i = path.impacts();
        for k in 1..path.len() {
            assert!(
                s[k] * i[k] >= s[k - 1] * i[k - 1],
                "S_n I_n decreased at {k}"
            );
        }
    }

    #[test]
    fn degenerate_regimes_converge_to_single_limit() {
        let spec = ScenarioSpec::uniform(50_000, 9);
        let neq = NonEqSpec::new(0.5, 0.5, 10, 8.0).unwrap();
        let (_, path) = gen_nonequilibrium(&spec, &neq).unwrap();
        assert!(
            (path.final_friction() - 2.0 / 3.0).abs() < 5e-3,
            "R = {}",
            path.final_friction()
        );
    }

    #[test]
    fn full_participation_copies_volumes() {
        let spec = ScenarioSpec::uniform(100, 21);
        let schedule = spec.build_schedule().unwrap();
        let vols = gen_volumes(&schedule, 1.0, 0.0, 21).unwrap();
        assert_eq!(vols.volumes(), schedule.volumes());
    }

    #[test]
    fn deterministic_filling_rule() {
        let spec = ScenarioSpec::constant(10, 1);
        let schedule = spec.build_schedule().unwrap();
        let vols = gen_volumes(&schedule, 0.5, 0.0, 1).unwrap();
        for &v in vols.volumes() {
            assert_relative_eq!(v, 2.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn running_participation_converges() {
        let spec = ScenarioSpec::uniform(10_000, 77);
        let schedule = spec.build_schedule().unwrap();
        let vols = gen_volumes(&schedule, 0.1, 0.1, 77).unwrap();
        let s: f64 = schedule.volumes().iter().sum();
        let v: f64 = vols.volumes().iter().sum();
        assert!((s / v - 0.1).abs() < 1e-3, "running ratio = {}", s / v);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = ScenarioSpec::uniform(0, 1);
        assert!(spec.build_schedule().is_err());
        spec = ScenarioSpec::uniform(10, 1);
        spec.q_minus = 2.0;
        spec.q_plus = 1.0;
        assert!(spec.build_schedule().is_err());
        assert!(NonEqSpec::new(2.0, 0.5, 10, 8.0).is_err());
        assert!(NonEqSpec::new(0.5, 2.0, 0, 8.0).is_err());
        assert!(NonEqSpec::new(0.5, 2.0, 10, 1.0).is_err());
        let schedule = ScenarioSpec::uniform(10, 1).build_schedule().unwrap();
        assert!(gen_volumes(&schedule, 0.0, 0.0, 1).is_err());
        assert!(gen_volumes(&schedule, 1.5, 0.0, 1).is_err());
    }
}
