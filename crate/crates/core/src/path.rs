//! Impact paths: peak impacts, average impacts, friction and increments.
//!
//! For a schedule with cumulative sizes `S_n` and a kernel `f`:
//! `I_n = f(S_n)`, `<I>_n = sum_k Q_k I_k / S_n`, `R_n = <I>_n / I_n`,
//! `delta_n = I_n - I_{n-1}` with `I_0 = 0`.

use crate::kernel::{ImpactKernel, KernelError};
use crate::schedule::OrderSchedule;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("impact positivity violated at step {index}: I = {value}")]
    Positivity { index: usize, value: f64 },
    #[error("impact path inputs are inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// The per-step quantities of one metaorder trajectory.
#[derive(Debug, Clone)]
pub struct ImpactPath {
    cumulative_sizes: Vec<f64>,
    impacts: Vec<f64>,
    avg_impacts: Vec<f64>,
    friction: Vec<f64>,
    increments: Vec<f64>,
}

impl ImpactPath {
    /// Build a path from child volumes and raw per-step impacts.
    ///
    /// This is the single construction route: kernel-driven paths and
    /// synthetic ones (e.g. the sawtooth construction) both go through it.
    pub fn from_impacts(volumes: &[f64], impacts: Vec<f64>) -> Result<Self, PathError> {
        if volumes.is_empty() || volumes.len() != impacts.len() {
            return Err(PathError::Inconsistent(format!(
                "{} volumes vs {} impacts",
                volumes.len(),
                impacts.len()
            )));
        }
        let n = impacts.len();
        let mut cumulative_sizes = Vec::with_capacity(n);
        let mut avg_impacts = Vec::with_capacity(n);
        let mut friction = Vec::with_capacity(n);
        let mut increments = Vec::with_capacity(n);
        let mut s = 0.0;
        let mut weighted = 0.0;
        let mut prev = 0.0; // I_0 := 0
        for (k, (&q, &impact)) in volumes.iter().zip(&impacts).enumerate() {
            if !(impact > 0.0) || !impact.is_finite() {
                return Err(PathError::Positivity {
                    index: k + 1,
                    value: impact,
                });
            }
            s += q;
            weighted += q * impact;
            let avg = weighted / s;
            cumulative_sizes.push(s);
            avg_impacts.push(avg);
            friction.push(avg / impact);
            increments.push(impact - prev);
            prev = impact;
        }
        Ok(Self {
            cumulative_sizes,
            impacts,
            avg_impacts,
            friction,
            increments,
        })
    }

    pub fn len(&self) -> usize {
        self.impacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impacts.is_empty()
    }

    /// `S_1..S_n`.
    pub fn cumulative_sizes(&self) -> &[f64] {
        &self.cumulative_sizes
    }

    /// `I_1..I_n`.
    pub fn impacts(&self) -> &[f64] {
        &self.impacts
    }

    /// `<I>_1..<I>_n`.
    pub fn avg_impacts(&self) -> &[f64] {
        &self.avg_impacts
    }

    /// `R_1..R_n`.
    pub fn friction(&self) -> &[f64] {
        &self.friction
    }

    /// `delta_1..delta_n`.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Child volume at 1-based step `n`, recovered from the cumulative sizes.
    pub fn volume_at(&self, n: usize) -> f64 {
        if n == 1 {
            self.cumulative_sizes[0]
        } else {
            self.cumulative_sizes[n - 1] - self.cumulative_sizes[n - 2]
        }
    }

    /// Final friction `R_n`.
    pub fn final_friction(&self) -> f64 {
        *self.friction.last().expect("paths are non-empty")
    }

    /// Final peak impact `I_n`.
    pub fn final_impact(&self) -> f64 {
        *self.impacts.last().expect("paths are non-empty")
    }

    /// Final average impact `<I>_n`.
    pub fn final_avg_impact(&self) -> f64 {
        *self.avg_impacts.last().expect("paths are non-empty")
    }

    /// Eventual-membership diagnostic for the VWAP constraint: the first
    /// 0-based index from which every friction value stays in `[0, 1]` (up
    /// to rounding slack), or `None` if the tail still escapes. This is a
    /// diagnostic, not a validity check: paths that escape are legal.
    pub fn unit_friction_from(&self) -> Option<usize> {
        let slack = 1e-12;
        let mut from = None;
        for (k, &r) in self.friction.iter().enumerate() {
            if (-slack..=1.0 + slack).contains(&r) {
                from.get_or_insert(k);
            } else {
                from = None;
            }
        }
        from
    }
}

/// Evaluate the kernel along the schedule: `I_n = f(S_n)`.
pub fn impact_path(
    schedule: &OrderSchedule,
    kernel: &ImpactKernel,
) -> Result<ImpactPath, PathError> {
    let mut impacts = Vec::with_capacity(schedule.len());
    let mut s = 0.0;
    for &q in schedule.volumes() {
        s += q;
        impacts.push(kernel.eval(s)?);
    }
    ImpactPath::from_impacts(schedule.volumes(), impacts)
}

/// Incremental impacts `delta_n = I_n - I_{n-1}` (`I_0 = 0`); partial sums
/// reproduce `I_n` exactly by telescoping.
pub fn incremental_impacts(path: &ImpactPath) -> &[f64] {
    path.increments()
}
