//! Metaorder schedules and the market volumes traded around them.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule must contain at least one child order")]
    Empty,
    #[error("child volume Q_{index} = {value} outside [{q_minus}, {q_plus}]")]
    VolumeOutOfRange {
        index: usize,
        value: f64,
        q_minus: f64,
        q_plus: f64,
    },
    #[error("execution times must be strictly increasing (violated at index {0})")]
    TimesNotIncreasing(usize),
    #[error("invalid schedule parameter: {0}")]
    InvalidParameter(String),
    #[error("market volume V_{index} = {v} smaller than child volume Q_{index} = {q}")]
    VolumeBelowChild { index: usize, v: f64, q: f64 },
}

/// Metaorder direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    /// The sign epsilon in {-1, +1}.
    pub fn sign(self) -> f64 {
        match self {
            Side::Buy => 1.0,
            Side::Sell => -1.0,
        }
    }
}

/// A metaorder: sign, pre-trade price, child volumes and execution times,
/// with the per-child volume bracket `[q_minus, q_plus]`.
#[derive(Debug, Clone)]
pub struct OrderSchedule {
    side: Side,
    start_price: f64,
    volumes: Vec<f64>,
    times: Vec<f64>,
    q_minus: f64,
    q_plus: f64,
}

impl OrderSchedule {
    pub fn new(
        side: Side,
        start_price: f64,
        volumes: Vec<f64>,
        times: Vec<f64>,
        q_minus: f64,
        q_plus: f64,
    ) -> Result<Self, ScheduleError> {
        if volumes.is_empty() {
            return Err(ScheduleError::Empty);
        }
        if volumes.len() != times.len() {
            return Err(ScheduleError::InvalidParameter(format!(
                "{} volumes vs {} times",
                volumes.len(),
                times.len()
            )));
        }
        if !(start_price > 0.0) {
            return Err(ScheduleError::InvalidParameter(format!(
                "start price must be positive, got {start_price}"
            )));
        }
        if !(q_minus > 0.0 && q_minus <= q_plus && q_plus.is_finite()) {
            return Err(ScheduleError::InvalidParameter(format!(
                "need 0 < q_minus <= q_plus < inf, got [{q_minus}, {q_plus}]"
            )));
        }
        for (i, &q) in volumes.iter().enumerate() {
            if !(q >= q_minus && q <= q_plus) {
                return Err(ScheduleError::VolumeOutOfRange {
                    index: i + 1,
                    value: q,
                    q_minus,
                    q_plus,
                });
            }
        }
        if times[0] < 0.0 {
            return Err(ScheduleError::TimesNotIncreasing(0));
        }
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                return Err(ScheduleError::TimesNotIncreasing(i));
            }
        }
        Ok(Self {
            side,
            start_price,
            volumes,
            times,
            q_minus,
            q_plus,
        })
    }

    /// Unit-volume schedule at unit time steps; the workhorse for tests.
    pub fn constant_unit(n: usize) -> Self {
        Self::new(
            Side::Buy,
            100.0,
            vec![1.0; n],
            (0..n).map(|k| k as f64).collect(),
            1.0,
            1.0,
        )
        .expect("constant schedule is valid for n >= 1")
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn start_price(&self) -> f64 {
        self.start_price
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn q_minus(&self) -> f64 {
        self.q_minus
    }

    pub fn q_plus(&self) -> f64 {
        self.q_plus
    }

    /// Cumulative sizes `S_n = Q_1 + ... + Q_n`.
    pub fn cumulative_sizes(&self) -> Vec<f64> {
        let mut s = 0.0;
        self.volumes
            .iter()
            .map(|q| {
                s += q;
                s
            })
            .collect()
    }
}

/// Per-step market volumes alongside a schedule, with the target
/// participation rate `Q/V` the running ratio converges to.
#[derive(Debug, Clone)]
pub struct MarketVolumes {
    volumes: Vec<f64>,
    participation: f64,
}

impl MarketVolumes {
    pub fn new(
        schedule: &OrderSchedule,
        volumes: Vec<f64>,
        participation: f64,
    ) -> Result<Self, ScheduleError> {
        if !(participation > 0.0 && participation <= 1.0) {
            return Err(ScheduleError::InvalidParameter(format!(
                "participation must lie in (0, 1], got {participation}"
            )));
        }
        if volumes.len() != schedule.len() {
            return Err(ScheduleError::InvalidParameter(format!(
                "{} market volumes vs {} child orders",
                volumes.len(),
                schedule.len()
            )));
        }
        for (i, (&v, &q)) in volumes.iter().zip(schedule.volumes()).enumerate() {
            if v < q {
                return Err(ScheduleError::VolumeBelowChild { index: i + 1, v, q });
            }
        }
        Ok(Self {
            volumes,
            participation,
        })
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn participation(&self) -> f64 {
        self.participation
    }

    /// Cumulative market volume `V_1 + ... + V_n`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut s = 0.0;
        self.volumes
            .iter()
            .map(|v| {
                s += v;
                s
            })
            .collect()
    }
}
