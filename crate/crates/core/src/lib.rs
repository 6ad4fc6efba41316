// Validation sites use `!(x > 0.0)` on purpose: the negation also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Simulation and estimation toolkit for the market impact of metaorders.
//!
//! The model: a metaorder is executed as `n` child orders of volumes `Q_k`.
//! The peak impact after the n-th child is `I_n = f(S_n)` where
//! `S_n = Q_1 + ... + Q_n` and `f` is a regularly varying impact kernel in
//! Karamata form `f(x) = x^rho * exp(eta(x) + int theta(u)/u du)`. The
//! friction `R_n = <I>_n / I_n` (average impact over peak impact) converges
//! to `1/(1 + rho)` in equilibrium; `rho = 1/2` is the square-root law.
//!
//! Modules:
//! - [`kernel`]: impact kernels and their evaluation
//! - [`schedule`]: metaorder schedules and market volumes
//! - [`path`]: impact paths (impacts, average impacts, friction, increments)
//! - [`generator`]: seeded scenario generation (equilibrium and sawtooth)
//! - [`friction`]: friction analysis and the three `rho` estimators
//! - [`averaging`]: the law of the random index `rho` and the averaged
//!   impact function `psi(x) = E[x^rho]`
//! - [`sizes`]: heavy-tailed metaorder length/size laws and moment checks
//! - [`relaxation`]: post-execution decay, fair pricing point and residuals
//! - [`oracle`]: independent brute-force reference computations
//! - [`quad`], [`special`]: numerical support (adaptive Simpson, Ei)

pub mod averaging;
pub mod friction;
pub mod generator;
pub mod kernel;
pub mod oracle;
pub mod path;
pub mod quad;
pub mod relaxation;
pub mod rng;
pub mod schedule;
pub mod sizes;
pub mod special;

pub use kernel::{EtaSpec, ImpactKernel, KernelError, ThetaSpec};
pub use path::{impact_path, incremental_impacts, ImpactPath, PathError};
pub use schedule::{MarketVolumes, OrderSchedule, ScheduleError, Side};
