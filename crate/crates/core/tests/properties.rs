//! Property tests over randomized schedules, kernels and laws.

use impactlab_core::averaging::RhoLaw;
use impactlab_core::kernel::{EtaSpec, ImpactKernel, ThetaSpec};
use impactlab_core::oracle::brute_force_z;
use impactlab_core::path::{impact_path, ImpactPath};
use impactlab_core::relaxation::{DecayFamily, RelaxationProfile};
use impactlab_core::schedule::{OrderSchedule, Side};
use proptest::prelude::*;

fn arb_schedule() -> impl Strategy<Value = OrderSchedule> {
    (2usize..200, 0.1f64..2.0, 1.0f64..4.0).prop_flat_map(|(n, q_minus, spread)| {
        let q_plus = q_minus * spread;
        prop::collection::vec(q_minus..=q_plus, n).prop_map(move |volumes| {
            let times = (0..volumes.len()).map(|k| k as f64).collect();
            OrderSchedule::new(Side::Buy, 50.0, volumes, times, q_minus, q_plus).unwrap()
        })
    })
}

fn arb_kernel() -> impl Strategy<Value = ImpactKernel> {
    (0.0f64..2.5, -1.0f64..1.0, -0.2f64..0.2, 0.5f64..2.0).prop_map(|(rho, kappa, b, p)| {
        let theta = if b == 0.0 {
            ThetaSpec::Zero
        } else {
            ThetaSpec::LogDecay { b, p }
        };
        ImpactKernel::new(rho, EtaSpec::Constant(kappa), theta, 1.0).unwrap()
    })
}

proptest! {
    /// <I>_n S_n == sum Q_k I_k and telescoping increments, on any
    /// kernel-driven path.
    #[test]
    fn path_identities(schedule in arb_schedule(), kernel in arb_kernel()) {
        let path = impact_path(&schedule, &kernel).unwrap();
        let mut weighted = 0.0;
        let mut tele = 0.0;
        for k in 0..path.len() {
            weighted += schedule.volumes()[k] * path.impacts()[k];
            let lhs = path.avg_impacts()[k] * path.cumulative_sizes()[k];
            prop_assert!((lhs - weighted).abs() <= 1e-12 * weighted.abs());
            tele += path.increments()[k];
            prop_assert!((tele - path.impacts()[k]).abs() <= 1e-9 * path.impacts()[k].abs());
        }
        // R_n = <I>_n / I_n wherever defined; R_1 = 1
        prop_assert!((path.friction()[0] - 1.0).abs() < 1e-14);
    }

    /// The production friction equals the brute-force oracle on (Q, I).
    #[test]
    fn friction_equals_oracle(schedule in arb_schedule(), kernel in arb_kernel()) {
        let path = impact_path(&schedule, &kernel).unwrap();
        let z = brute_force_z(schedule.volumes(), path.impacts());
        for (r, zi) in path.friction().iter().zip(&z) {
            prop_assert!((r - zi).abs() <= 1e-12 * zi.abs());
        }
    }

    /// Friction of a kernel-driven path stays in (0, 1] up to rounding:
    /// impacts are increasing for rho >= 0 kernels with small perturbations.
    #[test]
    fn friction_bounded(schedule in arb_schedule(), rho in 0.0f64..2.5) {
        let path = impact_path(&schedule, &ImpactKernel::power(rho)).unwrap();
        for &r in path.friction() {
            prop_assert!(r > 0.0 && r <= 1.0 + 1e-12);
        }
    }

    /// psi stays in (0, 1], is non-decreasing in x, and psi(1) = 1.
    #[test]
    fn psi_shape(
        law in prop_oneof![
            (0.0f64..3.0).prop_map(RhoLaw::Dirac),
            Just(RhoLaw::Uniform01),
            (0.1f64..4.0).prop_map(RhoLaw::Exponential),
            prop::collection::vec(0.0f64..3.0, 1..12).prop_map(RhoLaw::Empirical),
        ],
        xs in prop::collection::vec(0.001f64..=1.0, 2..20),
    ) {
        let mut xs = xs;
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut prev = 0.0;
        for &x in &xs {
            let v = law.psi(x).unwrap();
            prop_assert!(v > 0.0 && v <= 1.0 + 1e-12);
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
        prop_assert!((law.psi(1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    /// G is decreasing with the documented endpoints, and inverse(eval(t))
    /// round-trips.
    #[test]
    fn relaxation_round_trip(
        alpha in 0.0f64..=0.5,
        tau in 0.05f64..10.0,
        power in prop::bool::ANY,
        p in 0.2f64..3.0,
        t in 0.0f64..50.0,
    ) {
        let family = if power {
            DecayFamily::Power { t0: tau, p }
        } else {
            DecayFamily::Exponential { tau }
        };
        let profile = RelaxationProfile::new(alpha, family).unwrap();
        prop_assert!((profile.eval(0.0) - 1.0).abs() < 1e-14);
        // G > alpha mathematically; equality can appear once G0 underflows
        let g = profile.eval(t);
        prop_assert!(g >= alpha && g <= 1.0);
        if g > alpha + 1e-12 {
            let back = profile.inverse(g).unwrap();
            // compare through G rather than t: the flat tail makes t itself
            // ill-conditioned
            prop_assert!((profile.eval(back) - g).abs() <= 1e-9);
        }
    }

    /// Synthetic positive impact sequences always produce valid paths with
    /// exact telescoping, whatever their shape.
    #[test]
    fn from_impacts_total_is_telescoped(
        impacts in prop::collection::vec(0.01f64..100.0, 1..100),
    ) {
        let volumes = vec![1.0; impacts.len()];
        let path = ImpactPath::from_impacts(&volumes, impacts.clone()).unwrap();
        let sum: f64 = path.increments().iter().sum();
        let last = *impacts.last().unwrap();
        prop_assert!((sum - last).abs() <= 1e-9 * last.abs().max(1.0));
    }
}
