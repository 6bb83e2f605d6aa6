use ddsim::ensemble::evolve_once;
use ddsim::pulse::{error_cdf, error_inverse_cdf, free_evolution, pulse_unitary, PhysicalPulse};
use ddsim::sequence::{build, udd_times, PulseSequence};
use ddsim::spin::{compose, max_abs_diff, rotation, BlochState};
use ddsim::{Axis, Protocol, PulseErrorSample, Unitary2};
use num_complex::Complex64;
use proptest::prelude::*;

fn unit_axis() -> impl Strategy<Value = [f64; 3]> {
    (0.0..std::f64::consts::PI, 0.0..2.0 * std::f64::consts::PI).prop_map(|(theta, phi)| {
        [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
    })
}

fn unitary() -> impl Strategy<Value = Unitary2> {
    (unit_axis(), -10.0..10.0f64, 0.0..6.3f64).prop_map(|(axis, angle, phase)| {
        rotation(axis, angle).unwrap().scale(Complex64::from_polar(1.0, phase))
    })
}

fn small_sample() -> impl Strategy<Value = PulseErrorSample> {
    (-0.6..0.3f64, -0.6..0.3f64, -0.3..0.3f64, -0.3..0.3f64, -0.1..0.1f64, -0.1..0.1f64).prop_map(
        |(eps_x, eps_y, n_z, m_z, n_y, m_x)| PulseErrorSample {
            eps_x,
            eps_y,
            n_z,
            m_z,
            n_y,
            m_x,
        },
    )
}

fn protocol() -> impl Strategy<Value = Protocol> {
    prop_oneof![Just(Protocol::Udd), Just(Protocol::Qdd), Just(Protocol::QddZy)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn long_chains_stay_unitary(ops in prop::collection::vec(unitary(), 1..50), reps in 1usize..200) {
        // up to 10^4 factors
        let chain: Vec<Unitary2> = ops.iter().cycle().take(ops.len() * reps).copied().collect();
        let u = compose(&chain).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-10, "defect {}", u.unitarity_defect());
    }

    #[test]
    fn composition_is_associative(a in unitary(), b in unitary(), c in unitary()) {
        let left = compose(&[compose(&[a, b]).unwrap(), c]).unwrap();
        let right = compose(&[a, compose(&[b, c]).unwrap()]).unwrap();
        prop_assert!(max_abs_diff(left.matrix(), right.matrix()) < 1e-12);
    }

    #[test]
    fn global_phase_does_not_change_fidelities(u in unitary(), phase in 0.0..6.3f64) {
        let v = u.scale(Complex64::from_polar(1.0, phase));
        let (fu, fv) = (u.axis_fidelities(), v.axis_fidelities());
        for k in 0..3 {
            prop_assert!((fu[k] - fv[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn bloch_evolution_preserves_length(u in unitary(), axis in unit_axis()) {
        let out = BlochState::new(axis).unwrap().evolve(&u);
        let norm: f64 = out.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelities_are_bounded(u in unitary()) {
        for f in u.axis_fidelities() {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&f));
        }
    }

    #[test]
    fn delays_sum_to_total_time(p in protocol(), level in 1u32..=8, t in 0.0..500.0f64) {
        let seq = build(p, level, t).unwrap();
        prop_assert!((seq.delay_sum() - t).abs() <= 1e-12 * t.max(1.0));
        prop_assert!(seq.delays().all(|d| d >= 0.0));
        prop_assert_eq!(seq.pulse_count(), p.pulse_count(level));
    }

    #[test]
    fn udd_times_are_ordered_and_mirror_symmetric(level in 1u32..=30, t in 0.1..100.0f64) {
        let times = udd_times(level, t).unwrap();
        prop_assert!(times.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(times[0] > 0.0 && *times.last().unwrap() <= t);
        // t_j + t_{l+1-j} = t over the first l times, for either parity
        let n = level as usize;
        for j in 0..n {
            prop_assert!((times[j] + times[n - 1 - j] - t).abs() < 1e-9 * t);
        }
    }

    #[test]
    fn text_format_round_trips(p in protocol(), level in 1u32..=6, t in 0.0..100.0f64) {
        let seq = build(p, level, t).unwrap();
        prop_assert_eq!(PulseSequence::parse_text(&seq.to_text()).unwrap(), seq);
    }

    #[test]
    fn inverse_cdf_is_monotone(p in 0.0..1.0f64, q in 0.0..1.0f64, scale in 0.01..1.0f64) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let (a, b) = (error_inverse_cdf(lo, scale).unwrap(), error_inverse_cdf(hi, scale).unwrap());
        prop_assert!(a <= b);
        prop_assert!((-2.0 * scale..=scale).contains(&a));
    }

    #[test]
    fn cdf_inverts_inverse_cdf(p in 0.0..1.0f64, scale in 0.01..1.0f64) {
        let e = error_inverse_cdf(p, scale).unwrap();
        prop_assert!((error_cdf(e, scale).unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn pulses_are_unitary_with_unit_determinant(s in small_sample()) {
        for nominal in [PhysicalPulse::X, PhysicalPulse::Y] {
            let u = pulse_unitary(nominal, &s).unwrap();
            prop_assert!(u.unitarity_defect() < 1e-14);
            prop_assert!((u.det() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn free_evolutions_add(field in -5.0..5.0f64, a in 0.0..10.0f64, b in 0.0..10.0f64) {
        let sum = compose(&[free_evolution(field, a).unwrap(), free_evolution(field, b).unwrap()]).unwrap();
        prop_assert!(max_abs_diff(sum.matrix(), free_evolution(field, a + b).unwrap().matrix()) < 1e-12);
    }

    #[test]
    fn sequence_evolution_is_unitary(p in protocol(), level in 1u32..=6, t in 0.0..50.0f64,
                                     field in -3.0..3.0f64, s in small_sample()) {
        let u = evolve_once(&build(p, level, t).unwrap(), field, &s).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-12);
        let f = u.axis_fidelities();
        prop_assert!(f.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn perfect_pulses_refocus_every_protocol(p in protocol(), level in 1u32..=6, t in 0.0..80.0f64,
                                             field in -4.0..4.0f64) {
        let u = evolve_once(&build(p, level, t).unwrap(), field, &PulseErrorSample::perfect()).unwrap();
        for axis in Axis::ALL {
            prop_assert!((u.axis_fidelities()[axis.index()] - 1.0).abs() < 1e-9);
        }
    }
}
