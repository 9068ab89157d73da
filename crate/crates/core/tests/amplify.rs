use proptest::prelude::*;
use recurlab::amplify::{
    amplified_recurrence, grover_step, iterations_to_reach, AmplifierSetup, DetectionEvent,
};
use recurlab::linalg::C64;
use recurlab::statevector::{QubitState, RegisterLayout};

fn layout() -> RegisterLayout {
    RegisterLayout::new(3, 2).unwrap()
}

/// Smallest `m` whose simulated target weight `|⟨Θ|Q^mΨ⟩|²` reaches `level`.
fn simulated_iterations(setup: &AmplifierSetup, level: f64) -> u64 {
    let mut state = setup.psi().clone();
    for m in 0..10_000 {
        if setup.target().inner(&state).unwrap().norm_sqr() >= level {
            return m;
        }
        state = grover_step(setup, &state).unwrap();
    }
    panic!("level {level} not reached");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grover_step_preserves_inner_products(s in 0.01f64..0.99, seed in any::<u64>()) {
        let setup = AmplifierSetup::synthetic(layout(), s, seed).unwrap();
        let a = QubitState::random(5, seed ^ 1).unwrap();
        let b = QubitState::random(5, seed ^ 2).unwrap();
        let before = a.inner(&b).unwrap();
        let after = grover_step(&setup, &a).unwrap().inner(&grover_step(&setup, &b).unwrap()).unwrap();
        prop_assert!((before - after).norm() <= 1e-12);
    }

    #[test]
    fn iterates_stay_in_the_two_plane(s in 0.01f64..0.5, m in 0u64..=30, seed in any::<u64>()) {
        let setup = AmplifierSetup::synthetic(layout(), s, seed).unwrap();
        let theta = setup.theta();
        prop_assert!((theta.sin() - s).abs() <= 1e-12);
        // Ψ = sinθ·Θ + cosθ·χ, so Q^mΨ = sin((2m+1)θ)·Θ + cos((2m+1)θ)·χ
        let (t, p) = (setup.target().amplitudes(), setup.psi().amplitudes());
        let chi: Vec<C64> = p.iter().zip(t).map(|(x, y)| (x - y * theta.sin()) / theta.cos()).collect();
        let angle = (2 * m + 1) as f64 * theta;
        let got = setup.iterate(m).unwrap();
        let err = got
            .amplitudes()
            .iter()
            .zip(t.iter().zip(&chi))
            .map(|(g, (a, c))| (g - (a * angle.sin() + c * angle.cos())).norm())
            .fold(0.0f64, f64::max);
        prop_assert!(err <= 1e-9, "state error {}", err);
        let overlap = setup.target().inner(&got).unwrap();
        prop_assert!((overlap.re - angle.sin()).abs() <= 1e-9 && overlap.im.abs() <= 1e-9);
    }
}

#[test]
fn halving_the_overlap_doubles_the_iterations() {
    let counts: Vec<u64> = [0.2, 0.1, 0.05, 0.025]
        .iter()
        .map(|&eps| {
            let setup = AmplifierSetup::synthetic(layout(), eps, 4).unwrap();
            let m = simulated_iterations(&setup, 0.5);
            assert_eq!(Some(m), iterations_to_reach(setup.theta(), 0.5, 10_000));
            m
        })
        .collect();
    for w in counts.windows(2) {
        let ratio = w[1] as f64 / w[0] as f64;
        assert!((ratio - 2.0).abs() <= 0.15 * 2.0, "{counts:?}");
    }
}

#[test]
fn sampled_detection_agrees_with_closed_form() {
    let setup = AmplifierSetup::synthetic(layout(), 0.1, 8).unwrap();
    for m in [0u64, 1, 3, 7] {
        let exact = setup
            .exact_detection(m, DetectionEvent::TargetProjection)
            .unwrap();
        let est =
            amplified_recurrence(&setup, m, 20_000, 100 + m, DetectionEvent::TargetProjection)
                .unwrap();
        let sd = (exact * (1.0 - exact) / 20_000.0).sqrt().max(1e-4);
        assert!(
            (est.probability - exact).abs() <= 4.0 * sd,
            "m = {m}: {} vs {exact}",
            est.probability
        );
    }
}

#[test]
fn state_register_event_matches_simulated_weight() {
    let setup = AmplifierSetup::synthetic(layout(), 0.3, 2).unwrap();
    let state = setup.iterate(2).unwrap();
    // state register is the trailing 2 qubits
    let direct: f64 = state
        .amplitudes()
        .iter()
        .step_by(4)
        .map(|a| a.norm_sqr())
        .sum();
    let exact = setup
        .exact_detection(2, DetectionEvent::StateRegisterZero)
        .unwrap();
    assert!((direct - exact).abs() <= 1e-12);
}
