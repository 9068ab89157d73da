use proptest::prelude::*;
use recurlab::linalg::{haar_unitary, ComplexMatrix, UnitaryMatrix, C64};
use recurlab::recurrence::{mixture_probability, overlap_profile};
use recurlab::statevector::{
    apply_gate, born_probability, controlled_power, recurrence_circuit, run_circuit, GateOp,
    QubitState, RegisterLayout,
};

/// `(1/2^j) Σ_k |⟨0|U^k|0⟩|²` by repeated matrix-vector products.
fn mixture_oracle(u: &UnitaryMatrix, j: usize) -> f64 {
    let mut v = vec![C64::new(0.0, 0.0); u.dim()];
    v[0] = C64::new(1.0, 0.0);
    let mut total = 0.0;
    for _ in 0..1usize << j {
        total += v[0].norm_sqr();
        v = u.matrix().matvec(&v).unwrap();
    }
    total / (1u64 << j) as f64
}

/// Dense `|0⟩⟨0| ⊗ 1 + |1⟩⟨1| ⊗ M` with the control as the leading qubit of
/// `1 + log2 dim` qubits.
fn controlled_dense(m: &ComplexMatrix) -> ComplexMatrix {
    let d = m.rows();
    ComplexMatrix::from_fn(2 * d, 2 * d, |r, c| match (r / d, c / d) {
        (0, 0) if r == c => C64::new(1.0, 0.0),
        (1, 1) => m[(r - d, c - d)],
        _ => C64::new(0.0, 0.0),
    })
}

fn state_norm(s: &QubitState) -> f64 {
    s.amplitudes()
        .iter()
        .map(|a| a.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gates_preserve_norm(nq in 2usize..=6, k in 1usize..=2, seed in any::<u64>()) {
        let state = QubitState::random(nq, seed).unwrap();
        let targets: Vec<usize> = (0..k).map(|i| (seed as usize + 2 * i) % nq).collect();
        prop_assume!(targets.iter().collect::<std::collections::BTreeSet<_>>().len() == k);
        let gate = GateOp::new(haar_unitary(1 << k, seed ^ 7).unwrap(), targets.clone(), vec![]).unwrap();
        let out = apply_gate(&state, &gate).unwrap();
        prop_assert!((state_norm(&out) - 1.0).abs() <= 1e-10);
        let free: Vec<usize> = (0..nq).filter(|q| !targets.contains(q)).collect();
        if let Some(&c) = free.first() {
            let out = apply_gate(&state, &gate.with_controls(vec![c]).unwrap()).unwrap();
            prop_assert!((state_norm(&out) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn circuit_equals_mixture(n in 1usize..=4, j in 1usize..=4, seed in any::<u64>()) {
        let u = haar_unitary(1 << n, seed).unwrap();
        let layout = RegisterLayout::new(j, n).unwrap();
        let out = run_circuit(&recurrence_circuit(&u, layout).unwrap(), &QubitState::zero(j + n).unwrap()).unwrap();
        let p_circuit = born_probability(&out, &layout.state_register(), &vec![false; n]).unwrap();
        let oracle = mixture_oracle(&u, j);
        prop_assert!((p_circuit - oracle).abs() <= 1e-10, "{} vs {}", p_circuit, oracle);
        let p_formula = mixture_probability(&overlap_profile(&u, 0).unwrap(), j).with_k_zero;
        prop_assert!((p_formula - oracle).abs() <= 1e-10);
    }

    #[test]
    fn controlled_power_matches_repeated_products(n in 1usize..=4, i in 0u32..=6, seed in any::<u64>()) {
        let u = haar_unitary(1 << n, seed).unwrap();
        let mut brute = ComplexMatrix::identity(1 << n);
        for _ in 0..1u64 << i {
            brute = brute.matmul(u.matrix()).unwrap();
        }
        let targets: Vec<usize> = (1..=n).collect();
        let gate = controlled_power(&u, i, 0, &targets).unwrap();
        let psi = QubitState::random(n + 1, seed ^ 0x55).unwrap();
        let got = apply_gate(&psi, &gate).unwrap();
        let want = controlled_dense(&brute).matvec(psi.amplitudes()).unwrap();
        let err = got.amplitudes().iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        prop_assert!(err <= 1e-9, "error {}", err);
    }
}
