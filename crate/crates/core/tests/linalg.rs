use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recurlab::linalg::{eigendecompose_unitary, haar_unitary, kron, svd, ComplexMatrix, C64};

fn random_complex(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..rows * cols)
        .map(|_| C64::new(g.random::<f64>() - 0.5, g.random::<f64>() - 0.5))
        .collect();
    ComplexMatrix::new(rows, cols, entries).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn haar_samples_are_unitary(dim in 1usize..=32, seed in any::<u64>()) {
        let u = haar_unitary(dim, seed).unwrap();
        prop_assert!(u.matrix().unitarity_defect() <= 1e-10 * dim as f64);
    }

    #[test]
    fn kron_singular_values_are_pairwise_products(seed in any::<u64>()) {
        let a = random_complex(2, 2, seed);
        let b = random_complex(3, 3, seed ^ 0x9e37);
        let sa = svd(&a).unwrap().singulars;
        let sb = svd(&b).unwrap().singulars;
        let mut expected: Vec<f64> = sa.iter().flat_map(|x| sb.iter().map(move |y| x * y)).collect();
        expected.sort_by(|x, y| y.total_cmp(x));
        let got = svd(&kron(&[a, b]).unwrap()).unwrap().singulars;
        for (g, e) in got.iter().zip(&expected) {
            prop_assert!((g - e).abs() <= 1e-9);
        }
    }
}

#[test]
fn eigendecomposition_reconstructs_a_thousand_unitaries() {
    for i in 0..1000u64 {
        let dim = 1 + (i as usize % 32);
        let u = haar_unitary(dim, i).unwrap();
        let eig = eigendecompose_unitary(&u).unwrap();
        let err = eig.reconstruct().max_abs_diff(u.matrix());
        assert!(err <= 1e-9 * dim as f64, "dim {dim} seed {i}: {err}");
        assert!(eig
            .eigenvalues
            .iter()
            .all(|l| (l.norm() - 1.0).abs() < 1e-9));
    }
}

#[test]
fn haar_diagonal_entry_matches_beta_moments() {
    let n = 16.0;
    let samples = 10_000u64;
    let xs: Vec<f64> = (0..samples)
        .map(|s| haar_unitary(16, 1_000_000 + s).unwrap()[(0, 0)].norm_sqr())
        .collect();
    let m = samples as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let second = xs.iter().map(|x| x * x).sum::<f64>() / m;
    // Beta(1, N−1)
    let mu1 = 1.0 / n;
    let mu2 = 2.0 / (n * (n + 1.0));
    let mu4 = 24.0 / (n * (n + 1.0) * (n + 2.0) * (n + 3.0));
    let se1 = ((mu2 - mu1 * mu1) / m).sqrt();
    let se2 = ((mu4 - mu2 * mu2) / m).sqrt();
    assert!((mean - mu1).abs() <= 3.0 * se1, "mean {mean} vs {mu1}");
    assert!(
        (second - mu2).abs() <= 3.0 * se2,
        "second moment {second} vs {mu2}"
    );
}
