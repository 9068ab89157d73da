use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use recurlab::exec::sequential;
use recurlab::linalg::haar_unitary;
use recurlab::statevector::{apply_gate, sample_distribution, GateOp, QubitState};
use recurlab::sternfeld::check_wrc_bound;

fn compare<R>(
    c: &mut Criterion,
    group: &str,
    param: impl std::fmt::Display + Copy,
    f: impl Fn() -> R,
) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("pooled", param), |b| b.iter(&f));
    g.bench_function(BenchmarkId::new("sequential", param), |b| {
        b.iter(|| sequential(&f))
    });
    g.finish();
}

fn gate_application(c: &mut Criterion) {
    for qubits in [12usize, 16] {
        let state = QubitState::random(qubits, 1).unwrap();
        let gate = GateOp::new(haar_unitary(4, 2).unwrap(), vec![1, qubits - 1], vec![0]).unwrap();
        compare(c, "apply_gate", qubits, || {
            apply_gate(&state, &gate).unwrap()
        });
    }
}

fn sampling(c: &mut Criterion) {
    let width = 16;
    let state = QubitState::random(width, 3).unwrap();
    let dist: Vec<f64> = state.amplitudes().iter().map(|z| z.norm_sqr()).collect();
    for shots in [100_000u64, 1_000_000] {
        compare(c, "sample_distribution", shots, || {
            sample_distribution(&dist, width, shots, 7).unwrap()
        });
    }
}

fn bound_scan(c: &mut Criterion) {
    compare(c, "check_wrc_bound", "3x4", || {
        check_wrc_bound(3, 4).unwrap()
    });
}

fn matmul(c: &mut Criterion) {
    let a = haar_unitary(128, 4).unwrap();
    let b = haar_unitary(128, 5).unwrap();
    compare(c, "matmul", 128, || a.matrix().matmul(b.matrix()).unwrap());
}

criterion_group!(benches, gate_application, sampling, bound_scan, matmul);
criterion_main!(benches);
