//! Recurrence detection for hidden tensor unitaries `U′ = V(U₁ ⊗ ⋯ ⊗ U_r)V†`:
//! spectra, overlap series, closed-form detection statistics, Monte Carlo
//! estimates from the literal circuit and a per-gate noise model.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{
    eigendecompose_unitary, haar_unitary, kron_unitaries, wrap_angle, ComplexMatrix,
    HaarReflections, UnitaryMatrix, C64, ZERO,
};
use crate::rng;
use crate::statevector::{
    recurrence_circuit, run_circuit, sample_distribution, CircuitSpec, GateOp, Histogram,
    QubitState, RegisterLayout,
};

/// Largest state register for which `U′` is assembled as a dense matrix.
pub const MAX_ASSEMBLED_QUBITS: usize = 12;

/// Phase tolerance for "eigenvalue is 1" on exactly constructed instances.
pub const DEFAULT_PHASE_TOL: f64 = 1e-9;

/// Above this qubit count the `2^{−n/2}` walk residual is reported as negligible.
pub const NEGLIGIBLE_RESIDUAL_QUBITS: usize = 40;

const RATIONAL_EXCLUSION: f64 = 1e-6;
const MAX_EXCLUDED_DENOMINATOR: u32 = 8;
const PHASE_MERGE: f64 = 1e-12;
const MAX_HALF_SPECTRUM: usize = 1 << 22;

/// `diag(1, …, 1, e^{2πiθ})` on three qubits, θ in turns.
pub fn ccphase(theta: f64) -> UnitaryMatrix {
    let mut phases = [0.0; 8];
    phases[7] = TAU * theta;
    UnitaryMatrix::diagonal_phases(&phases)
}

fn near_small_rational(theta: f64) -> bool {
    (1..=MAX_EXCLUDED_DENOMINATOR).any(|q| {
        let x = theta * q as f64;
        (x - x.round()).abs() < RATIONAL_EXCLUSION * q as f64
    })
}

/// `count` angles in turns, uniform on `[0, 1)` but at least 1e-6 away from
/// every fraction with denominator at most 8.
pub fn default_thetas(count: usize, seed: u64) -> Vec<f64> {
    let mut g = rng::rng_from_seed(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t: f64 = g.random();
        if !near_small_rational(t) {
            out.push(t);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum Conjugator {
    Identity,
    Haar(u64),
    Given(UnitaryMatrix),
}

#[derive(Clone, Debug)]
pub struct HiddenTensorUnitary {
    factors: Vec<UnitaryMatrix>,
    conjugator: Option<UnitaryMatrix>,
    assembled: UnitaryMatrix,
}

impl HiddenTensorUnitary {
    pub fn factors(&self) -> &[UnitaryMatrix] {
        &self.factors
    }

    /// `None` when the conjugator is the identity.
    pub fn conjugator(&self) -> Option<&UnitaryMatrix> {
        self.conjugator.as_ref()
    }

    pub fn assembled(&self) -> &UnitaryMatrix {
        &self.assembled
    }

    pub fn num_qubits(&self) -> usize {
        self.assembled.dim().trailing_zeros() as usize
    }

    /// Overlap profile of `|psi0⟩` read off the known structure: the
    /// eigenvectors of `U′` are `V` applied to products of factor
    /// eigenvectors, so no dense eigensolver is needed.
    pub fn overlap_profile(&self, psi0: usize) -> Result<OverlapProfile> {
        let dim = self.assembled.dim();
        if psi0 >= dim {
            return Err(Error::IndexOutOfRange {
                index: psi0,
                qubits: self.num_qubits(),
            });
        }
        let spectra = self
            .factors
            .iter()
            .map(eigendecompose_unitary)
            .collect::<Result<Vec<_>>>()?;
        let mut row: Vec<C64> = match &self.conjugator {
            Some(v) => v.matrix().row(psi0).to_vec(),
            None => (0..dim)
                .map(|i| if i == psi0 { C64::new(1.0, 0.0) } else { ZERO })
                .collect(),
        };
        // row ← row · (W₁ ⊗ ⋯ ⊗ W_r), one tensor axis at a time
        let mut inner = dim;
        for s in &spectra {
            let d = s.dim();
            inner /= d;
            let outer = dim / (d * inner);
            let w = &s.eigenvectors;
            let mut next = vec![ZERO; dim];
            for o in 0..outer {
                for i in 0..d {
                    for t in 0..inner {
                        let mut acc = ZERO;
                        for r in 0..d {
                            acc += row[(o * d + r) * inner + t] * w[(r, i)];
                        }
                        next[(o * d + i) * inner + t] = acc;
                    }
                }
            }
            row = next;
        }
        let mut phases = vec![0.0; dim];
        let mut inner = dim;
        for s in &spectra {
            let d = s.dim();
            inner /= d;
            for (idx, p) in phases.iter_mut().enumerate() {
                *p += s.eigenphases[(idx / inner) % d];
            }
        }
        OverlapProfile::new(
            row.iter().map(|z| z.norm_sqr()).collect(),
            phases.into_iter().map(wrap_angle).collect(),
        )
    }
}

/// Assembles `V(⊗ factors)V†`. Every factor dimension must be a power of two
/// and the product at most `2^MAX_ASSEMBLED_QUBITS`.
pub fn build_hidden_tensor(
    factors: Vec<UnitaryMatrix>,
    conjugator: Conjugator,
) -> Result<HiddenTensorUnitary> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument("need at least one factor".into()));
    }
    let mut qubits = 0usize;
    for f in &factors {
        if !f.dim().is_power_of_two() || f.dim() < 2 {
            return Err(Error::InvalidDimension(format!(
                "factor dimension {} is not 2^k, k >= 1",
                f.dim()
            )));
        }
        qubits += f.dim().trailing_zeros() as usize;
    }
    if qubits > MAX_ASSEMBLED_QUBITS {
        return Err(Error::Sizing {
            what: "assembled qubits",
            requested: qubits,
            cap: MAX_ASSEMBLED_QUBITS,
        });
    }
    let product = kron_unitaries(&factors)?;
    let conjugator = match conjugator {
        Conjugator::Identity => None,
        Conjugator::Haar(seed) => Some(haar_unitary(product.dim(), seed)?),
        Conjugator::Given(v) => {
            if v.dim() != product.dim() {
                return Err(Error::DimensionMismatch {
                    expected: product.dim(),
                    found: v.dim(),
                });
            }
            Some(v)
        }
    };
    let assembled = match &conjugator {
        Some(v) => v.conjugate(&product)?,
        None => product,
    };
    Ok(HiddenTensorUnitary {
        factors,
        conjugator,
        assembled,
    })
}

/// One CCθ factor per angle (in turns).
pub fn build_ccphase_tensor(thetas: &[f64], conjugator: Conjugator) -> Result<HiddenTensorUnitary> {
    build_hidden_tensor(thetas.iter().map(|&t| ccphase(t)).collect(), conjugator)
}

/// Weights `|a_i|²` of `|ψ₀⟩` on the eigenvectors of `U`, with eigenphases θ_i.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapProfile {
    weights: Vec<f64>,
    eigenphases: Vec<f64>,
}

impl OverlapProfile {
    pub fn new(weights: Vec<f64>, eigenphases: Vec<f64>) -> Result<Self> {
        if weights.len() != eigenphases.len() {
            return Err(Error::LengthMismatch {
                expected: weights.len(),
                found: eigenphases.len(),
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || eigenphases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(
                "weights must be non-negative and phases finite".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self {
            weights,
            eigenphases,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eigenphases(&self) -> &[f64] {
        &self.eigenphases
    }

    /// Weight on eigenvalues within `tol` of 1.
    pub fn bias(&self, tol: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.eigenphases)
            .filter(|(_, &p)| wrap_angle(p).abs() <= tol)
            .map(|(w, _)| w)
            .sum()
    }
}

pub fn overlap_profile(u: &UnitaryMatrix, psi0: usize) -> Result<OverlapProfile> {
    if psi0 >= u.dim() {
        return Err(Error::IndexOutOfRange {
            index: psi0,
            qubits: u.dim().trailing_zeros() as usize,
        });
    }
    let eig = eigendecompose_unitary(u)?;
    let weights = (0..u.dim())
        .map(|i| eig.eigenvectors[(psi0, i)].norm_sqr())
        .collect();
    OverlapProfile::new(weights, eig.eigenphases)
}

/// `c_k = Σ_i |a_i|² e^{ikθ_i}` for `k = 0..=k_max`.
pub fn overlap_series(profile: &OverlapProfile, k_max: usize) -> Vec<C64> {
    let terms: Vec<(f64, f64)> = profile
        .weights
        .iter()
        .zip(&profile.eigenphases)
        .filter(|(&w, _)| w > 0.0)
        .map(|(&w, &p)| (w, p))
        .collect();
    exec::map_range(k_max + 1, |k| {
        if k == 0 {
            return C64::new(1.0, 0.0);
        }
        let c: C64 = terms
            .iter()
            .map(|&(w, p)| C64::from_polar(w, k as f64 * p))
            .sum();
        if c.norm() > 1.0 {
            c / c.norm()
        } else {
            c
        }
    })
}

/// Closed-form detection probabilities of the recurrence circuit with `j`
/// number qubits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureProbability {
    /// `(1/2^j) Σ_{k=0}^{2^j−1} |c_k|²`.
    pub with_k_zero: f64,
    /// `(1/(2^j−1)) Σ_{k=1}^{2^j−1} |c_k|²`, `None` when `j = 0`.
    pub without_k_zero: Option<f64>,
}

pub fn mixture_probability(profile: &OverlapProfile, number_qubits: usize) -> MixtureProbability {
    let count = 1usize << number_qubits;
    let series = overlap_series(profile, count - 1);
    let tail: f64 = series[1..].iter().map(|c| c.norm_sqr()).sum();
    MixtureProbability {
        with_k_zero: (1.0 + tail) / count as f64,
        without_k_zero: (count > 1).then(|| tail / (count - 1) as f64),
    }
}

pub enum SpectrumSource<'a> {
    Dense(&'a UnitaryMatrix),
    Factors(&'a [UnitaryMatrix]),
}

/// Fraction of eigenvalues λ with `|arg(λ^m)| ≤ tol`. Factored input is
/// counted combinatorially from the factor spectra.
pub fn frac_period(source: SpectrumSource<'_>, m: u32, tol: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("period m must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    match source {
        SpectrumSource::Dense(u) => {
            let eig = eigendecompose_unitary(u)?;
            let hits = eig
                .eigenphases
                .iter()
                .filter(|&&p| period_hit(p, m, tol))
                .count();
            Ok(hits as f64 / u.dim() as f64)
        }
        SpectrumSource::Factors(factors) => {
            let (hits, total) = period_counts(factors, m, tol)?;
            Ok((hits as f64) / (total as f64))
        }
    }
}

fn period_hit(phase: f64, m: u32, tol: f64) -> bool {
    wrap_angle(phase * m as f64).abs() <= tol
}

/// Multiset of eigenphases as sorted `(phase, multiplicity)` pairs in `(−π, π]`.
fn phase_multiset(phases: impl IntoIterator<Item = (f64, u128)>) -> Vec<(f64, u128)> {
    let mut v: Vec<(f64, u128)> = phases
        .into_iter()
        .map(|(p, c)| (wrap_angle(p), c))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, u128)> = Vec::with_capacity(v.len());
    for (p, c) in v {
        match out.last_mut() {
            Some(last) if p - last.0 < PHASE_MERGE => last.1 += c,
            _ => out.push((p, c)),
        }
    }
    if out.len() > 1 && out[0].0 + TAU - out[out.len() - 1].0 < PHASE_MERGE {
        let (_, c) = out.pop().expect("non-empty");
        out[0].1 += c;
    }
    out
}

fn combine(a: &[(f64, u128)], b: &[(f64, u128)]) -> Result<Vec<(f64, u128)>> {
    if a.len().saturating_mul(b.len()) > MAX_HALF_SPECTRUM {
        return Err(Error::InvalidArgument(format!(
            "factored spectrum has more than {MAX_HALF_SPECTRUM} distinct phases per half"
        )));
    }
    Ok(phase_multiset(a.iter().flat_map(|&(p, c)| {
        b.iter().map(move |&(q, d)| (p + q, c * d))
    })))
}

/// Meet in the middle: the spectrum of each half of the factor list is
/// enumerated as a multiset, then for every left phase the matching right
/// phases are found by binary search.
fn period_counts(factors: &[UnitaryMatrix], m: u32, tol: f64) -> Result<(u128, u128)> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument("need at least one factor".into()));
    }
    let spectra = factors
        .iter()
        .map(|f| {
            Ok(phase_multiset(
                eigendecompose_unitary(f)?
                    .eigenphases
                    .into_iter()
                    .map(|p| (p, 1)),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mid = spectra.len() / 2;
    let fold = |part: &[Vec<(f64, u128)>]| -> Result<Vec<(f64, u128)>> {
        part.iter()
            .try_fold(vec![(0.0, 1u128)], |acc, s| combine(&acc, s))
    };
    let left = fold(&spectra[..mid])?;
    let right = fold(&spectra[mid..])?;
    let total: u128 =
        left.iter().map(|x| x.1).sum::<u128>() * right.iter().map(|x| x.1).sum::<u128>();
    if tol >= PI {
        return Ok((total, total));
    }
    let mut prefix = Vec::with_capacity(right.len() + 1);
    prefix.push(0u128);
    for &(_, c) in &right {
        prefix.push(prefix.last().expect("non-empty") + c);
    }
    // counts right phases in [lo, hi] with −π ≤ lo ≤ hi ≤ π
    let count_in = |lo: f64, hi: f64| -> u128 {
        let a = right.partition_point(|x| x.0 < lo);
        let b = right.partition_point(|x| x.0 <= hi);
        if b > a {
            prefix[b] - prefix[a]
        } else {
            0
        }
    };
    let window = tol / m as f64;
    // windows around neighbouring roots overlap only when tol ≥ π/m
    if window * 2.0 >= TAU / m as f64 {
        return Ok((total, total));
    }
    let mut hits = 0u128;
    for &(a, ca) in &left {
        for r in 0..m {
            let centre = wrap_angle(TAU * r as f64 / m as f64 - a);
            let (lo, hi) = (centre - window, centre + window);
            let matched = if lo < -PI {
                count_in(lo + TAU, PI) + count_in(-PI, hi)
            } else if hi > PI {
                count_in(lo, PI) + count_in(-PI, hi - TAU)
            } else {
                count_in(lo, hi)
            };
            hits += ca * matched;
        }
    }
    Ok((hits, total))
}

/// Closed-form expected detection probability from a bias `f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BornPrediction {
    /// `(f + residual)²`.
    pub probability: f64,
    /// `(1 − f)·2^{−n/2}`.
    pub residual: f64,
    pub residual_negligible: bool,
}

pub fn bias_to_born(f: f64, n: usize) -> Result<BornPrediction> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "bias {f} is outside [0, 1]"
        )));
    }
    let residual = (1.0 - f) * 2f64.powf(-(n as f64) / 2.0);
    Ok(BornPrediction {
        probability: (f + residual).powi(2),
        residual,
        residual_negligible: n >= NEGLIGIBLE_RESIDUAL_QUBITS,
    })
}

/// Probability of at least one detection in `runs` independent runs.
pub fn detection_probability(p: f64, runs: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "probability {p} is outside [0, 1]"
        )));
    }
    if p == 1.0 {
        return Ok(if runs == 0 { 0.0 } else { 1.0 });
    }
    Ok(-((runs as f64) * (-p).ln_1p()).exp_m1())
}

/// Smallest run count whose detection probability reaches `conf`.
pub fn runs_for_confidence(p: f64, conf: f64) -> Result<u64> {
    if !(conf > 0.0 && conf < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence {conf} is outside (0, 1)"
        )));
    }
    if p == 0.0 {
        return Err(Error::UnreachableConfidence(conf));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "probability {p} is outside (0, 1]"
        )));
    }
    if p == 1.0 {
        return Ok(1);
    }
    let mut runs = ((-conf).ln_1p() / (-p).ln_1p()).ceil().max(1.0) as u64;
    while runs > 1 && detection_probability(p, runs - 1)? >= conf {
        runs -= 1;
    }
    while detection_probability(p, runs)? < conf {
        runs += 1;
    }
    Ok(runs)
}

/// `(1/6)e^{−z²} + (1/2)e^{−(4/3)z²}`.
pub fn ec_approx(z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "z = {z} must be non-negative"
        )));
    }
    let z2 = z * z;
    Ok((-z2).exp() / 6.0 + (-4.0 * z2 / 3.0).exp() / 2.0)
}

/// Per-gate coherent error strength and its randomness.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    per_gate_epsilon: f64,
    seed: u64,
}

impl NoiseModel {
    pub fn new(per_gate_epsilon: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&per_gate_epsilon) {
            return Err(Error::InvalidArgument(format!(
                "noise epsilon {per_gate_epsilon} is outside [0, 1]"
            )));
        }
        Ok(Self {
            per_gate_epsilon,
            seed,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.per_gate_epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Gaussian Hermitian sample scaled to `tr(K²) = d`, so `E‖K|ψ⟩‖² = 1` for
/// Haar-random `ψ`.
pub fn gue_sample(dim: usize, g: &mut impl Rng) -> ComplexMatrix {
    let raw: Vec<C64> = (0..dim * dim)
        .map(|_| {
            C64::new(
                StandardNormal.sample(&mut *g),
                StandardNormal.sample(&mut *g),
            )
        })
        .collect();
    let mut a = ComplexMatrix::new(dim, dim, raw).expect("finite");
    let at = a.adjoint();
    a = a.add(&at).expect("square");
    let frob: f64 = a.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    a.scale(C64::new((dim as f64).sqrt() / frob, 0.0))
}

/// `exp(iεK)` for Hermitian `K`.
pub fn hermitian_exp(k: &ComplexMatrix, epsilon: f64) -> Result<UnitaryMatrix> {
    let eig = nalgebra::linalg::SymmetricEigen::new(k.to_nalgebra());
    let w = ComplexMatrix::from_nalgebra(&eig.eigenvectors);
    let d: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&l| C64::from_polar(1.0, epsilon * l))
        .collect();
    let m = w
        .matmul(&ComplexMatrix::from_diagonal(&d))?
        .matmul(&w.adjoint())?;
    UnitaryMatrix::new(m)
}

/// Replaces every gate `G` by `G·exp(iεK)` on the gate's full support
/// (controls and targets), one independent `K` per gate.
pub fn perturb_circuit(circuit: &CircuitSpec, noise: &NoiseModel) -> Result<CircuitSpec> {
    if noise.per_gate_epsilon == 0.0 {
        return Ok(circuit.clone());
    }
    let gates = circuit
        .gates
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut stream = rng::stream(noise.seed, i as u64);
            let m = g.support_matrix();
            let k = gue_sample(m.dim(), &mut stream);
            let err = hermitian_exp(&k, noise.per_gate_epsilon)?;
            GateOp::new(m.mul(&err)?, g.support(), vec![])
        })
        .collect::<Result<Vec<_>>>()?;
    CircuitSpec::new(circuit.layout, gates)
}

/// A Monte Carlo frequency with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceEstimate {
    pub probability: f64,
    pub stderr: f64,
    pub shots: u64,
    pub k_zero_included: bool,
}

impl RecurrenceEstimate {
    pub fn from_counts(hits: u64, shots: u64, k_zero_included: bool) -> Self {
        let p = if shots == 0 {
            0.0
        } else {
            hits as f64 / shots as f64
        };
        let stderr = if shots == 0 {
            0.0
        } else {
            (p * (1.0 - p) / shots as f64).sqrt()
        };
        Self {
            probability: p,
            stderr,
            shots,
            k_zero_included,
        }
    }

    /// `|self − exact| ≤ sigmas·stderr`, with a floor of one count for
    /// degenerate zero-variance estimates.
    pub fn consistent_with(&self, exact: f64, sigmas: f64) -> bool {
        let floor = if self.shots == 0 {
            1.0
        } else {
            1.0 / self.shots as f64
        };
        (self.probability - exact).abs() <= sigmas * self.stderr.max(floor)
    }
}

/// Both readings of one batch of shots: all shots, and only the shots whose
/// number register is not `k = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrencePair {
    pub with_k_zero: RecurrenceEstimate,
    pub without_k_zero: RecurrenceEstimate,
}

#[derive(Clone, Debug)]
pub struct RecurrenceInstance {
    pub unitary: UnitaryMatrix,
    pub layout: RegisterLayout,
    pub noise: Option<NoiseModel>,
}

impl RecurrenceInstance {
    pub fn new(
        unitary: UnitaryMatrix,
        number_qubits: usize,
        noise: Option<NoiseModel>,
    ) -> Result<Self> {
        let dim = unitary.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidDimension(format!(
                "unitary dimension {dim} is not 2^n, n >= 1"
            )));
        }
        let layout = RegisterLayout::new(number_qubits, dim.trailing_zeros() as usize)?;
        Ok(Self {
            unitary,
            layout,
            noise,
        })
    }

    pub fn from_hidden(
        h: &HiddenTensorUnitary,
        number_qubits: usize,
        noise: Option<NoiseModel>,
    ) -> Result<Self> {
        Self::new(h.assembled().clone(), number_qubits, noise)
    }

    /// The (possibly perturbed) circuit.
    pub fn circuit(&self) -> Result<CircuitSpec> {
        let c = recurrence_circuit(&self.unitary, self.layout)?;
        match &self.noise {
            Some(n) => perturb_circuit(&c, n),
            None => Ok(c),
        }
    }

    /// State after the circuit on `|0…0⟩`.
    pub fn output_state(&self) -> Result<QubitState> {
        run_circuit(&self.circuit()?, &QubitState::zero(self.layout.total())?)
    }
}

/// Samples the joint register and counts outcomes whose state register reads
/// `|0⃗⟩`.
pub fn estimate_recurrence(
    instance: &RecurrenceInstance,
    shots: u64,
    seed: u64,
) -> Result<RecurrencePair> {
    let hist = sample_recurrence(instance, shots, seed)?;
    Ok(recurrence_from_histogram(&hist, instance.layout))
}

/// Joint (number ⊗ state) register outcomes of the circuit on `|0…0⟩`.
pub fn sample_recurrence(
    instance: &RecurrenceInstance,
    shots: u64,
    seed: u64,
) -> Result<Histogram> {
    sample_joint(&instance.output_state()?, shots, seed)
}

pub(crate) fn sample_joint(state: &QubitState, shots: u64, seed: u64) -> Result<Histogram> {
    let dist: Vec<f64> = state.amplitudes().iter().map(|z| z.norm_sqr()).collect();
    sample_distribution(&dist, state.num_qubits(), shots, seed)
}

/// Splits joint-register counts into the two recurrence readings.
pub fn recurrence_from_histogram(hist: &Histogram, layout: RegisterLayout) -> RecurrencePair {
    let n = layout.state_qubits;
    let state_mask = (1u64 << n) - 1;
    let (mut shots, mut hits, mut shots_k, mut hits_k) = (0u64, 0u64, 0u64, 0u64);
    for (&o, &c) in &hist.counts {
        let zero_state = o & state_mask == 0;
        shots += c;
        hits += c * zero_state as u64;
        if o >> n != 0 {
            shots_k += c;
            hits_k += c * zero_state as u64;
        }
    }
    RecurrencePair {
        with_k_zero: RecurrenceEstimate::from_counts(hits, shots, true),
        without_k_zero: RecurrenceEstimate::from_counts(hits_k, shots_k, false),
    }
}

/// `|⟨0|U^k|0⟩|²` samples for Haar-random `U`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarBaseline {
    pub qubits: usize,
    /// `(draw, k, |⟨0|U^k|0⟩|²)`.
    pub samples: Vec<(usize, usize, f64)>,
}

impl HaarBaseline {
    /// Root mean square of `|⟨0|U^k|0⟩|` over all samples.
    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|s| s.2).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// The `2^{−n/2}` prediction.
    pub fn predicted_rms(&self) -> f64 {
        2f64.powf(-(self.qubits as f64) / 2.0)
    }
}

/// Draws `draws` Haar unitaries on `qubits` qubits and, for each, evaluates
/// `|⟨0|U^k|0⟩|²` at `ks_per_draw` exponents uniform on `1..=k_max` by
/// repeated application of the unitary in reflection form.
pub fn haar_baseline(
    qubits: usize,
    draws: usize,
    ks_per_draw: usize,
    k_max: usize,
    seed: u64,
) -> Result<HaarBaseline> {
    if qubits == 0 || qubits > MAX_ASSEMBLED_QUBITS {
        return Err(Error::Sizing {
            what: "assembled qubits",
            requested: qubits,
            cap: MAX_ASSEMBLED_QUBITS,
        });
    }
    if draws == 0 || ks_per_draw == 0 || k_max == 0 {
        return Err(Error::InvalidArgument(
            "draws, ks_per_draw and k_max must be positive".into(),
        ));
    }
    let dim = 1usize << qubits;
    let mut samples = Vec::with_capacity(draws * ks_per_draw);
    for d in 0..draws {
        let u = HaarReflections::sample(dim, rng::derive_seed(seed, &format!("haar-{d}")))?;
        let mut pick = rng::stream(seed, d as u64);
        let ks: Vec<usize> = (0..ks_per_draw)
            .map(|_| pick.random_range(1..=k_max))
            .collect();
        let top = *ks.iter().max().expect("non-empty");
        let mut v = vec![ZERO; dim];
        v[0] = C64::new(1.0, 0.0);
        let mut overlaps = vec![0.0; top + 1];
        for slot in overlaps.iter_mut().skip(1) {
            v = u.apply(&v)?;
            *slot = v[0].norm_sqr();
        }
        samples.extend(ks.into_iter().map(|k| (d, k, overlaps[k])));
    }
    Ok(HaarBaseline { qubits, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccphase_identity_conjugator() {
        let h = build_ccphase_tensor(&[0.3], Conjugator::Identity).unwrap();
        let m = h.assembled().matrix();
        assert!(m.is_diagonal());
        assert!((m[(7, 7)] - C64::from_polar(1.0, TAU * 0.3)).norm() < 1e-15);
        assert_eq!(m[(0, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn three_factors_unit_multiplicity() {
        let h = build_ccphase_tensor(&default_thetas(3, 1), Conjugator::Identity).unwrap();
        let ones = h
            .assembled()
            .matrix()
            .diagonal()
            .iter()
            .filter(|z| (*z - 1.0).norm() < 1e-12)
            .count();
        assert_eq!(ones, 343);
        let f = frac_period(SpectrumSource::Factors(h.factors()), 1, DEFAULT_PHASE_TOL).unwrap();
        assert_eq!(f, 343.0 / 512.0);
    }

    #[test]
    fn sizing_limit() {
        let r = build_ccphase_tensor(&default_thetas(5, 1), Conjugator::Identity);
        assert!(matches!(
            r,
            Err(Error::Sizing {
                requested: 15,
                cap: 12,
                ..
            })
        ));
    }

    #[test]
    fn default_thetas_avoid_small_rationals() {
        for t in default_thetas(200, 4) {
            assert!((0.0..1.0).contains(&t));
            assert!(!near_small_rational(t));
        }
        assert!(near_small_rational(0.375 + 1e-8));
        assert_eq!(default_thetas(5, 9), default_thetas(5, 9));
    }

    #[test]
    fn profile_examples() {
        let p = overlap_profile(&UnitaryMatrix::identity(4), 2).unwrap();
        assert!(p.eigenphases().iter().all(|&x| x == 0.0));
        assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d = UnitaryMatrix::diagonal_phases(&[0.1, 0.2, 0.3, 0.4]);
        let p = overlap_profile(&d, 0).unwrap();
        assert_eq!(p.weights(), &[1.0, 0.0, 0.0, 0.0]);
        let u = haar_unitary(16, 2).unwrap();
        let p = overlap_profile(&u, 5).unwrap();
        assert!((p.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(overlap_profile(&u, 16).is_err());
    }

    #[test]
    fn structured_profile_matches_dense() {
        let h = build_hidden_tensor(
            vec![
                haar_unitary(2, 1).unwrap(),
                ccphase(0.123),
                haar_unitary(2, 3).unwrap(),
            ],
            Conjugator::Haar(7),
        )
        .unwrap();
        let fast = h.overlap_profile(0).unwrap();
        let dense = overlap_profile(h.assembled(), 0).unwrap();
        let (a, b) = (overlap_series(&fast, 40), overlap_series(&dense, 40));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn series_bounds() {
        let p = OverlapProfile::new(vec![0.5, 0.5], vec![0.0, 0.0]).unwrap();
        assert!(overlap_series(&p, 5)
            .iter()
            .all(|c| (c - 1.0).norm() < 1e-15));
        let p = overlap_profile(&haar_unitary(8, 3).unwrap(), 0).unwrap();
        let s = overlap_series(&p, 100);
        assert_eq!(s[0], C64::new(1.0, 0.0));
        assert!(s.iter().all(|c| c.norm() <= 1.0));
    }

    #[test]
    fn frac_period_examples() {
        let f = frac_period(SpectrumSource::Factors(&[ccphase(0.3)]), 1, 1e-9).unwrap();
        assert_eq!(f, 7.0 / 8.0);
        let id = UnitaryMatrix::identity(8);
        for m in 1..5 {
            assert_eq!(
                frac_period(SpectrumSource::Dense(&id), m, 1e-9).unwrap(),
                1.0
            );
        }
        // θ = 1/4: λ⁴ = 1 for every eigenvalue
        let f = frac_period(
            SpectrumSource::Factors(&[ccphase(0.25), ccphase(0.25)]),
            4,
            1e-9,
        )
        .unwrap();
        assert_eq!(f, 1.0);
        assert!(frac_period(SpectrumSource::Dense(&id), 0, 1e-9).is_err());
    }

    #[test]
    fn paper_fraction_for_24_factors() {
        let factors: Vec<_> = default_thetas(24, 11).into_iter().map(ccphase).collect();
        let f = frac_period(SpectrumSource::Factors(&factors), 1, DEFAULT_PHASE_TOL).unwrap();
        assert!((f - (7.0f64 / 8.0).powi(24)).abs() < 1e-15);
        assert!((f - 0.040569).abs() < 1e-6);
    }

    #[test]
    fn born_and_detection_examples() {
        let b = bias_to_born(0.040569, 72).unwrap();
        assert!((b.probability - 1.0 / 607.59).abs() < 1e-5);
        assert!(b.residual_negligible);
        assert_eq!(bias_to_born(1.0, 5).unwrap().probability, 1.0);
        assert!((bias_to_born(0.0, 10).unwrap().probability - 2f64.powi(-10)).abs() < 1e-15);
        assert!(detection_probability(0.0016458, 6000).unwrap() >= 0.999);
        assert_eq!(detection_probability(1.0, 1).unwrap(), 1.0);
        let runs = runs_for_confidence(0.0016458, 0.999).unwrap();
        assert_eq!(runs, 4194);
        let closed = ((1.0f64 - 0.999).ln() / (1.0f64 - 0.0016458).ln()).ceil() as u64;
        assert_eq!(runs, closed);
        assert!(matches!(
            runs_for_confidence(0.0, 0.5),
            Err(Error::UnreachableConfidence(_))
        ));
    }

    #[test]
    fn ec_examples() {
        assert!((ec_approx(0.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((ec_approx(1.0).unwrap() - 0.193_111_809_253_103_8).abs() < 1e-15);
        assert!(ec_approx(6.0).unwrap() < 1e-15);
        assert!(ec_approx(-1.0).is_err());
    }

    #[test]
    fn identity_always_recurs() {
        let inst = RecurrenceInstance::new(UnitaryMatrix::identity(4), 3, None).unwrap();
        let r = estimate_recurrence(&inst, 1000, 1).unwrap();
        assert_eq!(r.with_k_zero.probability, 1.0);
        assert_eq!(r.without_k_zero.probability, 1.0);
        assert_eq!(r.with_k_zero.shots, 1000);
    }

    #[test]
    fn zero_noise_is_identity_transform() {
        let inst = RecurrenceInstance::new(haar_unitary(4, 1).unwrap(), 2, None).unwrap();
        let c = inst.circuit().unwrap();
        let p = perturb_circuit(&c, &NoiseModel::new(0.0, 3).unwrap()).unwrap();
        assert_eq!(p, c);
        assert!(NoiseModel::new(1.5, 0).is_err());
    }

    #[test]
    fn gue_normalization() {
        let mut g = rng::rng_from_seed(4);
        let k = gue_sample(8, &mut g);
        assert!(k.max_abs_diff(&k.adjoint()) < 1e-15);
        let tr2: f64 = k.entries().iter().map(|z| z.norm_sqr()).sum();
        assert!((tr2 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn haar_baseline_shape() {
        let b = haar_baseline(3, 2, 5, 4, 1).unwrap();
        assert_eq!(b.samples.len(), 10);
        assert!(b
            .samples
            .iter()
            .all(|s| (1..=4).contains(&s.1) && s.2 <= 1.0));
        assert_eq!(b, haar_baseline(3, 2, 5, 4, 1).unwrap());
    }
}
