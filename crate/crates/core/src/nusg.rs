//! Spectral-gap instances built from verifier circuits: `Z = H U† Y U V H`
//! on (top ancilla ⊗ input ⊗ lower ancillas), gap decisions, the
//! completeness residual and the soundness gap bound, and the SWAP test.
//!
//! Qubit 0 of `Z` is the top ancilla, qubit 1 the acceptance qubit (first
//! input qubit) and the lower ancillas come last. The verifier itself acts on
//! input ⊗ lower ancillas.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eigendecompose_unitary, haar_unitary, kron, svd, ComplexMatrix, UnitaryMatrix, C64,
};
use crate::recurrence::{gue_sample, hermitian_exp};
use crate::rng;
use crate::statevector::{apply_gate, sample_distribution, GateOp, QubitState};

/// Largest `Z` register (top ancilla included).
pub const MAX_Z_QUBITS: usize = 10;

/// Slack on the acceptance premise of the completeness check.
const PREMISE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZLayout {
    pub input_qubits: usize,
    pub ancilla_qubits: usize,
}

impl ZLayout {
    pub fn new(input_qubits: usize, ancilla_qubits: usize) -> Result<Self> {
        if input_qubits == 0 {
            return Err(Error::InvalidArgument(
                "the input register needs the acceptance qubit".into(),
            ));
        }
        let total = 1 + input_qubits + ancilla_qubits;
        if total > MAX_Z_QUBITS {
            return Err(Error::Sizing {
                what: "Z qubits",
                requested: total,
                cap: MAX_Z_QUBITS,
            });
        }
        Ok(Self {
            input_qubits,
            ancilla_qubits,
        })
    }

    pub fn verifier_qubits(&self) -> usize {
        self.input_qubits + self.ancilla_qubits
    }

    pub fn total_qubits(&self) -> usize {
        1 + self.verifier_qubits()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifierInstance {
    verifier: UnitaryMatrix,
    layout: ZLayout,
}

/// `mat` on `qubits` of an `nq`-qubit register, as a dense matrix.
fn embed(mat: &UnitaryMatrix, qubits: Vec<usize>, nq: usize) -> Result<UnitaryMatrix> {
    let gate = GateOp::new(mat.clone(), qubits, vec![])?;
    let dim = 1usize << nq;
    let cols = (0..dim)
        .map(|c| Ok(apply_gate(&QubitState::basis(nq, c)?, &gate)?.into_amplitudes()))
        .collect::<Result<Vec<_>>>()?;
    UnitaryMatrix::new(ComplexMatrix::from_fn(dim, dim, |r, c| cols[c][r]))
}

fn swap_gate() -> UnitaryMatrix {
    let one = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    let m = ComplexMatrix::new(
        4,
        4,
        vec![one, z, z, z, z, z, one, z, z, one, z, z, z, z, z, one],
    )
    .expect("4x4");
    UnitaryMatrix::new(m).expect("permutation")
}

impl VerifierInstance {
    pub fn new(
        verifier: UnitaryMatrix,
        input_qubits: usize,
        ancilla_qubits: usize,
    ) -> Result<Self> {
        let layout = ZLayout::new(input_qubits, ancilla_qubits)?;
        let expected = 1usize << layout.verifier_qubits();
        if verifier.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: verifier.dim(),
            });
        }
        Ok(Self { verifier, layout })
    }

    /// Moves a fresh ancilla into the acceptance qubit and flips it: every
    /// witness is accepted.
    pub fn accept_all(input_qubits: usize, ancilla_qubits: usize) -> Result<Self> {
        let inst = Self::reject_all(input_qubits, ancilla_qubits)?;
        let nq = inst.layout.verifier_qubits();
        let x = embed(GateOp::pauli_x(0).matrix(), vec![0], nq)?;
        Self::new(x.mul(&inst.verifier)?, input_qubits, ancilla_qubits)
    }

    /// Moves a fresh ancilla into the acceptance qubit: no witness is accepted.
    pub fn reject_all(input_qubits: usize, ancilla_qubits: usize) -> Result<Self> {
        if ancilla_qubits == 0 {
            return Err(Error::InvalidArgument("needs at least one ancilla".into()));
        }
        let nq = input_qubits + ancilla_qubits;
        let s = embed(&swap_gate(), vec![0, input_qubits], nq)?;
        Self::new(s, input_qubits, ancilla_qubits)
    }

    /// `W₂ · exp(−iβK) · [X] · SWAP(acc, anc₀) · W₁` with `W₁` Haar on every
    /// qubit except the first ancilla, `K` a unit-norm Hermitian on the
    /// acceptance qubit and its neighbour, and `W₂` Haar on every qubit except
    /// the acceptance qubit. Without `X` the maximum acceptance is `O(β²)`;
    /// with it the best witness is accepted with probability `1 − O(β²)`.
    pub fn random_family(
        input_qubits: usize,
        ancilla_qubits: usize,
        beta: f64,
        accepting: bool,
        seed: u64,
    ) -> Result<Self> {
        if ancilla_qubits == 0 {
            return Err(Error::InvalidArgument("needs at least one ancilla".into()));
        }
        let nq = input_qubits + ancilla_qubits;
        let all_but = |skip: usize| -> Vec<usize> { (0..nq).filter(|&q| q != skip).collect() };
        let w1_qubits = all_but(input_qubits);
        let w1 = embed(
            &haar_unitary(1 << w1_qubits.len(), rng::derive_seed(seed, "w1"))?,
            w1_qubits,
            nq,
        )?;
        let swap = embed(&swap_gate(), vec![0, input_qubits], nq)?;
        let mut g = rng::rng_from_seed(rng::derive_seed(seed, "coupling"));
        let k = gue_sample(4, &mut g);
        let spectral = svd(&k)?.singulars[0];
        let coupling = hermitian_exp(&k.scale(C64::new(1.0 / spectral, 0.0)), -beta)?;
        let coupling = embed(&coupling, vec![0, 1], nq)?;
        let w2_qubits = all_but(0);
        let w2 = embed(
            &haar_unitary(1 << w2_qubits.len(), rng::derive_seed(seed, "w2"))?,
            w2_qubits,
            nq,
        )?;
        let mut u = swap.mul(&w1)?;
        if accepting {
            u = embed(GateOp::pauli_x(0).matrix(), vec![0], nq)?.mul(&u)?;
        }
        let u = w2.mul(&coupling.mul(&u)?)?;
        Self::new(u, input_qubits, ancilla_qubits)
    }

    pub fn verifier(&self) -> &UnitaryMatrix {
        &self.verifier
    }

    pub fn layout(&self) -> ZLayout {
        self.layout
    }

    /// `P₁ U J` where `J` appends `|0…0⟩` ancillas to a witness.
    fn accepting_map(&self) -> ComplexMatrix {
        let na = self.layout.ancilla_qubits;
        let nv = self.layout.verifier_qubits();
        let dim = 1usize << nv;
        let half = dim / 2;
        ComplexMatrix::from_fn(dim, 1 << self.layout.input_qubits, |r, w| {
            if r >= half {
                self.verifier[(r, w << na)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `‖P₁ U (|ψ⟩ ⊗ |0…0⟩)‖²`.
    pub fn acceptance_probability(&self, witness: &QubitState) -> Result<f64> {
        if witness.num_qubits() != self.layout.input_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.layout.input_qubits,
                found: witness.num_qubits(),
            });
        }
        let out = self.accepting_map().matvec(witness.amplitudes())?;
        Ok(out.iter().map(|z| z.norm_sqr()).sum())
    }

    /// Exact maximum acceptance over witnesses: the squared top singular
    /// value of `P₁ U J`.
    pub fn max_acceptance(&self) -> Result<f64> {
        Ok(svd(&self.accepting_map())?.singulars[0].powi(2))
    }

    /// A witness attaining [`VerifierInstance::max_acceptance`].
    pub fn best_witness(&self) -> Result<QubitState> {
        let d = svd(&self.accepting_map())?;
        QubitState::normalized(d.right.matrix().column(0))
    }

    /// Largest acceptance over `samples` Haar-random witnesses.
    pub fn sampled_max_acceptance(&self, samples: usize, seed: u64) -> Result<f64> {
        (0..samples).try_fold(0.0f64, |m, i| {
            let w = QubitState::random(
                self.layout.input_qubits,
                rng::derive_seed(seed, &format!("witness-{i}")),
            )?;
            Ok(m.max(self.acceptance_probability(&w)?))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NusgParams {
    phi: f64,
    epsilon: f64,
    delta0: f64,
}

impl NusgParams {
    /// Requires `φ ∈ (0, π/4)`, `δ₀ ∈ (0, 0.01)`, `ε ≥ 0` and `φ ≥ 10√ε`.
    pub fn new(phi: f64, epsilon: f64, delta0: f64) -> Result<Self> {
        if !(phi > 0.0 && phi < FRAC_PI_4) {
            return Err(Error::InvalidArgument(format!(
                "phi = {phi} is outside (0, pi/4)"
            )));
        }
        if !(delta0 > 0.0 && delta0 < 0.01) {
            return Err(Error::InvalidArgument(format!(
                "delta0 = {delta0} is outside (0, 0.01)"
            )));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon = {epsilon} must be non-negative"
            )));
        }
        if phi < 10.0 * epsilon.sqrt() {
            return Err(Error::InvalidArgument(format!(
                "phi = {phi} is below 10*sqrt(epsilon) = {}",
                10.0 * epsilon.sqrt()
            )));
        }
        Ok(Self {
            phi,
            epsilon,
            delta0,
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }
}

/// `diag(e^{−iφ}, e^{iφ})` on the top ancilla when the lower ancillas are all
/// `|0⟩`, the scalar `e^{2iφ}` otherwise.
pub fn build_v(phi: f64, layout: ZLayout) -> UnitaryMatrix {
    let n = layout.total_qubits();
    let anc_mask = (1usize << layout.ancilla_qubits) - 1;
    let phases: Vec<f64> = (0..1usize << n)
        .map(|i| {
            let top = i >> (n - 1) & 1;
            match (i & anc_mask == 0, top) {
                (true, 0) => -phi,
                (true, _) => phi,
                (false, _) => 2.0 * phi,
            }
        })
        .collect();
    UnitaryMatrix::diagonal_phases(&phases)
}

/// `diag(e^{iφ}, e^{−iφ})` on the top ancilla when the acceptance qubit is
/// `|1⟩`, the identity otherwise.
pub fn build_y(phi: f64, layout: ZLayout) -> UnitaryMatrix {
    let n = layout.total_qubits();
    let phases: Vec<f64> = (0..1usize << n)
        .map(|i| {
            let top = i >> (n - 1) & 1;
            let acc = i >> (n - 2) & 1;
            match (acc, top) {
                (0, _) => 0.0,
                (_, 0) => phi,
                _ => -phi,
            }
        })
        .collect();
    UnitaryMatrix::diagonal_phases(&phases)
}

#[derive(Clone, Debug)]
pub struct ZCircuit {
    pub z: UnitaryMatrix,
    pub v: UnitaryMatrix,
    pub y: UnitaryMatrix,
    pub layout: ZLayout,
}

/// `Z = H U† Y U V H` with `H` on the top ancilla and `U = 1 ⊗ U_x`.
pub fn build_z(instance: &VerifierInstance, params: &NusgParams) -> Result<ZCircuit> {
    build_z_with_phi(instance, params.phi)
}

/// [`build_z`] without the parameter checks (for example `φ = 0`).
pub fn build_z_with_phi(instance: &VerifierInstance, phi: f64) -> Result<ZCircuit> {
    let layout = instance.layout;
    let n = layout.total_qubits();
    let dim = 1usize << n;
    let v = build_v(phi, layout);
    let y = build_y(phi, layout);
    let u = kron(&[
        ComplexMatrix::identity(2),
        instance.verifier.matrix().clone(),
    ])?;
    let h = embed(GateOp::hadamard(0).matrix(), vec![0], n)?;
    let z = h
        .matrix()
        .matmul(&u.adjoint())?
        .matmul(y.matrix())?
        .matmul(&u)?
        .matmul(v.matrix())?
        .matmul(h.matrix())?;
    debug_assert_eq!(z.rows(), dim);
    Ok(ZCircuit {
        z: UnitaryMatrix::new(z)?,
        v,
        y,
        layout,
    })
}

/// Smallest `|θ|` over the eigenphases of `u`.
pub fn gap_around_one(u: &UnitaryMatrix) -> Result<f64> {
    let eig = eigendecompose_unitary(u)?;
    Ok(eig
        .eigenphases
        .iter()
        .fold(f64::INFINITY, |m, p| m.min(p.abs())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NusgVerdict {
    /// An eigenphase lies in `(−δ₀, δ₀)`.
    Member,
    /// No eigenphase lies in `(−10δ₀, 10δ₀)`.
    NonMember,
    /// The gap falls between the promise bands.
    Undetermined,
}

pub fn nusg_decide(u: &UnitaryMatrix, delta0: f64) -> Result<(f64, NusgVerdict)> {
    let gap = gap_around_one(u)?;
    let verdict = if gap < delta0 {
        NusgVerdict::Member
    } else if gap >= 10.0 * delta0 {
        NusgVerdict::NonMember
    } else {
        NusgVerdict::Undetermined
    };
    Ok((gap, verdict))
}

/// `|0⟩_top ⊗ |ψ⟩ ⊗ |0…0⟩`.
pub fn embed_witness(layout: ZLayout, witness: &QubitState) -> Result<QubitState> {
    if witness.num_qubits() != layout.input_qubits {
        return Err(Error::DimensionMismatch {
            expected: layout.input_qubits,
            found: witness.num_qubits(),
        });
    }
    let top = QubitState::zero(1)?;
    let anc = QubitState::zero(layout.ancilla_qubits)?;
    top.tensor(witness)?.tensor(&anc)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case1Report {
    pub acceptance: f64,
    pub residual: f64,
    /// `2√ε`.
    pub bound: f64,
    pub satisfied: bool,
}

/// `‖Z|Ψ⟩ − |Ψ⟩‖` for the embedded witness, against `2√ε`. The witness
/// must be accepted with probability at least `1 − ε`.
pub fn residual_case1(
    instance: &VerifierInstance,
    witness: &QubitState,
    params: &NusgParams,
) -> Result<Case1Report> {
    let acceptance = instance.acceptance_probability(witness)?;
    if acceptance < 1.0 - params.epsilon - PREMISE_SLACK {
        return Err(Error::PremiseViolation {
            acceptance,
            epsilon: params.epsilon,
        });
    }
    let z = build_z(instance, params)?;
    let psi = embed_witness(instance.layout, witness)?;
    let out = z.z.apply(psi.amplitudes())?;
    let residual = out
        .iter()
        .zip(psi.amplitudes())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let bound = 2.0 * params.epsilon.sqrt();
    Ok(Case1Report {
        acceptance,
        residual,
        bound,
        satisfied: residual <= bound + 1e-12,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case2Report {
    /// Exact maximum acceptance `ε*`.
    pub max_acceptance: f64,
    pub gap: f64,
    /// `sin φ − 2√ε*`.
    pub bound: f64,
    pub satisfied: bool,
}

/// Checks that every eigenphase of `Z` is at least `sin φ − 2√ε*` away from 0.
pub fn check_case2(instance: &VerifierInstance, params: &NusgParams) -> Result<Case2Report> {
    let eps_star = instance.max_acceptance()?;
    let z = build_z(instance, params)?;
    let gap = gap_around_one(&z.z)?;
    let bound = params.phi.sin() - 2.0 * eps_star.sqrt();
    Ok(Case2Report {
        max_acceptance: eps_star,
        gap,
        bound,
        satisfied: gap >= bound - 1e-9,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub shots: u64,
    /// Sampled frequency of ancilla `|0⟩`.
    pub p0_hat: f64,
    /// `(1 + |⟨a|b⟩|²)/2`.
    pub p0_exact: f64,
    /// `|⟨a|b⟩|`.
    pub overlap_exact: f64,
}

impl SwapEstimate {
    pub fn consistent(&self, sigmas: f64) -> bool {
        (self.estimate - self.overlap_exact).abs() <= sigmas * self.stderr
    }
}

/// SWAP test: ancilla `|0⟩` with probability `‖(a⊗b + b⊗a)/2‖²`. The estimate
/// is `√max(0, 2P̂ − 1)`; its standard error comes from the delta method,
/// replaced by the square root of the sampling error of `2P̂ − 1` when that
/// quantity is within three of its own standard errors of zero. The sampling
/// error uses the add-one frequency `(hits + 1)/(shots + 2)` so that it stays
/// positive when every shot agrees.
pub fn swap_test_estimate(
    a: &QubitState,
    b: &QubitState,
    shots: u64,
    seed: u64,
) -> Result<SwapEstimate> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let ab = a.tensor(b)?;
    let ba = b.tensor(a)?;
    let p0: f64 = ab
        .amplitudes()
        .iter()
        .zip(ba.amplitudes())
        .map(|(x, y)| ((x + y) * 0.5).norm_sqr())
        .sum();
    let p0 = p0.clamp(0.0, 1.0);
    let hist = sample_distribution(&[p0, 1.0 - p0], 1, shots, seed)?;
    let p_hat = hist.count(0) as f64 / shots as f64;
    let x = 2.0 * p_hat - 1.0;
    let estimate = x.max(0.0).sqrt();
    let p_smooth = (hist.count(0) + 1) as f64 / (shots + 2) as f64;
    let sd_x = 2.0 * (p_smooth * (1.0 - p_smooth) / shots as f64).sqrt();
    let stderr = if x <= 3.0 * sd_x {
        sd_x.sqrt()
    } else {
        sd_x / (2.0 * estimate)
    };
    let overlap_exact = a.inner(b)?.norm();
    Ok(SwapEstimate {
        estimate,
        stderr,
        shots,
        p0_hat: p_hat,
        p0_exact: p0,
        overlap_exact,
    })
}
