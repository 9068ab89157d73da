//! Amplitude amplification of the recurrence signal. `Q = −S_Ψ S_P` with
//! `S_Ψ = 1 − 2|Ψ⟩⟨Ψ|`, `S_P = 1 − 2|Θ⟩⟨Θ|`, applied as rank-1 updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::recurrence::{
    recurrence_from_histogram, sample_joint, RecurrenceEstimate, RecurrenceInstance,
};
use crate::rng;
use crate::statevector::{apply_gate, sample_distribution, GateOp, QubitState, RegisterLayout};

#[derive(Clone, Debug)]
pub struct AmplifierSetup {
    layout: RegisterLayout,
    psi: QubitState,
    target: QubitState,
    theta: f64,
}

/// What a detection means in [`amplified_recurrence`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectionEvent {
    /// The state register reads `|0⃗⟩` (the unamplified recurrence event).
    StateRegisterZero,
    /// Projection onto `Θ`, measured as all zeros after Hadamards on the
    /// number register; probability `sin²((2m+1)θ)`.
    TargetProjection,
}

/// `Θ = 2^{−j/2} Σ_k |k⟩ ⊗ |0⃗⟩`.
pub fn recurrence_target(layout: RegisterLayout) -> Result<QubitState> {
    let dim = 1usize << layout.total();
    let stride = 1usize << layout.state_qubits;
    let amp = C64::new((-(layout.number_qubits as f64) / 2.0).exp2(), 0.0);
    let mut v = vec![C64::new(0.0, 0.0); dim];
    for k in 0..1usize << layout.number_qubits {
        v[k * stride] = amp;
    }
    QubitState::new(v)
}

impl AmplifierSetup {
    /// `psi` is rotated by a global phase so that `⟨Θ|Ψ⟩ ≥ 0`.
    pub fn from_states(
        layout: RegisterLayout,
        psi: QubitState,
        target: QubitState,
    ) -> Result<Self> {
        let total = layout.total();
        for s in [&psi, &target] {
            if s.num_qubits() != total {
                return Err(Error::DimensionMismatch {
                    expected: total,
                    found: s.num_qubits(),
                });
            }
        }
        let overlap = target.inner(&psi)?;
        let psi = if overlap.norm() > 0.0 {
            let phase = overlap.conj() / overlap.norm();
            QubitState::normalized(psi.amplitudes().iter().map(|a| a * phase).collect())?
        } else {
            psi
        };
        let theta = overlap.norm().min(1.0).asin();
        Ok(Self {
            layout,
            psi,
            target,
            theta,
        })
    }

    /// `Ψ` is the recurrence circuit output and `Θ` the uniform target.
    pub fn from_instance(instance: &RecurrenceInstance) -> Result<Self> {
        let psi = instance.output_state()?;
        Self::from_states(instance.layout, psi, recurrence_target(instance.layout)?)
    }

    /// `Ψ = sinθ·Θ + cosθ·χ` with `χ` a random unit vector orthogonal to `Θ`.
    pub fn synthetic(layout: RegisterLayout, sin_theta: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sin_theta) {
            return Err(Error::InvalidArgument(format!(
                "sin θ = {sin_theta} is outside [0, 1]"
            )));
        }
        let target = recurrence_target(layout)?;
        let r = QubitState::random(layout.total(), seed)?;
        let ov = target.inner(&r)?;
        let chi = QubitState::normalized(
            r.amplitudes()
                .iter()
                .zip(target.amplitudes())
                .map(|(x, t)| x - t * ov)
                .collect(),
        )?;
        let cos_theta = (1.0 - sin_theta * sin_theta).sqrt();
        let psi = QubitState::normalized(
            target
                .amplitudes()
                .iter()
                .zip(chi.amplitudes())
                .map(|(t, c)| t * sin_theta + c * cos_theta)
                .collect(),
        )?;
        Self::from_states(layout, psi, target)
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn psi(&self) -> &QubitState {
        &self.psi
    }

    pub fn target(&self) -> &QubitState {
        &self.target
    }

    /// θ ∈ [0, π/2] with `sin θ = |⟨Θ|Ψ⟩|`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `Q^m |Ψ⟩`.
    pub fn iterate(&self, m: u64) -> Result<QubitState> {
        (0..m).try_fold(self.psi.clone(), |s, _| grover_step(self, &s))
    }

    /// Closed-form detection probability after `m` steps.
    pub fn exact_detection(&self, m: u64, event: DetectionEvent) -> Result<f64> {
        match event {
            DetectionEvent::TargetProjection => {
                Ok((((2 * m + 1) as f64) * self.theta).sin().powi(2))
            }
            DetectionEvent::StateRegisterZero => {
                let s = self.iterate(m)?;
                let stride = 1usize << self.layout.state_qubits;
                Ok(s.amplitudes()
                    .iter()
                    .step_by(stride)
                    .map(|a| a.norm_sqr())
                    .sum())
            }
        }
    }
}

fn reflect(s: &mut [C64], axis: &QubitState) {
    let ov: C64 = axis
        .amplitudes()
        .iter()
        .zip(s.iter())
        .map(|(a, x)| a.conj() * x)
        .sum();
    let two = ov * 2.0;
    for (x, a) in s.iter_mut().zip(axis.amplitudes()) {
        *x -= a * two;
    }
}

/// One application of `Q = −S_Ψ S_P`.
pub fn grover_step(setup: &AmplifierSetup, state: &QubitState) -> Result<QubitState> {
    if state.dim() != setup.psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: setup.psi.dim(),
            found: state.dim(),
        });
    }
    let mut s = state.amplitudes().to_vec();
    reflect(&mut s, &setup.target);
    reflect(&mut s, &setup.psi);
    s.iter_mut().for_each(|x| *x = -*x);
    Ok(QubitState::from_trusted(s))
}

/// Samples the state after `m` amplification steps and reports how often
/// `event` occurred.
pub fn amplified_recurrence(
    setup: &AmplifierSetup,
    m: u64,
    shots: u64,
    seed: u64,
    event: DetectionEvent,
) -> Result<RecurrenceEstimate> {
    let state = setup.iterate(m)?;
    match event {
        DetectionEvent::StateRegisterZero => {
            let hist = sample_joint(&state, shots, seed)?;
            Ok(recurrence_from_histogram(&hist, setup.layout).with_k_zero)
        }
        DetectionEvent::TargetProjection => {
            let rotated = (0..setup.layout.number_qubits)
                .try_fold(state, |s, q| apply_gate(&s, &GateOp::hadamard(q)))?;
            let p0 = rotated.amplitudes()[0].norm_sqr().min(1.0);
            let hist = sample_distribution(&[p0, 1.0 - p0], 1, shots, seed)?;
            Ok(RecurrenceEstimate::from_counts(hist.count(0), shots, true))
        }
    }
}

/// `{1, 2, 4, …} ≤ max_m`.
pub fn guess_schedule(max_m: u64) -> Result<Vec<u64>> {
    if max_m == 0 {
        return Err(Error::InvalidArgument("max_m must be at least 1".into()));
    }
    Ok(std::iter::successors(Some(1u64), |&m| m.checked_mul(2))
        .take_while(|&m| m <= max_m)
        .collect())
}

/// `⌈π/(4ε_min)⌉`, the schedule cap for overlaps of at least `ε_min`.
pub fn schedule_cap(epsilon_min: f64) -> Result<u64> {
    if !(epsilon_min > 0.0 && epsilon_min <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "ε_min = {epsilon_min} is outside (0, 1]"
        )));
    }
    Ok((std::f64::consts::PI / (4.0 * epsilon_min)).ceil() as u64)
}

/// Smallest `m` with `sin²((2m+1)θ) ≥ level`, if any below `limit`.
pub fn iterations_to_reach(theta: f64, level: f64, limit: u64) -> Option<u64> {
    (0..=limit).find(|&m| (((2 * m + 1) as f64) * theta).sin().powi(2) >= level)
}

/// One schedule entry's outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleResult {
    pub iterations: u64,
    pub exact: f64,
    pub estimate: RecurrenceEstimate,
}

/// Runs every entry of the schedule for `ε_min`, each with its own stream.
pub fn run_schedule(
    setup: &AmplifierSetup,
    epsilon_min: f64,
    shots: u64,
    seed: u64,
    event: DetectionEvent,
) -> Result<Vec<ScheduleResult>> {
    guess_schedule(schedule_cap(epsilon_min)?)?
        .into_iter()
        .map(|m| {
            let s = rng::derive_seed(seed, &format!("schedule-{m}"));
            Ok(ScheduleResult {
                iterations: m,
                exact: setup.exact_detection(m, event)?,
                estimate: amplified_recurrence(setup, m, shots, s, event)?,
            })
        })
        .collect()
}
