//! Dense pure-state simulation of qubit registers: controlled gate
//! application, dyadic controlled powers, Born probabilities and seeded
//! shot sampling. Qubit 0 is the most significant bit of the basis index.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{reunitarize, ComplexMatrix, UnitaryMatrix, C64, ONE, ZERO};
use crate::rng;

/// Dense amplitude vectors beyond this many qubits are refused.
pub const DEFAULT_QUBIT_CAP: usize = 24;

/// Shots drawn from one seeded stream. Chunks merge in index order, so the
/// histogram does not depend on the number of worker threads.
pub const SHOT_CHUNK: u64 = 8192;

const NORM_TOLERANCE: f64 = 1e-10;

fn check_cap(qubits: usize, cap: usize) -> Result<()> {
    if qubits > cap {
        return Err(Error::Sizing {
            what: "qubits",
            requested: qubits,
            cap,
        });
    }
    Ok(())
}

/// Number register (qubits `0..j`) followed by the state register
/// (qubits `j..j+n`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub number_qubits: usize,
    pub state_qubits: usize,
}

impl RegisterLayout {
    pub fn new(number_qubits: usize, state_qubits: usize) -> Result<Self> {
        Self::with_cap(number_qubits, state_qubits, DEFAULT_QUBIT_CAP)
    }

    pub fn with_cap(number_qubits: usize, state_qubits: usize, cap: usize) -> Result<Self> {
        if state_qubits == 0 {
            return Err(Error::InvalidDimension(
                "state register needs at least one qubit".into(),
            ));
        }
        check_cap(number_qubits + state_qubits, cap)?;
        Ok(Self {
            number_qubits,
            state_qubits,
        })
    }

    pub fn total(&self) -> usize {
        self.number_qubits + self.state_qubits
    }

    pub fn number_register(&self) -> Vec<usize> {
        (0..self.number_qubits).collect()
    }

    pub fn state_register(&self) -> Vec<usize> {
        (self.number_qubits..self.total()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QubitState {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl QubitState {
    /// Wraps amplitudes; the length must be a power of two and the norm 1
    /// within 1e-10.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidDimension(format!(
                "{len} amplitudes is not a power of two"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_cap(num_qubits, DEFAULT_QUBIT_CAP)?;
        let state = Self {
            num_qubits,
            amplitudes,
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "state norm {norm} is not 1"
            )));
        }
        Ok(state)
    }

    /// Normalizes `amplitudes` first.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero vector".into(),
            ));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Self::new(amplitudes)
    }

    /// `|0…0⟩`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_cap(num_qubits, DEFAULT_QUBIT_CAP)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange {
                index,
                qubits: num_qubits,
            });
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Haar-random pure state.
    pub fn random(num_qubits: usize, seed: u64) -> Result<Self> {
        use rand_distr::{Distribution, StandardNormal};
        check_cap(num_qubits, DEFAULT_QUBIT_CAP)?;
        let mut g = rng::rng_from_seed(seed);
        let amps = (0..1usize << num_qubits)
            .map(|_| C64::new(StandardNormal.sample(&mut g), StandardNormal.sample(&mut g)))
            .collect();
        Self::normalized(amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `self ⊗ other`, `self` on the leading qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        check_cap(self.num_qubits + other.num_qubits, DEFAULT_QUBIT_CAP)?;
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            amplitudes.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Ok(Self {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes,
        })
    }

    pub(crate) fn from_trusted(amplitudes: Vec<C64>) -> Self {
        let num_qubits = amplitudes.len().trailing_zeros() as usize;
        Self {
            num_qubits,
            amplitudes,
        }
    }
}

/// A unitary on `targets` (first target = most significant local bit),
/// active when every control qubit is `|1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    matrix: UnitaryMatrix,
    targets: Vec<usize>,
    controls: Vec<usize>,
}

impl GateOp {
    pub fn new(matrix: UnitaryMatrix, targets: Vec<usize>, controls: Vec<usize>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidArgument(
                "gate needs at least one target".into(),
            ));
        }
        let expected = 1usize
            .checked_shl(targets.len() as u32)
            .ok_or_else(|| Error::InvalidArgument("too many targets".into()))?;
        if matrix.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: matrix.dim(),
            });
        }
        let mut seen = targets.clone();
        seen.extend(&controls);
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "targets and controls must be distinct qubits".into(),
            ));
        }
        Ok(Self {
            matrix,
            targets,
            controls,
        })
    }

    pub fn hadamard(target: usize) -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let m = ComplexMatrix::new(2, 2, vec![h, h, h, -h]).expect("2x2");
        Self {
            matrix: UnitaryMatrix::from_trusted(m),
            targets: vec![target],
            controls: vec![],
        }
    }

    pub fn pauli_x(target: usize) -> Self {
        let m = ComplexMatrix::new(2, 2, vec![ZERO, ONE, ONE, ZERO]).expect("2x2");
        Self {
            matrix: UnitaryMatrix::from_trusted(m),
            targets: vec![target],
            controls: vec![],
        }
    }

    /// `diag(1, …, 1, e^{iα})` on `targets`.
    pub fn phase_on_all_ones(alpha: f64, targets: Vec<usize>) -> Result<Self> {
        let dim = 1usize << targets.len();
        let mut phases = vec![0.0; dim];
        phases[dim - 1] = alpha;
        Self::new(UnitaryMatrix::diagonal_phases(&phases), targets, vec![])
    }

    pub fn matrix(&self) -> &UnitaryMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    pub fn with_controls(mut self, controls: Vec<usize>) -> Result<Self> {
        self.controls = controls;
        Self::new(self.matrix, self.targets, self.controls)
    }

    /// Qubits the gate touches: controls then targets.
    pub fn support(&self) -> Vec<usize> {
        let mut s = self.controls.clone();
        s.extend(&self.targets);
        s
    }

    /// The full matrix on [`GateOp::support`], controls included.
    pub fn support_matrix(&self) -> UnitaryMatrix {
        let nc = self.controls.len();
        let k = self.targets.len();
        let dim = 1usize << (nc + k);
        let active = ((1usize << nc) - 1) << k;
        let m = ComplexMatrix::from_fn(dim, dim, |r, c| {
            if r & !((1 << k) - 1) != c & !((1 << k) - 1) {
                ZERO
            } else if r & active == active {
                self.matrix[(r & ((1 << k) - 1), c & ((1 << k) - 1))]
            } else if r == c {
                ONE
            } else {
                ZERO
            }
        });
        UnitaryMatrix::from_trusted(m)
    }

    fn max_qubit(&self) -> usize {
        self.targets
            .iter()
            .chain(&self.controls)
            .copied()
            .max()
            .unwrap_or(0)
    }
}

/// Applies `gate` and returns the new state.
pub fn apply_gate(state: &QubitState, gate: &GateOp) -> Result<QubitState> {
    let nq = state.num_qubits;
    let top = gate.max_qubit();
    if top >= nq {
        return Err(Error::IndexOutOfRange {
            index: top,
            qubits: nq,
        });
    }
    let shift = |q: usize| nq - 1 - q;
    let control_mask: usize = gate.controls.iter().map(|&c| 1usize << shift(c)).sum();
    let k = gate.targets.len();
    let target_shifts: Vec<usize> = gate.targets.iter().map(|&t| shift(t)).collect();
    let target_mask: usize = target_shifts.iter().map(|&s| 1usize << s).sum();
    let offsets: Vec<usize> = (0..1usize << k)
        .map(|local| {
            (0..k)
                .filter(|&t| local >> (k - 1 - t) & 1 == 1)
                .map(|t| 1usize << target_shifts[t])
                .sum()
        })
        .collect();
    let m = gate.matrix.matrix();
    let psi = &state.amplitudes;

    let mut out = vec![ZERO; psi.len()];
    exec::fill_indexed(&mut out, |i| {
        if i & control_mask != control_mask {
            return psi[i];
        }
        let base = i & !target_mask;
        let row = (0..k).fold(0usize, |acc, t| (acc << 1) | (i >> target_shifts[t] & 1));
        m.row(row)
            .iter()
            .zip(&offsets)
            .map(|(a, &off)| a * psi[base | off])
            .sum()
    });
    Ok(QubitState {
        num_qubits: nq,
        amplitudes: out,
    })
}

/// `[U, U², U⁴, …]` (`count` entries) by repeated squaring, re-unitarizing
/// after every squaring.
pub fn dyadic_powers(u: &UnitaryMatrix, count: usize) -> Vec<UnitaryMatrix> {
    let mut out = Vec::with_capacity(count);
    let mut cur = u.clone();
    for p in 0..count {
        if p > 0 {
            let sq = cur.matrix().matmul(cur.matrix()).expect("square");
            cur = UnitaryMatrix::from_trusted(reunitarize(sq));
        }
        out.push(cur.clone());
    }
    out
}

/// Gate applying `U^(2^exponent)` to `state_targets` when `control` is `|1⟩`.
pub fn controlled_power(
    u: &UnitaryMatrix,
    exponent: u32,
    control: usize,
    state_targets: &[usize],
) -> Result<GateOp> {
    let expected = 1usize << state_targets.len();
    if u.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: u.dim(),
        });
    }
    let power = dyadic_powers(u, exponent as usize + 1)
        .pop()
        .expect("non-empty");
    GateOp::new(power, state_targets.to_vec(), vec![control])
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    pub layout: RegisterLayout,
    pub gates: Vec<GateOp>,
}

impl CircuitSpec {
    pub fn new(layout: RegisterLayout, gates: Vec<GateOp>) -> Result<Self> {
        let total = layout.total();
        for g in &gates {
            let top = g.max_qubit();
            if top >= total {
                return Err(Error::IndexOutOfRange {
                    index: top,
                    qubits: total,
                });
            }
        }
        Ok(Self { layout, gates })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: CircuitJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("circuit JSON: {e}")))?;
        let layout = RegisterLayout::new(raw.layout.number_qubits, raw.layout.state_qubits)?;
        let gates = raw
            .gates
            .into_iter()
            .map(GateJson::into_gate)
            .collect::<Result<Vec<_>>>()?;
        Self::new(layout, gates)
    }

    /// JSON with every matrix inline.
    pub fn to_json(&self) -> String {
        let raw = CircuitJson {
            layout: self.layout,
            gates: self
                .gates
                .iter()
                .map(|g| GateJson {
                    name: None,
                    matrix: Some(g.matrix.clone()),
                    targets: g.targets.clone(),
                    controls: g.controls.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("serializable")
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    layout: RegisterLayout,
    gates: Vec<GateJson>,
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<UnitaryMatrix>,
    targets: Vec<usize>,
    #[serde(default)]
    controls: Vec<usize>,
}

impl GateJson {
    fn into_gate(self) -> Result<GateOp> {
        let gate = match (self.name, self.matrix) {
            (Some(name), None) => named_gate(&name, self.targets)?,
            (None, Some(m)) => GateOp::new(m, self.targets, vec![])?,
            _ => {
                return Err(Error::InvalidArgument(
                    "gate needs exactly one of `name` or `matrix`".into(),
                ))
            }
        };
        gate.with_controls(self.controls)
    }
}

/// `H`, `X`, `CPHASE(α)`, `CCPHASE(α)` with α in radians.
fn named_gate(name: &str, targets: Vec<usize>) -> Result<GateOp> {
    let arity = |n: usize| -> Result<()> {
        if targets.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: targets.len(),
            });
        }
        Ok(())
    };
    let angle = |prefix: &str| -> Option<Result<f64>> {
        let inner = name
            .strip_prefix(prefix)?
            .strip_prefix('(')?
            .strip_suffix(')')?;
        Some(
            inner
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("{name}: {e}"))),
        )
    };
    match name {
        "H" => {
            arity(1)?;
            Ok(GateOp::hadamard(targets[0]))
        }
        "X" => {
            arity(1)?;
            Ok(GateOp::pauli_x(targets[0]))
        }
        _ => {
            if let Some(a) = angle("CCPHASE") {
                arity(3)?;
                GateOp::phase_on_all_ones(a?, targets)
            } else if let Some(a) = angle("CPHASE") {
                arity(2)?;
                GateOp::phase_on_all_ones(a?, targets)
            } else {
                Err(Error::InvalidArgument(format!("unknown gate `{name}`")))
            }
        }
    }
}

pub fn run_circuit(circuit: &CircuitSpec, input: &QubitState) -> Result<QubitState> {
    if input.num_qubits() != circuit.layout.total() {
        return Err(Error::DimensionMismatch {
            expected: circuit.layout.total(),
            found: input.num_qubits(),
        });
    }
    circuit
        .gates
        .iter()
        .try_fold(input.clone(), |s, g| apply_gate(&s, g))
}

/// The recurrence circuit: Hadamards on the number register, then number
/// qubit `q` controls `U^(2^(j−1−q))` on the state register, so the number
/// register holds `k` in big-endian order and the output is
/// `2^{−j/2} Σ_k |k⟩ ⊗ U^k|ψ⟩`.
pub fn recurrence_circuit(u: &UnitaryMatrix, layout: RegisterLayout) -> Result<CircuitSpec> {
    let j = layout.number_qubits;
    let targets = layout.state_register();
    let expected = 1usize << targets.len();
    if u.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: u.dim(),
        });
    }
    let mut gates: Vec<GateOp> = (0..j).map(GateOp::hadamard).collect();
    let powers = dyadic_powers(u, j);
    for q in 0..j {
        gates.push(GateOp::new(
            powers[j - 1 - q].clone(),
            targets.clone(),
            vec![q],
        )?);
    }
    CircuitSpec::new(layout, gates)
}

fn register_index(basis: usize, shifts: &[usize]) -> usize {
    shifts
        .iter()
        .fold(0usize, |acc, &s| (acc << 1) | (basis >> s & 1))
}

fn validate_register(state: &QubitState, register: &[usize]) -> Result<Vec<usize>> {
    let nq = state.num_qubits;
    let mut seen = register.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(
            "register lists a qubit twice".into(),
        ));
    }
    register
        .iter()
        .map(|&q| {
            if q < nq {
                Ok(nq - 1 - q)
            } else {
                Err(Error::IndexOutOfRange {
                    index: q,
                    qubits: nq,
                })
            }
        })
        .collect()
}

/// Marginal distribution of a Z-basis measurement of `register`, indexed
/// big-endian in register order.
pub fn register_distribution(state: &QubitState, register: &[usize]) -> Result<Vec<f64>> {
    let shifts = validate_register(state, register)?;
    let mut dist = vec![0.0; 1usize << register.len()];
    for (i, a) in state.amplitudes.iter().enumerate() {
        dist[register_index(i, &shifts)] += a.norm_sqr();
    }
    Ok(dist)
}

pub fn born_probability(state: &QubitState, register: &[usize], outcome: &[bool]) -> Result<f64> {
    if outcome.len() != register.len() {
        return Err(Error::LengthMismatch {
            expected: register.len(),
            found: outcome.len(),
        });
    }
    let shifts = validate_register(state, register)?;
    let want = outcome
        .iter()
        .fold(0usize, |acc, &b| (acc << 1) | b as usize);
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| register_index(*i, &shifts) == want)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Outcome counts keyed by the big-endian register value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    pub width: usize,
    pub counts: BTreeMap<u64, u64>,
}

impl Histogram {
    pub fn shots(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, outcome: u64) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn bitstring(&self, outcome: u64) -> String {
        (0..self.width)
            .rev()
            .map(|b| if outcome >> b & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// Marginal on the leading `bits` qubits.
    pub fn leading(&self, bits: usize) -> Result<Histogram> {
        if bits > self.width {
            return Err(Error::IndexOutOfRange {
                index: bits,
                qubits: self.width,
            });
        }
        let shift = self.width - bits;
        let mut counts = BTreeMap::new();
        for (&o, &c) in &self.counts {
            *counts.entry(o >> shift).or_insert(0) += c;
        }
        Ok(Histogram {
            width: bits,
            counts,
        })
    }

    /// `outcome,count` rows in ascending outcome order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("outcome,count\n");
        for (&o, &c) in &self.counts {
            s.push_str(&format!("{},{}\n", self.bitstring(o), c));
        }
        s
    }
}

/// Draws `shots` iid samples from `dist` (which need not be normalized).
pub fn sample_distribution(dist: &[f64], width: usize, shots: u64, seed: u64) -> Result<Histogram> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for &p in dist {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let last_nonzero = dist.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let chunks = shots.div_ceil(SHOT_CHUNK);
    let partial = exec::map_range(chunks as usize, |c| {
        let n = SHOT_CHUNK.min(shots - c as u64 * SHOT_CHUNK);
        let mut g = rng::stream(seed, c as u64);
        let mut counts = BTreeMap::new();
        for _ in 0..n {
            let u = g.random::<f64>() * total;
            let idx = cdf.partition_point(|&x| x <= u).min(last_nonzero);
            *counts.entry(idx as u64).or_insert(0u64) += 1;
        }
        counts
    });
    let mut counts = BTreeMap::new();
    for part in partial {
        for (k, v) in part {
            *counts.entry(k).or_insert(0) += v;
        }
    }
    Ok(Histogram { width, counts })
}

pub fn sample_measurement(
    state: &QubitState,
    register: &[usize],
    shots: u64,
    seed: u64,
) -> Result<Histogram> {
    let dist = register_distribution(state, register)?;
    sample_distribution(&dist, register.len(), shots, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_unitary;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn hadamard_on_zero() {
        let s = apply_gate(&QubitState::zero(1).unwrap(), &GateOp::hadamard(0)).unwrap();
        assert!((s.amplitudes()[0] - c(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn controlled_x_on_10() {
        let cx = GateOp::pauli_x(1).with_controls(vec![0]).unwrap();
        let s = apply_gate(&QubitState::basis(2, 0b10).unwrap(), &cx).unwrap();
        assert_eq!(s.amplitudes()[0b11], ONE);
        let s = apply_gate(&QubitState::basis(2, 0b00).unwrap(), &cx).unwrap();
        assert_eq!(s.amplitudes()[0b00], ONE);
    }

    #[test]
    fn gate_errors() {
        let s = QubitState::zero(2).unwrap();
        assert!(matches!(
            apply_gate(&s, &GateOp::hadamard(2)),
            Err(Error::IndexOutOfRange { .. })
        ));
        let u = UnitaryMatrix::identity(4);
        assert!(matches!(
            GateOp::new(u.clone(), vec![0], vec![]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(GateOp::new(u, vec![0, 1], vec![1]).is_err());
    }

    #[test]
    fn random_gate_matches_dense_oracle() {
        let s = QubitState::random(4, 3).unwrap();
        let u = haar_unitary(4, 8).unwrap();
        let g = GateOp::new(u.clone(), vec![3, 1], vec![]).unwrap();
        let out = apply_gate(&s, &g).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
        // dense oracle: embed u on qubits (3, 1) explicitly
        let dense = ComplexMatrix::from_fn(16, 16, |r, col| {
            let bit = |x: usize, q: usize| x >> (3 - q) & 1;
            if bit(r, 0) != bit(col, 0) || bit(r, 2) != bit(col, 2) {
                return ZERO;
            }
            let lr = bit(r, 3) << 1 | bit(r, 1);
            let lc = bit(col, 3) << 1 | bit(col, 1);
            u[(lr, lc)]
        });
        let expect = dense.matvec(s.amplitudes()).unwrap();
        let err = expect
            .iter()
            .zip(out.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn support_matrix_embeds_controls() {
        let g = GateOp::pauli_x(2).with_controls(vec![0]).unwrap();
        let m = g.support_matrix();
        assert_eq!(m.dim(), 4);
        assert_eq!(m[(3, 2)], ONE);
        assert_eq!(m[(0, 0)], ONE);
        let s = QubitState::random(3, 1).unwrap();
        let lifted = GateOp::new(m, g.support(), vec![]).unwrap();
        let a = apply_gate(&s, &g).unwrap();
        let b = apply_gate(&s, &lifted).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn controlled_power_examples() {
        let x = GateOp::pauli_x(0).matrix().clone();
        let g = controlled_power(&x, 1, 0, &[1]).unwrap();
        assert!(
            g.matrix()
                .matrix()
                .max_abs_diff(&ComplexMatrix::identity(2))
                < 1e-15
        );
        let alpha = 0.37;
        let d = UnitaryMatrix::diagonal_phases(&[0.0, alpha]);
        let g = controlled_power(&d, 3, 0, &[1]).unwrap();
        assert!((g.matrix()[(1, 1)] - C64::from_polar(1.0, 8.0 * alpha)).norm() < 1e-14);
        assert!(controlled_power(&d, 1, 0, &[1, 2]).is_err());
    }

    #[test]
    fn controlled_power_matches_repeated_multiplication() {
        let u = haar_unitary(8, 21).unwrap();
        let g = controlled_power(&u, 4, 0, &[1, 2, 3]).unwrap();
        let mut brute = ComplexMatrix::identity(8);
        for _ in 0..16 {
            brute = brute.matmul(u.matrix()).unwrap();
        }
        assert!(g.matrix().matrix().max_abs_diff(&brute) < 1e-9);
    }

    #[test]
    fn empty_and_involutive_circuits() {
        let layout = RegisterLayout::new(0, 2).unwrap();
        let s = QubitState::random(2, 4).unwrap();
        let empty = CircuitSpec::new(layout, vec![]).unwrap();
        assert_eq!(run_circuit(&empty, &s).unwrap(), s);
        let hh = CircuitSpec::new(layout, vec![GateOp::hadamard(0), GateOp::hadamard(0)]).unwrap();
        let out = run_circuit(&hh, &s).unwrap();
        let err = out
            .amplitudes()
            .iter()
            .zip(s.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn born_examples() {
        let s = QubitState::zero(2).unwrap();
        assert_eq!(born_probability(&s, &[0, 1], &[false, false]).unwrap(), 1.0);
        let plus = apply_gate(&QubitState::zero(1).unwrap(), &GateOp::hadamard(0)).unwrap();
        assert!((born_probability(&plus, &[0], &[false]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            born_probability(&plus, &[0], &[]),
            Err(Error::LengthMismatch { .. })
        ));
        let r = QubitState::random(5, 2).unwrap();
        let total: f64 = (0..8)
            .map(|o| {
                born_probability(&r, &[4, 0, 2], &[o & 4 != 0, o & 2 != 0, o & 1 != 0]).unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_examples() {
        let one = QubitState::basis(1, 1).unwrap();
        let h = sample_measurement(&one, &[0], 100, 5).unwrap();
        assert_eq!(h.counts, BTreeMap::from([(1, 100)]));
        let plus = apply_gate(&QubitState::zero(1).unwrap(), &GateOp::hadamard(0)).unwrap();
        let shots = 100_000;
        let h = sample_measurement(&plus, &[0], shots, 9).unwrap();
        let f = h.count(0) as f64 / shots as f64;
        let stderr = (0.25 / shots as f64).sqrt();
        assert!((f - 0.5).abs() <= 3.0 * stderr, "freq {f}");
        assert_eq!(h, sample_measurement(&plus, &[0], shots, 9).unwrap());
        assert_eq!(
            h,
            exec::sequential(|| sample_measurement(&plus, &[0], shots, 9).unwrap())
        );
        assert!(sample_measurement(&plus, &[0], 0, 9).is_err());
    }

    #[test]
    fn histogram_csv() {
        let h = Histogram {
            width: 2,
            counts: BTreeMap::from([(0, 3), (2, 1)]),
        };
        assert_eq!(h.to_csv(), "outcome,count\n00,3\n10,1\n");
    }

    #[test]
    fn circuit_json_named_gates() {
        let text = r#"{"layout":{"number_qubits":1,"state_qubits":3},
            "gates":[{"name":"H","targets":[0]},
                     {"name":"CCPHASE(0.5)","targets":[1,2,3],"controls":[0]},
                     {"name":"CPHASE(1.0)","targets":[1,2]},
                     {"name":"X","targets":[3]}]}"#;
        let c = CircuitSpec::from_json(text).unwrap();
        assert_eq!(c.gates.len(), 4);
        assert_eq!(c.gates[1].controls(), &[0]);
        assert!((c.gates[1].matrix()[(7, 7)] - C64::from_polar(1.0, 0.5)).norm() < 1e-15);
        let back = CircuitSpec::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(CircuitSpec::from_json(r#"{"layout":{"number_qubits":0,"state_qubits":1},"gates":[{"name":"Q","targets":[0]}]}"#).is_err());
        assert!(CircuitSpec::from_json(r#"{"layout":{"number_qubits":0,"state_qubits":1},"gates":[{"name":"H","targets":[1]}]}"#).is_err());
    }

    #[test]
    fn sizing_cap() {
        assert!(matches!(
            RegisterLayout::new(20, 5),
            Err(Error::Sizing {
                requested: 25,
                cap: 24,
                ..
            })
        ));
        assert!(matches!(QubitState::zero(25), Err(Error::Sizing { .. })));
    }
}
