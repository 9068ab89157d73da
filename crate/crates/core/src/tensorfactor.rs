//! Set-sum factorization of spectra. A multiset of `k = Π k_a` reals is
//! solvable in format `(k_1, …, k_r)` when it equals the multiset of sums
//! `x^{(1)}_{i_1} + ⋯ + x^{(r)}_{i_r}` for some axis values; the bijection to
//! grid cells is unknown. Log singular values of a Kronecker product are
//! solvable in the product format, and so are eigenphases of a unitary
//! Kronecker product, modulo 2π.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigendecompose_unitary, svd, ComplexMatrix, UnitaryMatrix};

/// Default node budget for the branch-and-bound searches.
pub const DEFAULT_NODE_BUDGET: u64 = 1_000_000;

/// Relative tolerance of the exact solver.
pub const EXACT_TOLERANCE: f64 = 1e-9;

/// Largest unitary accepted by [`detect_hidden_tensor_unitary`].
pub const MAX_DETECT_DIM: usize = 1 << 12;

/// Singular values below this have no usable logarithm.
pub const MIN_SINGULAR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorFormat {
    axes: Vec<usize>,
}

impl TensorFormat {
    pub fn new(axes: Vec<usize>) -> Result<Self> {
        if axes.is_empty() || axes.contains(&0) {
            return Err(Error::InvalidArgument(
                "format needs at least one axis, each of length >= 1".into(),
            ));
        }
        axes.iter()
            .try_fold(1usize, |acc, &k| acc.checked_mul(k))
            .ok_or_else(|| Error::InvalidArgument("format size overflows".into()))?;
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn size(&self) -> usize {
        self.axes.iter().product()
    }

    /// Multi-index of grid cell `cell` in lexicographic order.
    pub fn multi_index(&self, mut cell: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (a, &k) in self.axes.iter().enumerate().rev() {
            idx[a] = cell % k;
            cell /= k;
        }
        idx
    }
}

/// How far a candidate solution may deviate from the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Budget {
    /// Every equation within [`EXACT_TOLERANCE`] (relative to the value scale).
    Exact,
    /// Every equation within ε.
    PerEquation(f64),
    /// Root mean square residual at most ε.
    Rms(f64),
    /// At most `fraction·k` equations off by more than `tol`.
    Fraction { tol: f64, fraction: f64 },
}

impl Budget {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Budget::Exact => true,
            Budget::PerEquation(e) | Budget::Rms(e) => e > 0.0,
            Budget::Fraction { tol, fraction } => tol > 0.0 && (0.0..=1.0).contains(&fraction),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid budget {self:?}")))
        }
    }

    fn accepts(&self, residuals: &[f64], scale: f64) -> bool {
        match *self {
            Budget::Exact => max_abs(residuals) <= EXACT_TOLERANCE * scale,
            Budget::PerEquation(e) => max_abs(residuals) <= e,
            Budget::Rms(e) => rms(residuals) <= e,
            Budget::Fraction { tol, fraction } => {
                residuals.iter().filter(|r| r.abs() > tol).count()
                    <= allowed_misses(fraction, residuals.len())
            }
        }
    }

    /// Smaller is better; used to pick between the search and the refit.
    fn score(&self, residuals: &[f64]) -> f64 {
        match *self {
            Budget::Exact | Budget::PerEquation(_) => max_abs(residuals),
            Budget::Rms(_) => rms(residuals),
            Budget::Fraction { tol, .. } => {
                residuals.iter().filter(|r| r.abs() > tol).count() as f64
            }
        }
    }
}

fn allowed_misses(fraction: f64, k: usize) -> usize {
    (fraction * k as f64 + 1e-12).floor() as usize
}

fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn rms(r: &[f64]) -> f64 {
    if r.is_empty() {
        0.0
    } else {
        (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSumInstance {
    values: Vec<f64>,
    format: TensorFormat,
    budget: Budget,
}

impl SetSumInstance {
    /// Values are stored in descending order.
    pub fn new(mut values: Vec<f64>, format: TensorFormat, budget: Budget) -> Result<Self> {
        if values.len() != format.size() {
            return Err(Error::LengthMismatch {
                expected: format.size(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("values must be finite".into()));
        }
        budget.validate()?;
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            values,
            format,
            budget,
        })
    }

    /// Logarithms of singular values.
    pub fn from_singular_values(
        singulars: &[f64],
        format: TensorFormat,
        budget: Budget,
    ) -> Result<Self> {
        if let Some(&s) = singulars.iter().find(|&&s| !(s >= MIN_SINGULAR)) {
            return Err(Error::RankDeficiency(s));
        }
        Self::new(singulars.iter().map(|s| s.ln()).collect(), format, budget)
    }

    /// Log singular values of `m`.
    pub fn from_matrix(m: &ComplexMatrix, format: TensorFormat, budget: Budget) -> Result<Self> {
        let d = svd(m)?;
        Self::from_singular_values(&d.singulars, format, budget)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn format(&self) -> &TensorFormat {
        &self.format
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn with_budget(&self, budget: Budget) -> Result<Self> {
        budget.validate()?;
        Ok(Self {
            budget,
            ..self.clone()
        })
    }

    fn scale(&self) -> f64 {
        self.values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSumSolution {
    /// `x^{(a)}_i`.
    pub axis_values: Vec<Vec<f64>>,
    /// Grid cell (lexicographic) to index into the instance's descending values.
    pub bijection: Vec<usize>,
    /// `value[bijection[cell]] − predicted(cell)`.
    pub residuals: Vec<f64>,
}

impl SetSumSolution {
    pub fn forward(&self) -> Vec<f64> {
        forward(&self.axis_values)
    }

    pub fn max_residual(&self) -> f64 {
        max_abs(&self.residuals)
    }
}

/// Grid sums in lexicographic cell order.
pub fn forward_grid(axes: &[Vec<f64>]) -> Vec<f64> {
    axes.iter().fold(vec![0.0], |acc, axis| {
        acc.iter()
            .flat_map(|s| axis.iter().map(move |x| s + x))
            .collect()
    })
}

/// All grid sums, descending.
pub fn forward(axes: &[Vec<f64>]) -> Vec<f64> {
    let mut v = forward_grid(axes);
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Shifts every axis but the first to minimum 0, moving the offsets into the
/// first axis.
pub fn gauge_normalize(solution: &SetSumSolution) -> SetSumSolution {
    let mut s = solution.clone();
    let mut carry = 0.0;
    for axis in s.axis_values.iter_mut().skip(1) {
        let min = axis.iter().copied().fold(f64::INFINITY, f64::min);
        if min != 0.0 && min.is_finite() {
            axis.iter_mut().for_each(|x| *x -= min);
            carry += min;
        }
    }
    if carry != 0.0 {
        s.axis_values[0].iter_mut().for_each(|x| *x += carry);
    }
    s
}

/// Pairs grid cells and values in sorted order, which minimizes the largest
/// residual; equal values go to cells in lexicographic order.
fn sorted_matching(values: &[f64], axes: &[Vec<f64>]) -> SetSumSolution {
    let grid = forward_grid(axes);
    let mut cells: Vec<usize> = (0..grid.len()).collect();
    cells.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]).then(a.cmp(&b)));
    let mut bijection = vec![0; grid.len()];
    for (rank, &cell) in cells.iter().enumerate() {
        bijection[cell] = rank;
    }
    canonicalize_ties(values, &mut bijection);
    let residuals = (0..grid.len())
        .map(|c| values[bijection[c]] - grid[c])
        .collect();
    SetSumSolution {
        axis_values: axes.to_vec(),
        bijection,
        residuals,
    }
}

/// Among exactly equal values, the lexicographically first cell gets the
/// smallest value index.
fn canonicalize_ties(values: &[f64], bijection: &mut [usize]) {
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] == values[start] {
            end += 1;
        }
        if end - start > 1 {
            let mut cells: Vec<usize> = (0..bijection.len())
                .filter(|&c| (start..end).contains(&bijection[c]))
                .collect();
            cells.sort_unstable();
            for (offset, c) in cells.into_iter().enumerate() {
                bijection[c] = start + offset;
            }
        }
        start = end;
    }
}

/// Closed-form least squares for the additive model on a full grid: the
/// grand mean plus one main effect per axis.
pub fn least_squares_fill(format: &TensorFormat, targets: &[f64]) -> Vec<Vec<f64>> {
    let k = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / k;
    let mut axes: Vec<Vec<f64>> = format.axes().iter().map(|&n| vec![0.0; n]).collect();
    for (cell, t) in targets.iter().enumerate() {
        for (a, &i) in format.multi_index(cell).iter().enumerate() {
            axes[a][i] += t;
        }
    }
    for (a, axis) in axes.iter_mut().enumerate() {
        let per = k / format.axes()[a] as f64;
        axis.iter_mut().for_each(|x| *x = *x / per - mean);
    }
    axes[0].iter_mut().for_each(|x| *x += mean);
    axes
}

/// Refits axis values by least squares for the solution's bijection.
fn refit(values: &[f64], format: &TensorFormat, solution: &SetSumSolution) -> SetSumSolution {
    let targets: Vec<f64> = solution.bijection.iter().map(|&i| values[i]).collect();
    let axes = least_squares_fill(format, &targets);
    let grid = forward_grid(&axes);
    let residuals = targets.iter().zip(&grid).map(|(t, g)| t - g).collect();
    SetSumSolution {
        axis_values: axes,
        bijection: solution.bijection.clone(),
        residuals,
    }
}

/// Descending multiset with tolerant removal.
#[derive(Clone)]
struct Remaining(Vec<f64>);

impl Remaining {
    /// Removes the entry nearest `target`. Returns its distance.
    fn take_nearest(&mut self, target: f64) -> f64 {
        let v = &self.0;
        let pos = v.partition_point(|&x| x > target);
        let mut best = None;
        for cand in [pos.checked_sub(1), Some(pos)].into_iter().flatten() {
            if cand < v.len() {
                let d = (v[cand] - target).abs();
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((cand, d));
                }
            }
        }
        let (idx, d) = best.expect("non-empty");
        self.0.remove(idx);
        d
    }
}

struct AdditiveSearch<'a> {
    sizes: &'a [usize],
    top: f64,
    tol: f64,
    misses_allowed: usize,
    backtrack: bool,
    nodes: u64,
    node_budget: u64,
}

impl AdditiveSearch<'_> {
    /// Axis values relative to the top corner (each axis starts at 0 and is
    /// non-increasing); the top value is added to the first axis by the caller.
    fn run(&mut self, axes: &mut Vec<Vec<f64>>, rem: Remaining, misses: usize) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.node_budget {
            return Err(Error::CapExceeded(self.node_budget));
        }
        if axes.iter().zip(self.sizes).all(|(a, &k)| a.len() == k) {
            return Ok(true);
        }
        let t = rem.0[0] - self.top;
        for a in 0..axes.len() {
            if axes[a].len() == self.sizes[a] {
                continue;
            }
            let last = *axes[a].last().expect("axes start non-empty");
            if t > last + self.tol {
                continue;
            }
            axes[a].push(t);
            if !self.lex_ok(axes, a) {
                axes[a].pop();
                continue;
            }
            let mut rem2 = rem.clone();
            let mut misses2 = misses;
            let feasible = self.remove_new_sums(axes, a, &mut rem2, &mut misses2);
            if feasible {
                if self.run(axes, rem2, misses2)? {
                    return Ok(true);
                }
                if !self.backtrack {
                    axes[a].pop();
                    return Ok(false);
                }
            }
            axes[a].pop();
        }
        Ok(false)
    }

    /// Equal-length axes are interchangeable; keep them in lexicographically
    /// non-increasing order.
    fn lex_ok(&self, axes: &[Vec<f64>], changed: usize) -> bool {
        let k = self.sizes[changed];
        let check = |lo: &[f64], hi: &[f64]| {
            for (x, y) in lo.iter().zip(hi) {
                if x + self.tol < *y {
                    return false;
                }
                if x - self.tol > *y {
                    return true;
                }
            }
            true
        };
        (0..axes.len())
            .filter(|&b| b != changed && self.sizes[b] == k)
            .all(|b| {
                if b < changed {
                    check(&axes[b], &axes[changed])
                } else {
                    check(&axes[changed], &axes[b])
                }
            })
    }

    /// Removes the sums of the newest value on `axis` with every known value
    /// of the other axes.
    fn remove_new_sums(
        &self,
        axes: &[Vec<f64>],
        axis: usize,
        rem: &mut Remaining,
        misses: &mut usize,
    ) -> bool {
        let t = *axes[axis].last().expect("just pushed");
        let mut partial = vec![self.top + t];
        for (b, other) in axes.iter().enumerate() {
            if b != axis {
                partial = partial
                    .iter()
                    .flat_map(|s| other.iter().map(move |x| s + x))
                    .collect();
            }
        }
        if partial.len() > rem.0.len() {
            return false;
        }
        for s in partial {
            if rem.take_nearest(s) > self.tol {
                *misses += 1;
                if *misses > self.misses_allowed {
                    return false;
                }
            }
        }
        true
    }
}

fn search_additive(
    inst: &SetSumInstance,
    tol: f64,
    misses_allowed: usize,
    backtrack: bool,
    node_budget: u64,
) -> Result<Option<SetSumSolution>> {
    let sizes = inst.format.axes();
    let top = inst.values[0];
    let mut axes: Vec<Vec<f64>> = sizes.iter().map(|_| vec![0.0]).collect();
    let rem = Remaining(inst.values[1..].to_vec());
    let mut search = AdditiveSearch {
        sizes,
        top,
        tol,
        misses_allowed,
        backtrack,
        nodes: 0,
        node_budget,
    };
    if !search.run(&mut axes, rem, 0)? {
        return Ok(None);
    }
    axes[0].iter_mut().for_each(|x| *x += top);
    Ok(Some(sorted_matching(&inst.values, &axes)))
}

/// Complete branch-and-bound search. `Ok(None)` certifies that no filling
/// exists within the exact tolerance; an exhausted node budget is an error.
pub fn solve_exact(inst: &SetSumInstance) -> Result<Option<SetSumSolution>> {
    solve_exact_with_budget(inst, DEFAULT_NODE_BUDGET)
}

pub fn solve_exact_with_budget(
    inst: &SetSumInstance,
    node_budget: u64,
) -> Result<Option<SetSumSolution>> {
    let tol = EXACT_TOLERANCE * inst.scale();
    let found = search_additive(inst, tol, 0, true, node_budget)?;
    Ok(found
        .filter(|s| s.max_residual() <= tol)
        .map(|s| gauge_normalize(&s)))
}

/// The same corner-first construction without backtracking, accepted only
/// if the forward map reproduces the values within the instance budget.
pub fn solve_greedy(inst: &SetSumInstance) -> Option<SetSumSolution> {
    let tol = match inst.budget {
        Budget::Exact => EXACT_TOLERANCE * inst.scale(),
        Budget::PerEquation(e) => e,
        Budget::Rms(e) => e * (inst.values.len() as f64).sqrt(),
        Budget::Fraction { tol, .. } => tol,
    };
    let found = search_additive(inst, tol, 0, false, u64::MAX)
        .ok()
        .flatten()?;
    inst.budget
        .accepts(&found.residuals, inst.scale())
        .then(|| gauge_normalize(&found))
}

/// Search tolerances tried in order: a fixed geometric ladder capped by the
/// budget, so a larger budget only adds later rungs.
fn tolerance_ladder(cap: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..64)
        .map(|i| 1e-12 * 2f64.powi(i))
        .take_while(|&t| t <= cap)
        .collect();
    if cap.is_infinite() {
        v.push(f64::INFINITY);
    }
    v
}

/// Budgeted search: for each rung of the tolerance ladder the search result
/// and its least-squares refit are scored, and the first acceptable one is
/// returned.
pub fn solve_approx(inst: &SetSumInstance) -> Result<Option<SetSumSolution>> {
    let k = inst.values.len();
    let (cap, misses) = match inst.budget {
        Budget::Exact => return solve_exact(inst),
        Budget::PerEquation(e) => (e, 0),
        Budget::Rms(e) => (e * (k as f64).sqrt(), 0),
        Budget::Fraction { tol, fraction } => (tol, allowed_misses(fraction, k)),
    };
    for tol in tolerance_ladder(cap) {
        let found = match search_additive(inst, tol, misses, true, DEFAULT_NODE_BUDGET) {
            Ok(f) => f,
            Err(Error::CapExceeded(_)) => None,
            Err(e) => return Err(e),
        };
        let Some(found) = found else { continue };
        let fitted = refit(&inst.values, &inst.format, &found);
        let best = if inst.budget.score(&fitted.residuals) < inst.budget.score(&found.residuals) {
            fitted
        } else {
            found
        };
        if inst.budget.accepts(&best.residuals, inst.scale()) {
            return Ok(Some(gauge_normalize(&best)));
        }
    }
    Ok(None)
}

/// Eigenphases in `[0, 2π)` to be split as sums modulo 2π.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSetSumInstance {
    phases: Vec<f64>,
    format: TensorFormat,
    tolerance: f64,
}

fn to_unit_circle(p: f64) -> f64 {
    let r = p.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

impl PhaseSetSumInstance {
    /// Phases are reduced to `[0, 2π)` and sorted.
    pub fn new(phases: Vec<f64>, format: TensorFormat, tolerance: f64) -> Result<Self> {
        if phases.len() != format.size() {
            return Err(Error::LengthMismatch {
                expected: format.size(),
                found: phases.len(),
            });
        }
        if phases.iter().any(|p| !p.is_finite()) || !(tolerance > 0.0) {
            return Err(Error::InvalidArgument(
                "phases must be finite and the tolerance positive".into(),
            ));
        }
        let mut phases: Vec<f64> = phases.into_iter().map(to_unit_circle).collect();
        phases.sort_by(|a, b| a.total_cmp(b));
        Ok(Self {
            phases,
            format,
            tolerance,
        })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn format(&self) -> &TensorFormat {
        &self.format
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSolution {
    /// Axis phases; every axis but the first starts with 0.
    pub axis_phases: Vec<Vec<f64>>,
    /// Grid cell (lexicographic) to index into the instance's sorted phases.
    pub bijection: Vec<usize>,
    /// Signed angular residuals in `(−π, π]`.
    pub residuals: Vec<f64>,
}

impl PhaseSolution {
    pub fn max_residual(&self) -> f64 {
        max_abs(&self.residuals)
    }
}

/// Remaining phases with their original indices, sorted by phase.
#[derive(Clone)]
struct CircularRemaining(Vec<(f64, usize)>);

impl CircularRemaining {
    fn nearest(&self, target: f64) -> Option<(usize, f64)> {
        let v = &self.0;
        if v.is_empty() {
            return None;
        }
        let t = to_unit_circle(target);
        let pos = v.partition_point(|x| x.0 < t);
        let n = v.len();
        [(pos + n - 1) % n, pos % n]
            .into_iter()
            .map(|i| (i, circ_dist(v[i].0, t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

struct PhaseSearch<'a> {
    sizes: &'a [usize],
    anchor: f64,
    tol: f64,
    nodes: u64,
    node_budget: u64,
    /// Cell (lexicographic) to phase index.
    assignment: Vec<Option<usize>>,
}

impl PhaseSearch<'_> {
    fn next_slot(&self, axes: &[Vec<f64>]) -> Option<usize> {
        (0..axes.len()).find(|&a| axes[a].len() < self.sizes[a])
    }

    fn run(&mut self, axes: &mut Vec<Vec<f64>>, rem: CircularRemaining) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.node_budget {
            return Err(Error::CapExceeded(self.node_budget));
        }
        let Some(a) = self.next_slot(axes) else {
            return Ok(true);
        };
        let prev = *axes[a].last().expect("axes start non-empty");
        let mut last_tried: Option<f64> = None;
        for &(phase, _) in &rem.0 {
            let y = to_unit_circle(phase - self.anchor);
            // within an axis the offsets are non-decreasing in [0, 2π)
            if y + self.tol < prev || last_tried.is_some_and(|l| (y - l).abs() <= self.tol) {
                continue;
            }
            last_tried = Some(y);
            axes[a].push(y);
            let mut rem2 = rem.clone();
            let saved = self.assignment.clone();
            if self.remove_new_sums(axes, a, &mut rem2) && self.run(axes, rem2)? {
                return Ok(true);
            }
            self.assignment = saved;
            axes[a].pop();
        }
        Ok(false)
    }

    fn remove_new_sums(
        &mut self,
        axes: &[Vec<f64>],
        axis: usize,
        rem: &mut CircularRemaining,
    ) -> bool {
        let i = axes[axis].len() - 1;
        // cells whose coordinate on `axis` is i and whose other coordinates are known
        let mut cells: Vec<(Vec<usize>, f64)> = vec![(vec![], self.anchor)];
        for (b, vals) in axes.iter().enumerate() {
            let choices: Vec<usize> = if b == axis {
                vec![i]
            } else {
                (0..vals.len()).collect()
            };
            cells = cells
                .into_iter()
                .flat_map(|(idx, s)| {
                    choices
                        .iter()
                        .map(move |&c| {
                            let mut idx = idx.clone();
                            idx.push(c);
                            (idx, s + axes[b][c])
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        for (idx, s) in cells {
            let Some((pos, d)) = rem.nearest(s) else {
                return false;
            };
            if d > self.tol {
                return false;
            }
            let (_, orig) = rem.0.remove(pos);
            let cell = idx
                .iter()
                .zip(self.sizes)
                .fold(0usize, |acc, (&c, &k)| acc * k + c);
            self.assignment[cell] = Some(orig);
        }
        true
    }
}

/// Circular set-sum search. The smallest phase is pinned to the zero cell;
/// each further axis offset is a difference between a remaining phase and
/// that anchor.
pub fn solve_phase(inst: &PhaseSetSumInstance) -> Result<Option<PhaseSolution>> {
    solve_phase_with_budget(inst, DEFAULT_NODE_BUDGET)
}

pub fn solve_phase_with_budget(
    inst: &PhaseSetSumInstance,
    node_budget: u64,
) -> Result<Option<PhaseSolution>> {
    let sizes = inst.format.axes();
    let anchor = inst.phases[0];
    let mut assignment = vec![None; inst.phases.len()];
    assignment[0] = Some(0);
    let rem = CircularRemaining(
        inst.phases
            .iter()
            .copied()
            .enumerate()
            .skip(1)
            .map(|(i, p)| (p, i))
            .collect(),
    );
    let mut axes: Vec<Vec<f64>> = sizes.iter().map(|_| vec![0.0]).collect();
    let mut search = PhaseSearch {
        sizes,
        anchor,
        tol: inst.tolerance,
        nodes: 0,
        node_budget,
        assignment,
    };
    if !search.run(&mut axes, rem)? {
        return Ok(None);
    }
    axes[0]
        .iter_mut()
        .for_each(|x| *x = to_unit_circle(*x + anchor));
    let bijection: Vec<usize> = search
        .assignment
        .into_iter()
        .map(|a| a.expect("complete"))
        .collect();
    let grid = forward_grid(&axes);
    let residuals = bijection
        .iter()
        .zip(&grid)
        .map(|(&i, g)| crate::linalg::wrap_angle(inst.phases[i] - g))
        .collect();
    Ok(Some(PhaseSolution {
        axis_phases: axes,
        bijection,
        residuals,
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Yes(PhaseSolution),
    No,
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes(_))
    }
}

/// Whether the eigenphases of `u` fill the format's grid as circular sums
/// within `tol`.
pub fn detect_hidden_tensor_unitary(
    u: &UnitaryMatrix,
    format: &TensorFormat,
    tol: f64,
) -> Result<Verdict> {
    if u.dim() > MAX_DETECT_DIM {
        return Err(Error::Sizing {
            what: "unitary dimension",
            requested: u.dim(),
            cap: MAX_DETECT_DIM,
        });
    }
    if u.dim() != format.size() {
        return Err(Error::DimensionMismatch {
            expected: format.size(),
            found: u.dim(),
        });
    }
    let eig = eigendecompose_unitary(u)?;
    let inst = PhaseSetSumInstance::new(eig.eigenphases, format.clone(), tol)?;
    Ok(match solve_phase(&inst)? {
        Some(s) => Verdict::Yes(s),
        None => Verdict::No,
    })
}
