//! Discrete Sternfeld arrays on integer grids: rook circuits, the WRC bound,
//! signed measures with vanishing marginals, the rank test for WDSA site sets
//! and the partial tensor embedding of a rank-|S| operator.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{svd, ComplexMatrix, C64};

/// Pivot threshold of the floating-point rank test.
pub const RANK_PIVOT: f64 = 1e-9;

/// Site sets up to this size use exact integer elimination by default.
pub const EXACT_RANK_SITES: usize = 64;

/// Largest site set or grid accepted by the linear-algebra decisions.
pub const MAX_LINEAR_SITES: usize = 4096;

/// Largest `p·q` for the exhaustive subset scan.
pub const MAX_SCAN_CELLS: usize = 20;

/// Singular values above this count towards the rank in the embedding.
pub const EMBED_RANK_THRESHOLD: f64 = 1e-10;

const MARGINAL_TOL: f64 = 1e-12;

pub type Site = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    dims: Vec<usize>,
}

impl Grid {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(
                "grid needs at least two axes, each of length >= 1".into(),
            ));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn cells(&self) -> usize {
        self.dims.iter().product()
    }

    fn contains(&self, s: &[usize]) -> bool {
        s.len() == self.dims.len() && s.iter().zip(&self.dims).all(|(x, d)| x < d)
    }

    /// Every site in lexicographic order.
    pub fn all_sites(&self) -> Vec<Site> {
        (0..self.cells()).map(|c| self.site_of(c)).collect()
    }

    fn site_of(&self, mut cell: usize) -> Site {
        let mut s = vec![0; self.dims.len()];
        for (a, &d) in self.dims.iter().enumerate().rev() {
            s[a] = cell % d;
            cell /= d;
        }
        s
    }

    fn cell_of(&self, s: &[usize]) -> usize {
        s.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&x, &d)| acc * d + x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSubset {
    grid: Grid,
    sites: Vec<Site>,
}

impl GridSubset {
    /// Sites are kept in lexicographic order.
    pub fn new(grid: Grid, sites: Vec<Site>) -> Result<Self> {
        if let Some(bad) = sites.iter().find(|s| !grid.contains(s)) {
            return Err(Error::InvalidArgument(format!(
                "site {bad:?} is outside grid {:?}",
                grid.dims
            )));
        }
        let set: BTreeSet<Site> = sites.iter().cloned().collect();
        if set.len() != sites.len() {
            return Err(Error::InvalidArgument("duplicate site".into()));
        }
        Ok(Self {
            grid,
            sites: set.into_iter().collect(),
        })
    }

    /// First row together with first column (the first axis-0 slice and
    /// axis-1 slice through the origin).
    pub fn first_row_and_column(grid: Grid) -> Result<Self> {
        if grid.rank() != 2 {
            return Err(Error::InvalidArgument(
                "first_row_and_column needs a 2D grid".into(),
            ));
        }
        let (p, q) = (grid.dims[0], grid.dims[1]);
        let sites = (0..q)
            .map(|c| vec![0, c])
            .chain((1..p).map(|r| vec![r, 0]))
            .collect();
        Self::new(grid, sites)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, s: &[usize]) -> bool {
        self.sites.binary_search_by(|x| x.as_slice().cmp(s)).is_ok()
    }

    pub fn with_site(&self, s: Site) -> Result<Self> {
        let mut sites = self.sites.clone();
        sites.push(s);
        Self::new(self.grid.clone(), sites)
    }

    /// Translates the sites towards the origin. Without `toroidal` each axis
    /// is shifted by its smallest used coordinate; with it coordinates wrap
    /// modulo the grid and the lexicographically smallest translate among
    /// those moving a site to the origin is chosen.
    pub fn normalized(&self, toroidal: bool) -> Self {
        if self.sites.is_empty() {
            return self.clone();
        }
        let shift_by = |shift: &[usize]| -> Vec<Site> {
            let mut v: Vec<Site> = self
                .sites
                .iter()
                .map(|s| {
                    s.iter()
                        .zip(shift)
                        .zip(&self.grid.dims)
                        .map(|((&x, &o), &d)| (x + d - o) % d)
                        .collect()
                })
                .collect();
            v.sort();
            v
        };
        let sites = if toroidal {
            self.sites
                .iter()
                .map(|s| shift_by(s))
                .min()
                .expect("non-empty")
        } else {
            let mins: Vec<usize> = (0..self.grid.rank())
                .map(|a| self.sites.iter().map(|s| s[a]).min().expect("non-empty"))
                .collect();
            shift_by(&mins)
        };
        Self {
            grid: self.grid.clone(),
            sites,
        }
    }
}

/// Closed rook path; consecutive turning points differ in exactly one
/// coordinate, alternating between rows and columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RookPath {
    pub turning_points: Vec<Site>,
}

impl RookPath {
    pub fn is_valid(&self) -> bool {
        let n = self.turning_points.len();
        if n < 4 || n % 2 == 1 {
            return false;
        }
        let moved_axis = |a: &Site, b: &Site| -> Option<usize> {
            let diff: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
            (a.len() == 2 && diff.len() == 1).then(|| diff[0])
        };
        let axes: Option<Vec<usize>> = (0..n)
            .map(|i| moved_axis(&self.turning_points[i], &self.turning_points[(i + 1) % n]))
            .collect();
        match axes {
            Some(ax) => (0..n).all(|i| ax[i] != ax[(i + 1) % n]),
            None => false,
        }
    }

    /// `±1` alternating along the path.
    pub fn alternating_measure(&self, grid: Grid) -> SignedGridMeasure {
        let weights = (0..self.turning_points.len())
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        SignedGridMeasure {
            grid,
            support: self.turning_points.clone(),
            weights,
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

fn require_2d(s: &GridSubset) -> Result<(usize, usize)> {
    match s.grid.dims[..] {
        [p, q] => Ok((p, q)),
        _ => Err(Error::InvalidArgument(
            "rook circuits are defined on 2D grids; use is_wdsa".into(),
        )),
    }
}

/// Sites are edges of the bipartite rows/columns graph; a rook circuit is a
/// cycle. The first edge closing a cycle is completed by the forest path
/// between its endpoints.
pub fn find_rook_circuit(s: &GridSubset) -> Result<Option<RookPath>> {
    let (p, q) = require_2d(s)?;
    let mut uf = UnionFind::new(p + q);
    let mut adj: Vec<Vec<(usize, usize)>> = vec![vec![]; p + q];
    for (e, site) in s.sites.iter().enumerate() {
        let (r, c) = (site[0], p + site[1]);
        if !uf.union(r, c) {
            let path = forest_path(&adj, c, r);
            let mut turning_points: Vec<Site> =
                path.into_iter().map(|i| s.sites[i].clone()).collect();
            turning_points.push(site.clone());
            return Ok(Some(RookPath { turning_points }));
        }
        adj[r].push((c, e));
        adj[c].push((r, e));
    }
    Ok(None)
}

/// Edge indices along the unique forest path from `from` to `to`.
fn forest_path(adj: &[Vec<(usize, usize)>], from: usize, to: usize) -> Vec<usize> {
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for &(w, e) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                prev[w] = Some((v, e));
                queue.push_back(w);
            }
        }
    }
    let mut edges = vec![];
    let mut cur = to;
    while let Some((v, e)) = prev[cur] {
        edges.push(e);
        cur = v;
    }
    edges.reverse();
    edges
}

pub fn is_wrc(s: &GridSubset) -> Result<bool> {
    Ok(find_rook_circuit(s)?.is_none())
}

fn mask_is_wrc(p: usize, q: usize, mask: u32) -> bool {
    let mut uf = UnionFind::new(p + q);
    (0..p * q)
        .filter(|&b| mask >> b & 1 == 1)
        .all(|b| uf.union(b / q, p + b % q))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WrcBoundReport {
    pub p: usize,
    pub q: usize,
    pub subsets_checked: u64,
    pub max_wrc_size: usize,
    /// WRC subsets with at least `p + q` sites (the bound says none exist).
    pub violations: u64,
    /// A WRC of size `p + q − 1`.
    pub witness: Vec<Site>,
    pub bound_holds: bool,
}

/// Scans all `2^{pq}` subsets of the `p × q` grid.
pub fn check_wrc_bound(p: usize, q: usize) -> Result<WrcBoundReport> {
    if p == 0 || q == 0 {
        return Err(Error::InvalidArgument(
            "grid sides must be at least 1".into(),
        ));
    }
    let cells = p * q;
    if cells > MAX_SCAN_CELLS {
        return Err(Error::Sizing {
            what: "grid cells for an exhaustive scan",
            requested: cells,
            cap: MAX_SCAN_CELLS,
        });
    }
    let total = 1u64 << cells;
    let chunk = 1u64 << cells.min(12);
    let parts = exec::map_range((total / chunk) as usize, |i| {
        let (mut best, mut bad) = (0usize, 0u64);
        for mask in i as u64 * chunk..(i as u64 + 1) * chunk {
            let m = mask as u32;
            if mask_is_wrc(p, q, m) {
                let size = m.count_ones() as usize;
                best = best.max(size);
                if size >= p + q {
                    bad += 1;
                }
            }
        }
        (best, bad)
    });
    let max_wrc_size = parts.iter().map(|x| x.0).max().unwrap_or(0);
    let violations = parts.iter().map(|x| x.1).sum();
    let witness = GridSubset::first_row_and_column(Grid::new(vec![p, q])?)?;
    let witness_ok = is_wrc(&witness)? && witness.len() == p + q - 1;
    Ok(WrcBoundReport {
        p,
        q,
        subsets_checked: total,
        max_wrc_size,
        violations,
        witness: witness.sites,
        bound_holds: violations == 0 && witness_ok && max_wrc_size == p + q - 1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedGridMeasure {
    pub grid: Grid,
    pub support: Vec<Site>,
    pub weights: Vec<f64>,
}

impl SignedGridMeasure {
    pub fn new(grid: Grid, support: Vec<Site>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: support.len(),
                found: weights.len(),
            });
        }
        if let Some(bad) = support.iter().find(|s| !grid.contains(s)) {
            return Err(Error::InvalidArgument(format!(
                "site {bad:?} is outside the grid"
            )));
        }
        Ok(Self {
            grid,
            support,
            weights,
        })
    }
}

/// Push-forward of the measure to each axis.
pub fn marginals(m: &SignedGridMeasure) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = m.grid.dims.iter().map(|&d| vec![0.0; d]).collect();
    for (s, w) in m.support.iter().zip(&m.weights) {
        for (a, &x) in s.iter().enumerate() {
            out[a][x] += w;
        }
    }
    out
}

/// Non-zero measure whose marginals all vanish.
pub fn is_dsa_measure(m: &SignedGridMeasure) -> bool {
    m.weights.iter().any(|w| w.abs() > MARGINAL_TOL)
        && marginals(m)
            .iter()
            .flatten()
            .all(|x| x.abs() <= MARGINAL_TOL)
}

/// How [`is_wdsa_with`] computes the rank of the marginal map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankMode {
    /// Exact up to [`EXACT_RANK_SITES`] sites, floating-point beyond.
    Auto,
    Float,
    Exact,
}

/// Marginal map restricted to `S`: one row per (axis, coordinate), one column
/// per site.
fn constraint_rows(s: &GridSubset) -> Vec<Vec<u8>> {
    let mut rows = vec![];
    for (a, &d) in s.grid.dims.iter().enumerate() {
        for t in 0..d {
            rows.push(s.sites.iter().map(|site| (site[a] == t) as u8).collect());
        }
    }
    rows
}

fn check_linear_size(s: &GridSubset) -> Result<()> {
    let n = s.len().max(s.grid.dims.iter().sum());
    if n > MAX_LINEAR_SITES {
        return Err(Error::Sizing {
            what: "sites for the rank test",
            requested: n,
            cap: MAX_LINEAR_SITES,
        });
    }
    Ok(())
}

fn float_rank(rows: &[Vec<u8>], cols: usize) -> usize {
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as f64).collect())
        .collect();
    rref(&mut a, cols).len()
}

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(a: &mut [Vec<f64>], cols: usize) -> Vec<usize> {
    let mut pivots = vec![];
    let mut row = 0;
    for col in 0..cols {
        if row == a.len() {
            break;
        }
        let (best, val) = (row..a.len())
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("rows remain");
        if val <= RANK_PIVOT {
            continue;
        }
        a.swap(row, best);
        let p = a[row][col];
        a[row].iter_mut().for_each(|x| *x /= p);
        for r in 0..a.len() {
            if r != row && a[r][col] != 0.0 {
                let f = a[r][col];
                let (src, dst) = if r < row {
                    let (lo, hi) = a.split_at_mut(row);
                    (&hi[0], &mut lo[r])
                } else {
                    let (lo, hi) = a.split_at_mut(r);
                    (&lo[row], &mut hi[0])
                };
                dst.iter_mut().zip(src).for_each(|(d, s)| *d -= f * s);
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Fraction-free (Bareiss) elimination over the integers.
fn exact_rank(rows: &[Vec<u8>], cols: usize) -> usize {
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == a.len() {
            break;
        }
        let Some(p) = (rank..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for i in rank + 1..a.len() {
            for j in col + 1..cols {
                let v = (&a[i][j] * &a[rank][col] - &a[i][col] * &a[rank][j]) / &prev;
                a[i][j] = v;
            }
            a[i][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

/// True when no non-zero measure on `S` has vanishing marginals, i.e. the
/// marginal map restricted to `S` is injective.
pub fn is_wdsa(s: &GridSubset) -> Result<bool> {
    is_wdsa_with(s, RankMode::Auto)
}

pub fn is_wdsa_with(s: &GridSubset, mode: RankMode) -> Result<bool> {
    check_linear_size(s)?;
    if s.is_empty() {
        return Ok(true);
    }
    let rows = constraint_rows(s);
    let exact = match mode {
        RankMode::Auto => s.len() <= EXACT_RANK_SITES,
        RankMode::Float => false,
        RankMode::Exact => true,
    };
    let rank = if exact {
        exact_rank(&rows, s.len())
    } else {
        float_rank(&rows, s.len())
    };
    Ok(rank == s.len())
}

/// A vanishing-marginal measure on `S` read off the kernel of the marginal
/// map, scaled to unit maximum weight. Its support need not be minimal.
pub fn dsa_witness(s: &GridSubset) -> Result<Option<SignedGridMeasure>> {
    check_linear_size(s)?;
    let n = s.len();
    let mut a: Vec<Vec<f64>> = constraint_rows(s)
        .into_iter()
        .map(|r| r.into_iter().map(|x| x as f64).collect())
        .collect();
    let pivots = rref(&mut a, n);
    let Some(free) = (0..n).find(|c| !pivots.contains(c)) else {
        return Ok(None);
    };
    let mut w = vec![0.0; n];
    w[free] = 1.0;
    for (row, &pc) in pivots.iter().enumerate() {
        w[pc] = -a[row][free];
    }
    let scale = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (support, weights): (Vec<Site>, Vec<f64>) = s
        .sites
        .iter()
        .zip(&w)
        .filter(|(_, x)| x.abs() > MARGINAL_TOL)
        .map(|(site, x)| (site.clone(), x / scale))
        .unzip();
    Ok(Some(SignedGridMeasure::new(
        s.grid.clone(),
        support,
        weights,
    )?))
}

/// Per-axis labels whose coordinate sums reproduce `values` on the sites of
/// `S` (minimum-norm least squares). `None` when the residual exceeds 1e-9.
pub fn solve_labels_on_subset(s: &GridSubset, values: &[f64]) -> Result<Option<Vec<Vec<f64>>>> {
    if values.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: s.len(),
            found: values.len(),
        });
    }
    check_linear_size(s)?;
    let dims = &s.grid.dims;
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &d| Some(std::mem::replace(acc, *acc + d)))
        .collect();
    let unknowns: usize = dims.iter().sum();
    if s.is_empty() {
        return Ok(Some(dims.iter().map(|&d| vec![0.0; d]).collect()));
    }
    let a = DMatrix::<f64>::from_fn(s.len(), unknowns, |i, j| {
        s.sites[i]
            .iter()
            .enumerate()
            .any(|(ax, &x)| offsets[ax] + x == j) as u8 as f64
    });
    let b = DVector::from_column_slice(values);
    let x = a
        .clone()
        .svd_unordered(true, true)
        .solve(&b, 1e-10)
        .map_err(|e| Error::Numerical(format!("label least squares: {e}")))?;
    let residual = (&a * &x - &b).amax();
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if residual > 1e-9 * scale {
        return Ok(None);
    }
    Ok(Some(
        dims.iter()
            .enumerate()
            .map(|(ax, &d)| (0..d).map(|t| x[offsets[ax] + t]).collect())
            .collect(),
    ))
}

/// `M = V†·(O_1 ⊗ ⋯ ⊗ O_r)·U` on the rank-|S| part of `M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialTensorEmbedding {
    /// Diagonal factors with entries `exp(label)`.
    pub factors: Vec<ComplexMatrix>,
    /// Maps right singular vectors of `M` to site basis vectors (`D × cols`).
    pub u: ComplexMatrix,
    /// Maps left singular vectors of `M` to site basis vectors (`D × rows`).
    pub v: ComplexMatrix,
    /// Site receiving the i-th largest singular value.
    pub sites: Vec<Site>,
    pub singular_values: Vec<f64>,
    pub residual: f64,
}

/// The i-th largest singular value goes to the i-th site in lexicographic
/// order; the factor labels are solved from the log singular values.
pub fn partial_tensor_embed(m: &ComplexMatrix, s: &GridSubset) -> Result<PartialTensorEmbedding> {
    let dec = svd(m)?;
    let rank = dec.rank(EMBED_RANK_THRESHOLD);
    if rank != s.len() {
        return Err(Error::RankMismatch {
            rank,
            sites: s.len(),
        });
    }
    let big = s.grid.cells();
    if big > MAX_LINEAR_SITES {
        return Err(Error::Sizing {
            what: "grid cells for the embedding",
            requested: big,
            cap: MAX_LINEAR_SITES,
        });
    }
    if !is_wdsa(s)? {
        return Err(Error::NotWdsa);
    }
    let sigmas = dec.singulars[..rank].to_vec();
    let logs: Vec<f64> = sigmas.iter().map(|x| x.ln()).collect();
    let labels = solve_labels_on_subset(s, &logs)?.ok_or(Error::NotWdsa)?;
    let factors: Vec<ComplexMatrix> = labels
        .iter()
        .map(|l| {
            ComplexMatrix::from_diagonal(
                &l.iter().map(|x| C64::new(x.exp(), 0.0)).collect::<Vec<_>>(),
            )
        })
        .collect();
    let cells: Vec<usize> = s.sites.iter().map(|site| s.grid.cell_of(site)).collect();
    let mut u = ComplexMatrix::zeros(big, m.cols());
    let mut v = ComplexMatrix::zeros(big, m.rows());
    for (i, &cell) in cells.iter().enumerate() {
        for c in 0..m.cols() {
            u[(cell, c)] = dec.right[(c, i)].conj();
        }
        for r in 0..m.rows() {
            v[(cell, r)] = dec.left[(r, i)].conj();
        }
    }
    // ⊗O_a is diagonal, so apply it entrywise
    let diag: Vec<f64> = (0..big)
        .map(|cell| {
            s.grid
                .site_of(cell)
                .iter()
                .enumerate()
                .map(|(a, &x)| labels[a][x])
                .sum::<f64>()
                .exp()
        })
        .collect();
    let mut ou = u.clone();
    for (cell, d) in diag.iter().enumerate() {
        for c in 0..m.cols() {
            ou[(cell, c)] *= d;
        }
    }
    let assembled = v.adjoint().matmul(&ou)?;
    let truncated = ComplexMatrix::from_fn(m.rows(), m.cols(), |r, c| {
        (0..rank)
            .map(|i| dec.left[(r, i)] * dec.singulars[i] * dec.right[(c, i)].conj())
            .sum()
    });
    let residual = assembled.max_abs_diff(&truncated);
    if !(residual <= 1e-9 * sigmas[0].max(1.0)) {
        return Err(Error::Numerical(format!("embedding residual {residual:e}")));
    }
    Ok(PartialTensorEmbedding {
        factors,
        u,
        v,
        sites: s.sites.clone(),
        singular_values: sigmas,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(d: &[usize]) -> Grid {
        Grid::new(d.to_vec()).unwrap()
    }

    fn subset(d: &[usize], sites: &[&[usize]]) -> GridSubset {
        GridSubset::new(grid(d), sites.iter().map(|s| s.to_vec()).collect()).unwrap()
    }

    #[test]
    fn rectangle_corners() {
        let s = subset(&[3, 3], &[&[0, 1], &[0, 2], &[2, 1], &[2, 2]]);
        let path = find_rook_circuit(&s).unwrap().unwrap();
        assert_eq!(path.turning_points.len(), 4);
        assert!(path.is_valid());
        assert!(is_dsa_measure(&path.alternating_measure(s.grid().clone())));
    }

    #[test]
    fn first_row_and_column_is_wrc() {
        let s = GridSubset::first_row_and_column(grid(&[3, 4])).unwrap();
        assert_eq!(s.len(), 6);
        assert!(is_wrc(&s).unwrap());
        assert!(is_wdsa(&s).unwrap());
        let full = GridSubset::new(grid(&[2, 2]), grid(&[2, 2]).all_sites()).unwrap();
        assert!(!is_wrc(&full).unwrap());
        assert!(find_rook_circuit(&subset(&[2, 2, 2], &[&[0, 0, 0]])).is_err());
    }

    #[test]
    fn bound_scans() {
        assert_eq!(check_wrc_bound(2, 2).unwrap().max_wrc_size, 3);
        let r = check_wrc_bound(3, 3).unwrap();
        assert_eq!(r.max_wrc_size, 5);
        assert!(r.bound_holds);
        let r = check_wrc_bound(1, 4).unwrap();
        assert_eq!(r.max_wrc_size, 4);
        assert_eq!(r.violations, 0);
        assert!(check_wrc_bound(5, 5).is_err());
    }

    #[test]
    fn figure_five_measure() {
        let m = SignedGridMeasure::new(
            grid(&[2, 2]),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
            vec![1.0, -1.0, -1.0, 1.0],
        )
        .unwrap();
        assert_eq!(marginals(&m), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert!(is_dsa_measure(&m));
        let single = SignedGridMeasure::new(grid(&[2, 2]), vec![vec![1, 1]], vec![2.0]).unwrap();
        assert!(!is_dsa_measure(&single));
    }

    #[test]
    fn wdsa_examples() {
        let cube = GridSubset::new(grid(&[2, 2, 2]), grid(&[2, 2, 2]).all_sites()).unwrap();
        assert!(!is_wdsa(&cube).unwrap());
        assert!(!is_wdsa_with(&cube, RankMode::Float).unwrap());
        assert!(is_wdsa(&subset(&[2, 2, 2], &[&[1, 0, 1]])).unwrap());
        let w = dsa_witness(&cube).unwrap().unwrap();
        assert!(is_dsa_measure(&w));
    }

    #[test]
    fn labels() {
        let s = GridSubset::first_row_and_column(grid(&[3, 4])).unwrap();
        let vals = [0.3, -1.0, 2.0, 5.0, 0.1, 7.0];
        let l = solve_labels_on_subset(&s, &vals).unwrap().unwrap();
        for (site, v) in s.sites().iter().zip(vals) {
            assert!((l[0][site[0]] + l[1][site[1]] - v).abs() < 1e-9);
        }
        let sq = subset(&[2, 2], &[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
        assert!(solve_labels_on_subset(&sq, &[1.0, -1.0, -1.0, 1.0])
            .unwrap()
            .is_none());
    }

    #[test]
    fn embed_single_site() {
        let m = ComplexMatrix::from_fn(2, 3, |r, c| {
            C64::new((r + 1) as f64 * (c as f64 - 1.0), 0.0)
        });
        let s = subset(&[1, 1], &[&[0, 0]]);
        let e = partial_tensor_embed(&m, &s).unwrap();
        assert!(e.residual < 1e-12);
        let s2 = subset(&[2, 2], &[&[0, 0], &[1, 1]]);
        assert!(matches!(
            partial_tensor_embed(&m, &s2),
            Err(Error::RankMismatch { rank: 1, sites: 2 })
        ));
    }

    #[test]
    fn normalization() {
        let s = subset(&[3, 4], &[&[1, 2], &[2, 3]]);
        assert_eq!(s.normalized(false).sites(), &[vec![0, 0], vec![1, 1]]);
        let t = subset(&[3, 4], &[&[0, 3], &[2, 0]]);
        assert_eq!(t.normalized(true).sites(), &[vec![0, 0], vec![1, 3]]);
        assert_eq!(is_wrc(&t).unwrap(), is_wrc(&t.normalized(true)).unwrap());
    }
}
