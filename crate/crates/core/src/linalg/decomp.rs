use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{ComplexMatrix, UnitaryMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::rng;

/// Eigenphases closer than this are treated as one degenerate cluster.
pub const CLUSTER_GAP: f64 = 1e-8;

/// Principal argument in `(−π, π]`.
pub fn principal_arg(z: C64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Haar-distributed unitary, formed from [`HaarReflections`].
pub fn haar_unitary(dim: usize, seed: u64) -> Result<UnitaryMatrix> {
    Ok(HaarReflections::sample(dim, seed)?.to_unitary())
}

/// Haar unitary held as Householder reflections followed by a diagonal of
/// phases, `U = H₀H₁⋯H_{n−1}Λ`. These are the factors a Householder QR of a
/// Ginibre matrix would produce, so the law matches [`haar_unitary`], but
/// `U·v` costs `O(dim²)` and the matrix is never formed.
#[derive(Clone, Debug)]
pub struct HaarReflections {
    /// Unit reflection vector of step `i`, acting on coordinates `i..dim`.
    vectors: Vec<Vec<C64>>,
    phases: Vec<C64>,
}

impl HaarReflections {
    pub fn sample(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(
                "Haar sampling needs dim >= 1".into(),
            ));
        }
        let mut rng = rng::rng_from_seed(seed);
        let mut vectors = Vec::with_capacity(dim);
        let mut phases = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut x: Vec<C64> = (i..dim)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(re, im)
                })
                .collect();
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let lead = if x[0].norm() > 0.0 {
                x[0] / x[0].norm()
            } else {
                ONE
            };
            // H x = −lead·‖x‖·e₁, so R_ii has phase −lead
            x[0] += lead * norm;
            let wn = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            x.iter_mut().for_each(|z| *z /= wn);
            vectors.push(x);
            phases.push(-lead);
        }
        Ok(Self { vectors, phases })
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let mut out: Vec<C64> = v.iter().zip(&self.phases).map(|(a, p)| a * p).collect();
        for (i, w) in self.vectors.iter().enumerate().rev() {
            let tail = &mut out[i..];
            let dot: C64 = w.iter().zip(tail.iter()).map(|(a, b)| a.conj() * b).sum();
            for (t, a) in tail.iter_mut().zip(w) {
                *t -= a * dot * 2.0;
            }
        }
        Ok(out)
    }

    pub fn to_unitary(&self) -> UnitaryMatrix {
        let n = self.dim();
        let cols: Vec<Vec<C64>> = (0..n)
            .map(|c| {
                let mut e = vec![ZERO; n];
                e[c] = ONE;
                self.apply(&e).expect("matching dimension")
            })
            .collect();
        UnitaryMatrix::from_trusted(ComplexMatrix::from_fn(n, n, |r, c| cols[c][r]))
    }
}

/// Eigenvalues, principal eigenphases and orthonormal eigenvectors (columns),
/// sorted by eigenphase.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<C64>,
    pub eigenphases: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let scaled =
            ComplexMatrix::from_fn(n, n, |r, c| self.eigenvectors[(r, c)] * self.eigenvalues[c]);
        scaled
            .matmul(&self.eigenvectors.adjoint())
            .expect("square factors")
    }
}

/// Rotation `α` in the Hermitian parts of `e^{−iα}U`. Two distinct phases
/// collide under it only when they sum to `2α` modulo `2π`.
const HERMITIAN_ROTATION: f64 = 0.577_215_664_901_532_9;

/// Hermitian eigenvalues closer than this are split again.
const SPLIT_GAP: f64 = 1e-7;

const MAX_SWEEPS: usize = 10_000;

/// Spectral decomposition of a unitary, sorted by eigenphase.
pub fn eigendecompose_unitary(u: &UnitaryMatrix) -> Result<SpectralDecomposition> {
    let n = u.dim();
    let diagonal = u.matrix().is_diagonal();
    let (mut vectors, values) = if diagonal {
        (ComplexMatrix::identity(n), u.matrix().diagonal())
    } else {
        normal_eigen(&u.matrix().to_nalgebra())?
    };

    let mut order: Vec<usize> = (0..n).collect();
    let phases: Vec<f64> = values.iter().map(|&z| principal_arg(z)).collect();
    order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]).then(a.cmp(&b)));
    vectors = ComplexMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    let eigenvalues: Vec<C64> = order
        .iter()
        .map(|&i| values[i] / values[i].norm())
        .collect();
    let eigenphases: Vec<f64> = order.iter().map(|&i| phases[i]).collect();

    if !diagonal {
        for cluster in clusters(&eigenphases) {
            if cluster.len() > 1 {
                orthonormalize_columns(&mut vectors, &cluster);
            }
        }
    }

    let dec = SpectralDecomposition {
        eigenvalues,
        eigenphases,
        eigenvectors: vectors,
    };
    if diagonal {
        return Ok(dec);
    }
    let residual = dec.reconstruct().max_abs_diff(u.matrix());
    if residual > 1e-9 * n as f64 {
        return Err(Error::InvalidOperator(format!(
            "reconstruction residual {residual:e}"
        )));
    }
    Ok(dec)
}

/// Eigenvectors of a normal matrix `A`: diagonalise `Re(e^{−iα}A)`, then
/// `Im(e^{−iα}A)` inside each near-degenerate group, then `A` itself inside
/// any group still left. Eigenvalues are Rayleigh quotients.
fn normal_eigen(a: &DMatrix<C64>) -> Result<(ComplexMatrix, Vec<C64>)> {
    let n = a.nrows();
    let rotated = a * C64::from_polar(1.0, -HERMITIAN_ROTATION);
    let adj = rotated.adjoint();
    let re = (&rotated + &adj) * C64::new(0.5, 0.0);
    let im = (&rotated - &adj) * C64::new(0.0, -0.5);

    let mut columns: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(n);
    let identity = DMatrix::<C64>::identity(n, n);
    for first in hermitian_groups(&identity, &re)? {
        if first.ncols() == 1 {
            columns.push(first.column(0).into_owned());
            continue;
        }
        for second in hermitian_groups(&first, &im)? {
            let k = second.ncols();
            let block = second.adjoint() * a * &second;
            let off = (0..k)
                .flat_map(|r| (0..k).filter(move |&c| c != r).map(move |c| (r, c)))
                .fold(0.0f64, |m, rc| m.max(block[rc].norm()));
            let basis = if off > 1e-12 {
                let schur = Schur::try_new(block, f64::EPSILON, MAX_SWEEPS)
                    .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
                &second * schur.unpack().0
            } else {
                second
            };
            columns.extend(basis.column_iter().map(|c| c.into_owned()));
        }
    }
    let vectors = DMatrix::from_columns(&columns);
    let values = columns
        .iter()
        .map(|v| (v.adjoint() * a * v)[(0, 0)])
        .collect();
    Ok((ComplexMatrix::from_nalgebra(&vectors), values))
}

/// Columns of `basis · W`, where `W` diagonalises `basis† H basis`, grouped
/// into runs of eigenvalues closer than [`SPLIT_GAP`].
fn hermitian_groups(basis: &DMatrix<C64>, h: &DMatrix<C64>) -> Result<Vec<DMatrix<C64>>> {
    let compressed = basis.adjoint() * h * basis;
    let sym = (&compressed + compressed.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let rotated = basis * &eig.eigenvectors;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if eig.eigenvalues[i] - eig.eigenvalues[order[pos - 1]] < SPLIT_GAP => {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }
    Ok(groups
        .iter()
        .map(|g| rotated.select_columns(g.iter()))
        .collect())
}

/// Index runs of sorted phases whose neighbours are within [`CLUSTER_GAP`],
/// including the wrap-around between `π` and `−π`.
fn clusters(sorted_phases: &[f64]) -> Vec<Vec<usize>> {
    let n = sorted_phases.len();
    if n == 0 {
        return Vec::new();
    }
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for i in 1..n {
        if sorted_phases[i] - sorted_phases[i - 1] < CLUSTER_GAP {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    if groups.len() > 1 && sorted_phases[0] + 2.0 * PI - sorted_phases[n - 1] < CLUSTER_GAP {
        let last = groups.pop().unwrap();
        groups[0].extend(last);
    }
    groups
}

/// Modified Gram–Schmidt (two passes) on the listed columns.
fn orthonormalize_columns(m: &mut ComplexMatrix, cols: &[usize]) {
    let rows = m.rows();
    for (k, &c) in cols.iter().enumerate() {
        for _ in 0..2 {
            for &prev in &cols[..k] {
                let dot: C64 = (0..rows).map(|r| m[(r, prev)].conj() * m[(r, c)]).sum();
                for r in 0..rows {
                    let p = m[(r, prev)];
                    m[(r, c)] -= dot * p;
                }
            }
        }
        let norm = (0..rows).map(|r| m[(r, c)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..rows {
            m[(r, c)] /= norm;
        }
    }
}

/// `M = left · Σ · right†` with full unitary factors and descending singular
/// values (`min(rows, cols)` of them).
#[derive(Clone, Debug)]
pub struct SingularDecomposition {
    pub left: UnitaryMatrix,
    pub singulars: Vec<f64>,
    pub right: UnitaryMatrix,
}

impl SingularDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (m, n) = (self.left.dim(), self.right.dim());
        let mut sigma = ComplexMatrix::zeros(m, n);
        for (i, &s) in self.singulars.iter().enumerate() {
            sigma[(i, i)] = C64::new(s, 0.0);
        }
        self.left
            .matrix()
            .matmul(&sigma)
            .and_then(|x| x.matmul(&self.right.matrix().adjoint()))
            .expect("conformable factors")
    }

    /// Number of singular values above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.singulars.iter().filter(|&&s| s > threshold).count()
    }
}

/// Singular values below this multiple of `σ_max` are reported as zero.
const SINGULAR_CUTOFF: f64 = 64.0 * f64::EPSILON;

/// Singular values and vectors from the Hermitian eigenproblem of
/// `[[0, M], [M†, 0]]`, whose eigenpairs are `±σ` with `(u; ±v)/√2`.
pub fn svd(m: &ComplexMatrix) -> Result<SingularDecomposition> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimension("svd of an empty matrix".into()));
    }
    let n = rows + cols;
    let mut jw = DMatrix::<C64>::zeros(n, n);
    for r in 0..rows {
        for c in 0..cols {
            jw[(r, rows + c)] = m[(r, c)];
            jw[(rows + c, r)] = m[(r, c)].conj();
        }
    }
    let eig = SymmetricEigen::try_new(jw, f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let k = rows.min(cols);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    order.truncate(k);
    let top = eig.eigenvalues[order[0]].max(0.0);
    let resolved: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eig.eigenvalues[i] > SINGULAR_CUTOFF * top)
        .collect();
    let root2 = std::f64::consts::SQRT_2;
    let mut thin_u = ComplexMatrix::from_fn(rows, resolved.len(), |r, c| {
        eig.eigenvectors[(r, resolved[c])] * root2
    });
    let mut thin_v = ComplexMatrix::from_fn(cols, resolved.len(), |r, c| {
        eig.eigenvectors[(rows + r, resolved[c])] * root2
    });
    let all: Vec<usize> = (0..resolved.len()).collect();
    orthonormalize_columns(&mut thin_u, &all);
    orthonormalize_columns(&mut thin_v, &all);
    let singulars: Vec<f64> = (0..k)
        .map(|i| resolved.get(i).map_or(0.0, |&j| eig.eigenvalues[j]))
        .collect();
    let out = SingularDecomposition {
        left: UnitaryMatrix::from_trusted(complete_orthonormal(&thin_u)),
        singulars,
        right: UnitaryMatrix::from_trusted(complete_orthonormal(&thin_v)),
    };
    let residual = out.reconstruct().max_abs_diff(m);
    let scale = m.entries().iter().map(|z| z.norm()).fold(1.0, f64::max);
    if residual > 1e-9 * rows.max(cols) as f64 * scale {
        return Err(Error::Numerical(format!(
            "svd reconstruction residual {residual:e}"
        )));
    }
    Ok(out)
}

/// Extends orthonormal columns to a full orthonormal basis, each time taking
/// the standard basis vector least covered by the current span.
fn complete_orthonormal(thin: &ComplexMatrix) -> ComplexMatrix {
    let (n, k) = (thin.rows(), thin.cols());
    let mut basis: Vec<Vec<C64>> = (0..k).map(|c| thin.column(c)).collect();
    // covered[j] = Σ_b |b_j|², the squared projection of e_j onto the span
    let mut covered: Vec<f64> = (0..n)
        .map(|j| basis.iter().map(|b| b[j].norm_sqr()).sum())
        .collect();
    while basis.len() < n {
        let j = (0..n)
            .min_by(|&a, &b| covered[a].total_cmp(&covered[b]))
            .expect("n > 0");
        let mut v = vec![ZERO; n];
        v[j] = ONE;
        for _ in 0..2 {
            for b in &basis {
                let dot: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= dot * bi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        for (c, z) in covered.iter_mut().zip(&v) {
            *c += z.norm_sqr();
        }
        basis.push(v);
    }
    ComplexMatrix::from_fn(n, n, |r, c| basis[c][r])
}

/// Kronecker product, first factor most significant.
pub fn kron(factors: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("kron needs at least one factor".into()))?;
    Ok(rest.iter().fold(first.clone(), |acc, f| kron_pair(&acc, f)))
}

pub fn kron_unitaries(factors: &[UnitaryMatrix]) -> Result<UnitaryMatrix> {
    let ms: Vec<ComplexMatrix> = factors.iter().map(|u| u.matrix().clone()).collect();
    Ok(UnitaryMatrix::from_trusted(kron(&ms)?))
}

fn kron_pair(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// One or more Newton–Schulz polar steps `X ← X(3I − X†X)/2`, pulling a
/// nearly unitary matrix back onto the unitary group.
pub(crate) fn reunitarize(m: ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let mut x = m;
    for _ in 0..3 {
        let gram = x.adjoint().matmul(&x).expect("square");
        let defect = gram.max_abs_diff(&ComplexMatrix::identity(n));
        if defect < 1e-14 {
            break;
        }
        let mut corr = gram.scale(C64::new(-0.5, 0.0));
        for i in 0..n {
            corr[(i, i)] += C64::new(1.5, 0.0);
        }
        x = x.matmul(&corr).expect("square");
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_arg_range() {
        assert_eq!(principal_arg(C64::new(-1.0, -0.0)), PI);
        assert_eq!(principal_arg(C64::new(-1.0, 0.0)), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(-PI), PI);
    }

    #[test]
    fn haar_dim_one_is_a_phase() {
        let u = haar_unitary(1, 3).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(matches!(
            haar_unitary(0, 3),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn reflections_form_a_unitary() {
        let h = HaarReflections::sample(7, 2).unwrap();
        let u = h.to_unitary();
        assert!(u.matrix().unitarity_defect() < 1e-12);
        let v: Vec<C64> = (0..7).map(|i| C64::new(i as f64, 1.0)).collect();
        let direct = u.apply(&v).unwrap();
        let implicit = h.apply(&v).unwrap();
        assert!(direct
            .iter()
            .zip(&implicit)
            .all(|(a, b)| (a - b).norm() < 1e-12));
        assert!(h.apply(&v[..3]).is_err());
        assert!(HaarReflections::sample(0, 1).is_err());
    }

    #[test]
    fn haar_is_unitary_and_seeded() {
        let u = haar_unitary(8, 11).unwrap();
        assert!(u.matrix().unitarity_defect() <= 1e-12);
        assert_eq!(u, haar_unitary(8, 11).unwrap());
        assert_ne!(u, haar_unitary(8, 12).unwrap());
    }

    #[test]
    fn eig_of_diag_one_i() {
        let u = UnitaryMatrix::diagonal_phases(&[0.0, PI / 2.0]);
        let d = eigendecompose_unitary(&u).unwrap();
        assert!((d.eigenphases[0]).abs() < 1e-15);
        assert!((d.eigenphases[1] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn eig_reconstructs_haar() {
        let u = haar_unitary(8, 5).unwrap();
        let d = eigendecompose_unitary(&u).unwrap();
        assert!(d.reconstruct().max_abs_diff(u.matrix()) <= 1e-9 * 8.0);
        assert!(d.eigenvalues.iter().all(|z| (z.norm() - 1.0).abs() < 1e-10));
        assert!(d.eigenvectors.unitarity_defect() < 1e-10);
    }

    #[test]
    fn degenerate_cluster_stays_orthonormal() {
        let v = haar_unitary(6, 9).unwrap();
        let d = UnitaryMatrix::diagonal_phases(&[0.0, 0.0, 0.0, 1.0, 1.0, -2.0]);
        let u = v.conjugate(&d).unwrap();
        let dec = eigendecompose_unitary(&u).unwrap();
        assert!(dec.eigenvectors.unitarity_defect() < 1e-12);
        let zeros = dec.eigenphases.iter().filter(|p| p.abs() < 1e-9).count();
        assert_eq!(zeros, 3);
    }

    #[test]
    fn clusters_wrap_around() {
        let g = clusters(&[-PI + 1e-10, 0.0, PI]);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0], vec![0, 2]);
    }

    #[test]
    fn svd_of_rank_one_reconstructs() {
        let a: Vec<C64> = (0..5)
            .map(|i| C64::new(0.3 * i as f64 - 0.5, 0.1 * i as f64))
            .collect();
        let b: Vec<C64> = (0..5)
            .map(|i| C64::new(0.2, 0.3 - 0.4 * i as f64))
            .collect();
        let m = ComplexMatrix::from_fn(5, 5, |r, c| a[r] * b[c]);
        let d = svd(&m).unwrap();
        assert_eq!(d.rank(1e-10), 1);
        assert!(d.reconstruct().max_abs_diff(&m) <= 1e-12);
    }

    #[test]
    fn svd_small_cases() {
        let d = svd(&ComplexMatrix::identity(4)).unwrap();
        assert!(d.singulars.iter().all(|s| (s - 1.0).abs() < 1e-14));
        let m = ComplexMatrix::from_diagonal(&[C64::new(2.0, 0.0), C64::new(0.0, 3.0)]);
        let d = svd(&m).unwrap();
        assert!((d.singulars[0] - 3.0).abs() < 1e-12 && (d.singulars[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn svd_rectangular_reconstructs() {
        let u = haar_unitary(5, 1).unwrap();
        let m = ComplexMatrix::from_fn(3, 5, |r, c| u[(r, c)] * (r + 1) as f64);
        let d = svd(&m).unwrap();
        assert_eq!(d.left.dim(), 3);
        assert_eq!(d.right.dim(), 5);
        assert!(d.reconstruct().max_abs_diff(&m) <= 1e-9);
        assert!(d.singulars.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn kron_laws() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&[i2.clone(), i2]).unwrap(), ComplexMatrix::identity(4));
        let c = |x: f64| C64::new(x, 0.0);
        let a = ComplexMatrix::from_diagonal(&[c(2.0), c(3.0)]);
        let b = ComplexMatrix::from_diagonal(&[c(5.0), c(7.0)]);
        assert_eq!(
            kron(&[a, b]).unwrap().diagonal(),
            vec![c(10.0), c(14.0), c(15.0), c(21.0)]
        );
        assert!(kron(&[]).is_err());
    }

    #[test]
    fn reunitarize_fixes_drift() {
        let u = haar_unitary(6, 2).unwrap();
        let drifted = u.matrix().scale(C64::new(1.0 + 1e-7, 0.0));
        assert!(reunitarize(drifted).unitarity_defect() < 1e-13);
    }
}
