use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.entries[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * n + i] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows)
            .map(|r| self.entries[r * self.cols + c])
            .collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries
            .iter()
            .enumerate()
            .all(|(k, z)| k / self.cols == k % self.cols || *z == ZERO)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        Ok(())
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![ZERO; n * m];
        if m == 0 {
            return Ok(Self {
                rows: n,
                cols: m,
                entries: out,
            });
        }
        exec::fill_rows(&mut out, m, |r, row| {
            let lhs = &self.entries[r * k..(r + 1) * k];
            for (p, &a) in lhs.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.entries[p * m..(p + 1) * m];
                for (o, &b) in row.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        });
        Ok(Self {
            rows: n,
            cols: m,
            entries: out,
        })
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖M†M − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        match self.adjoint().matmul(self) {
            Ok(g) => g.max_abs_diff(&Self::identity(self.rows)),
            Err(_) => f64::INFINITY,
        }
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.entries)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.entries[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.entries[r * self.cols + c]
    }
}

/// Square matrix with `‖U†U − I‖_max ≤ 1e-10 · dim`, checked on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub const TOLERANCE_PER_DIM: f64 = 1e-10;

    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "unitary must be square and non-empty, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let defect = m.unitarity_defect();
        let bound = Self::TOLERANCE_PER_DIM * m.rows() as f64;
        if defect > bound {
            return Err(Error::InvalidOperator(format!(
                "unitarity defect {defect:e} exceeds {bound:e}"
            )));
        }
        Ok(Self(m))
    }

    /// For results of exact unitary algebra (products, adjoints, Kronecker
    /// products, diagonal phases) where the invariant holds by construction.
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        debug_assert!(m.is_square());
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    /// Diagonal unitary with entries `e^{i·phase}`.
    pub fn diagonal_phases(phases: &[f64]) -> Self {
        let d: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();
        Self(ComplexMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        Ok(Self(self.0.matmul(&rhs.0)?))
    }

    /// `self · other · self†`.
    pub fn conjugate(&self, other: &Self) -> Result<Self> {
        Ok(Self(self.0.matmul(&other.0)?.matmul(&self.0.adjoint())?))
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.0.matvec(v)
    }
}

impl Index<(usize, usize)> for UnitaryMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

/// JSON interchange form: `{rows, cols, entries: [[re, im], …]}` for general
/// matrices and `{dim, entries}` for unitaries, entries row-major.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    fn into_matrix(self) -> Result<ComplexMatrix> {
        let (rows, cols) = match (self.dim, self.rows, self.cols) {
            (Some(d), None, None) => (d, d),
            (_, Some(r), Some(c)) => (r, c),
            _ => {
                return Err(Error::InvalidArgument(
                    "matrix JSON needs `dim` or `rows`+`cols`".into(),
                ))
            }
        };
        let entries = self
            .entries
            .into_iter()
            .map(|[re, im]| C64::new(re, im))
            .collect();
        ComplexMatrix::new(rows, cols, entries)
    }
}

fn entries_json(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    m.entries.iter().map(|z| [z.re, z.im]).collect()
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson {
            dim: None,
            rows: Some(self.rows),
            cols: Some(self.cols),
            entries: entries_json(self),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        MatrixJson::deserialize(d)?
            .into_matrix()
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for UnitaryMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson {
            dim: Some(self.dim()),
            rows: None,
            cols: None,
            entries: entries_json(&self.0),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitaryMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = MatrixJson::deserialize(d)?
            .into_matrix()
            .map_err(serde::de::Error::custom)?;
        UnitaryMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(ComplexMatrix::new(2, 2, vec![ONE; 3]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![C64::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn unitary_check_on_construction() {
        let m = ComplexMatrix::from_diagonal(&[ONE, C64::new(0.0, 1.0)]);
        assert!(UnitaryMatrix::new(m).is_ok());
        let bad = ComplexMatrix::from_diagonal(&[ONE, C64::new(2.0, 0.0)]);
        assert!(matches!(
            UnitaryMatrix::new(bad),
            Err(Error::InvalidOperator(_))
        ));
        assert!(UnitaryMatrix::new(ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn matmul_matches_hand_product() {
        let a = ComplexMatrix::new(2, 2, vec![ONE, C64::new(0.0, 1.0), ZERO, ONE]).unwrap();
        let b = ComplexMatrix::new(2, 1, vec![C64::new(2.0, 0.0), C64::new(3.0, 0.0)]).unwrap();
        let p = a.matmul(&b).unwrap();
        assert_eq!(p[(0, 0)], C64::new(2.0, 3.0));
        assert_eq!(p[(1, 0)], C64::new(3.0, 0.0));
        assert!(b.matmul(&a).is_err());
    }

    #[test]
    fn json_schema() {
        let u = UnitaryMatrix::diagonal_phases(&[0.0, std::f64::consts::PI]);
        let s = serde_json::to_string(&u).unwrap();
        assert!(s.starts_with("{\"dim\":2,\"entries\":[[1.0,0.0]"));
        let back: UnitaryMatrix = serde_json::from_str(&s).unwrap();
        assert!(back.matrix().max_abs_diff(u.matrix()) == 0.0);
        let m: ComplexMatrix =
            serde_json::from_str(r#"{"rows":1,"cols":2,"entries":[[1,0],[0,1]]}"#).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.0, 1.0));
        assert!(serde_json::from_str::<UnitaryMatrix>(r#"{"dim":1,"entries":[[2,0]]}"#).is_err());
    }
}
