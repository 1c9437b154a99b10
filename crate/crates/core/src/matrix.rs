//! Dense complex matrices sized for the 6×6 problems this crate is about.
//!
//! Storage is row-major `Vec<Complex64>`. Most operations require square
//! input; a few (rank, submatrix extraction) accept rectangular shapes.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ChmError, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Unit-modulus complex number `e^{iθ}`.
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(ChmError::Dimension("matrix must have at least one row and column".into()));
        }
        if data.len() != rows * cols {
            return Err(ChmError::Dimension(format!("{} entries supplied for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(ChmError::NonFinite { row: pos / cols, col: pos % cols });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|row| row.len() != c) {
            return Err(ChmError::Dimension(format!(
                "ragged rows: row {bad} has {} entries, expected {c}",
                rows[bad].len()
            )));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..rows {
            for k in 0..cols {
                data.push(f(j, k));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |j, k| if j == k { ONE } else { ZERO })
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |j, k| if j == k { values[j] } else { ZERO })
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

    /// Dimension of a square matrix (row count otherwise).
    pub fn n(&self) -> usize {
        self.rows
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, j: usize) -> &[C64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn col(&self, k: usize) -> Vec<C64> {
        (0..self.rows).map(|j| self[(j, k)]).collect()
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(ChmError::Dimension(format!("expected a square matrix, got {}x{}", self.rows, self.cols)))
        }
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            Some(pos) => Err(ChmError::NonFinite { row: pos / self.cols, col: pos % self.cols }),
            None => Ok(()),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |j, k| self[(k, j)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |j, k| self[(k, j)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(ChmError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..self.rows {
            for l in 0..self.cols {
                let a = self.data[j * self.cols + l];
                if a == ZERO {
                    continue;
                }
                let src = &other.data[l * other.cols..(l + 1) * other.cols];
                let dst = &mut out.data[j * other.cols..(j + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|j| self.row(j).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `H H†` without materialising the adjoint.
    pub fn gram_rows(&self) -> Self {
        Self::from_fn(self.rows, self.rows, |j, k| self.row(j).iter().zip(self.row(k)).map(|(a, b)| a * b.conj()).sum())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|j| self[(j, j)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |j, k| self[(rows[j], cols[k])])
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|j| (0..j).all(|k| self[(j, k)] == self[(k, j)]))
    }

    /// Frobenius norm of `H - H†`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.rows {
            for k in 0..self.cols {
                acc += (self[(j, k)] - self[(k, j)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (j, k): (usize, usize)) -> &C64 {
        debug_assert!(j < self.rows && k < self.cols);
        &self.data[j * self.cols + k]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut C64 {
        debug_assert!(j < self.rows && k < self.cols);
        &mut self.data[j * self.cols + k]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        self.mul_unchecked(rhs)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for j in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(j) {
                write!(f, "{:>9.5}{:+.5}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Wire shape shared by the matrix file format and embedded report fields.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let re = (0..self.rows).map(|j| self.row(j).iter().map(|z| z.re).collect()).collect();
        let im = (0..self.rows).map(|j| self.row(j).iter().map(|z| z.im).collect()).collect();
        MatrixRepr { n: self.rows, re, im }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        CMatrix::from_parts(repr.n, &repr.re, &repr.im).map_err(serde::de::Error::custom)
    }
}

impl CMatrix {
    /// Assembles an `n×n` matrix from separate real and imaginary arrays,
    /// rejecting ragged or mis-sized input.
    pub fn from_parts(n: usize, re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        if re.len() != n || im.len() != n {
            return Err(ChmError::Parse(format!("expected {n} rows in re/im, got {}/{}", re.len(), im.len())));
        }
        let mut data = Vec::with_capacity(n * n);
        for (j, (r, i)) in re.iter().zip(im).enumerate() {
            if r.len() != n || i.len() != n {
                return Err(ChmError::Parse(format!("ragged row {j}: re has {}, im has {}", r.len(), i.len())));
            }
            data.extend(r.iter().zip(i).map(|(&a, &b)| C64::new(a, b)));
        }
        Self::new(n, n, data)
    }
}
