//! CHM validation, dephasing, monomial equivalence and rank tooling.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{ChmError, Result};
use crate::matrix::{CMatrix, C64, ONE, ZERO};
use crate::parallel::{self, Execution};

/// Default tolerance for "is this a CHM" style validation.
pub const VALIDATION_TOL: f64 = 1e-10;
/// Default tolerance for identity-style checks.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChmReport {
    /// `max | |h_jk| − 1 |`
    pub unimodularity_residual: f64,
    /// `‖H H† − n I‖_F`
    pub unitarity_residual: f64,
    pub is_chm: bool,
}

pub fn chm_residuals(h: &CMatrix, tol: f64) -> Result<ChmReport> {
    let n = h.ensure_square()?;
    h.ensure_finite()?;
    let unimodularity_residual = h.as_slice().iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    let mut g = h.gram_rows();
    for j in 0..n {
        g[(j, j)] -= C64::new(n as f64, 0.0);
    }
    let unitarity_residual = g.frobenius_norm();
    Ok(ChmReport {
        unimodularity_residual,
        unitarity_residual,
        is_chm: unimodularity_residual <= tol && unitarity_residual <= tol,
    })
}

/// Unitary matrix with one unimodular entry per row and column:
/// `M[j, perm[j]] = phases[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialUnitary {
    perm: Vec<usize>,
    phases: Vec<C64>,
}

impl MonomialUnitary {
    pub fn new(perm: Vec<usize>, phases: Vec<C64>) -> Result<Self> {
        let n = perm.len();
        if phases.len() != n {
            return Err(ChmError::Dimension(format!("{n} permutation entries but {} phases", phases.len())));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(ChmError::Precondition(format!("{perm:?} is not a permutation of 0..{n}")));
            }
        }
        if let Some(bad) = phases.iter().find(|z| (z.norm() - 1.0).abs() > IDENTITY_TOL) {
            return Err(ChmError::Precondition(format!("phase {bad} is not unimodular")));
        }
        Ok(Self { perm, phases })
    }

    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect(), phases: vec![ONE; n] }
    }

    pub fn diagonal(phases: Vec<C64>) -> Result<Self> {
        Self::new((0..phases.len()).collect(), phases)
    }

    pub fn permutation(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        Self::new(perm, vec![ONE; n])
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn phases(&self) -> &[C64] {
        &self.phases
    }

    pub fn is_diagonal(&self) -> bool {
        self.perm.iter().enumerate().all(|(j, &p)| j == p)
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n(), self.n());
        for (j, (&p, &ph)) in self.perm.iter().zip(&self.phases).enumerate() {
            m[(j, p)] = ph;
        }
        m
    }
}

/// `P · H · Q` for monomial unitaries `P`, `Q`.
pub fn apply_equivalence(h: &CMatrix, p: &MonomialUnitary, q: &MonomialUnitary) -> Result<CMatrix> {
    let n = h.ensure_square()?;
    if p.n() != n || q.n() != n {
        return Err(ChmError::Dimension(format!(
            "monomial operators of size {} and {} applied to a {n}x{n} matrix",
            p.n(),
            q.n()
        )));
    }
    // (P H)[j, :] = p_j · H[perm_p[j], :];  (X Q)[:, perm_q[k]] = X[:, k] · q_k
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        let src = p.perm[j];
        for k in 0..n {
            out[(j, q.perm[k])] = p.phases[j] * h[(src, k)] * q.phases[k];
        }
    }
    Ok(out)
}

/// Normalises `H` to all-ones first row and column by unimodular diagonal
/// scalings, returning `(D1 H D2, D1, D2)`.
///
/// Rows are divided by the phase of their first-column entry, then columns
/// by the phase of the (rescaled) first-row entry. Border entries that end
/// up within rounding of 1 are stored as exactly 1.
pub fn dephase(h: &CMatrix) -> Result<(CMatrix, MonomialUnitary, MonomialUnitary)> {
    let n = h.ensure_square()?;
    h.ensure_finite()?;
    let phase_of = |z: C64, what: &str| -> Result<C64> {
        if z.norm() == 0.0 {
            Err(ChmError::Degenerate(format!("zero entry in {what}")))
        } else if z == ONE {
            Ok(ONE)
        } else {
            Ok(z / z.norm())
        }
    };
    let row_phases: Vec<C64> =
        (0..n).map(|j| phase_of(h[(j, 0)], "first column").map(|p| p.conj())).collect::<Result<_>>()?;
    let scaled = CMatrix::from_fn(n, n, |j, k| row_phases[j] * h[(j, k)]);
    let col_phases: Vec<C64> =
        (0..n).map(|k| phase_of(scaled[(0, k)], "first row").map(|p| p.conj())).collect::<Result<_>>()?;
    let mut out = CMatrix::from_fn(n, n, |j, k| scaled[(j, k)] * col_phases[k]);
    for j in 0..n {
        for (r, c) in [(j, 0), (0, j)] {
            if (out[(r, c)] - ONE).norm() <= IDENTITY_TOL {
                out[(r, c)] = ONE;
            }
        }
    }
    let d1 = MonomialUnitary { perm: (0..n).collect(), phases: row_phases };
    let d2 = MonomialUnitary { perm: (0..n).collect(), phases: col_phases };
    Ok((out, d1, d2))
}

/// True when the first row and column are all 1 within `tol`.
pub fn is_dephased(h: &CMatrix, tol: f64) -> bool {
    h.is_square() && (0..h.n()).all(|j| (h[(0, j)] - ONE).norm() <= tol && (h[(j, 0)] - ONE).norm() <= tol)
}

/// Singular values of a (possibly rectangular) matrix, descending.
///
/// Computed as the non-negative eigenvalues of the Hermitian dilation
/// `[[0, M], [M†, 0]]`, which avoids squaring the condition number the way
/// `M†M` would.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    m.ensure_finite()?;
    let (r, c) = (m.rows(), m.cols());
    let size = r + c;
    let dilation = CMatrix::from_fn(size, size, |j, k| match (j < r, k < r) {
        (true, false) => m[(j, k - r)],
        (false, true) => m[(k, j - r)].conj(),
        _ => ZERO,
    });
    let spectrum = eigen::eigenvalues(&dilation)?;
    let mut mags: Vec<f64> = spectrum.values().iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    // Each singular value appears as a ±σ pair.
    Ok(mags.iter().step_by(2).take(r.min(c)).copied().collect())
}

/// Number of singular values above `tol · σ_max`.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> Result<usize> {
    let sv = singular_values(m)?;
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > tol * top).count())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmatrixWitness {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Every `r×c` submatrix of rank exactly one at `tol`.
pub fn rank_one_submatrix_scan(h: &CMatrix, r: usize, c: usize, tol: f64) -> Result<Vec<SubmatrixWitness>> {
    rank_one_submatrix_scan_with(h, r, c, tol, Execution::default())
}

pub fn rank_one_submatrix_scan_with(
    h: &CMatrix,
    r: usize,
    c: usize,
    tol: f64,
    exec: Execution,
) -> Result<Vec<SubmatrixWitness>> {
    h.ensure_finite()?;
    if r == 0 || c == 0 || r > h.rows() || c > h.cols() {
        return Err(ChmError::Dimension(format!(
            "cannot take {r}x{c} submatrices of a {}x{} matrix",
            h.rows(),
            h.cols()
        )));
    }
    let row_sets: Vec<Vec<usize>> = (0..h.rows()).combinations(r).collect();
    let col_sets: Vec<Vec<usize>> = (0..h.cols()).combinations(c).collect();
    let pairs: Vec<(&Vec<usize>, &Vec<usize>)> = row_sets.iter().cartesian_product(col_sets.iter()).collect();
    let hits = parallel::map_slice(&pairs, exec, |(rows, cols)| {
        let sub = h.submatrix(rows, cols);
        numerical_rank(&sub, tol)
            .map(|rank| (rank == 1).then(|| SubmatrixWitness { rows: rows.to_vec(), cols: cols.to_vec() }))
    });
    hits.into_iter().filter_map(|r| r.transpose()).collect()
}
