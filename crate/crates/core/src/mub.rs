//! Unbiasedness between orthonormal bases. A unitary `U` is unbiased with
//! respect to the standard basis exactly when `√d·U` is a CHM.

use serde::{Deserialize, Serialize};

use crate::error::{ChmError, Result};
use crate::matrix::{CMatrix, C64};

/// Bases must be unitary to this tolerance (Frobenius norm of `U†U − I`).
pub const UNITARY_TOL: f64 = 1e-10;

fn unitary_defect(u: &CMatrix) -> f64 {
    let n = u.rows();
    let mut g = u.adjoint().mul_unchecked(u);
    for j in 0..n {
        g[(j, j)] -= C64::new(1.0, 0.0);
    }
    g.frobenius_norm()
}

fn ensure_unitary(label: &str, u: &CMatrix) -> Result<usize> {
    let n = u.ensure_square()?;
    u.ensure_finite()?;
    let defect = unitary_defect(u);
    if defect > UNITARY_TOL {
        return Err(ChmError::Precondition(format!("{label} is not unitary (defect {defect:.3e})")));
    }
    Ok(n)
}

/// `max_{m,n} | |⟨a_m, b_n⟩| − 1/√d |` over the columns of `a` and `b`.
pub fn unbiasedness_residual(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let d = ensure_unitary("first basis", a)?;
    let db = ensure_unitary("second basis", b)?;
    if d != db {
        return Err(ChmError::Dimension(format!("bases of dimension {d} and {db}")));
    }
    let target = 1.0 / (d as f64).sqrt();
    let overlaps = a.adjoint().mul_unchecked(b);
    Ok(overlaps.as_slice().iter().map(|z| (z.norm() - target).abs()).fold(0.0, f64::max))
}

/// Orthonormal bases of `C^d`, one per matrix, stored as columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BasisSet {
    bases: Vec<CMatrix>,
}

impl BasisSet {
    pub fn new(bases: Vec<CMatrix>) -> Result<Self> {
        let mut dim = None;
        for (i, b) in bases.iter().enumerate() {
            let d = ensure_unitary(&format!("basis {i}"), b)?;
            if *dim.get_or_insert(d) != d {
                return Err(ChmError::Dimension(format!("basis {i} has dimension {d}, expected {}", dim.unwrap_or(d))));
            }
        }
        Ok(Self { bases })
    }

    pub fn d(&self) -> usize {
        self.bases.first().map_or(0, CMatrix::rows)
    }

    pub fn bases(&self) -> &[CMatrix] {
        &self.bases
    }

    /// Residuals of every pair `(i, j)` with `i < j`, in lexicographic order.
    pub fn pair_residuals(&self) -> Result<Vec<(usize, usize, f64)>> {
        let mut out = Vec::new();
        for i in 0..self.bases.len() {
            for j in i + 1..self.bases.len() {
                out.push((i, j, unbiasedness_residual(&self.bases[i], &self.bases[j])?));
            }
        }
        Ok(out)
    }
}

impl<'de> Deserialize<'de> for BasisSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let bases = Vec::<CMatrix>::deserialize(d)?;
        BasisSet::new(bases).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResidual {
    pub first: String,
    pub second: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrioReport {
    pub pairs: Vec<PairResidual>,
    pub max_residual: f64,
    /// The first pair, in listing order, attaining `max_residual`.
    pub worst_pair: (String, String),
}

/// Pairwise unbiasedness among `{I, H1/√d, H2/√d, H3/√d}`.
pub fn trio_check(h1: &CMatrix, h2: &CMatrix, h3: &CMatrix) -> Result<TrioReport> {
    let d = h1.ensure_square()?;
    let scale = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let labels = ["I", "H1", "H2", "H3"];
    let bases = vec![CMatrix::identity(d), h1.scale(scale), h2.scale(scale), h3.scale(scale)];
    let set = BasisSet::new(bases)?;
    let pairs: Vec<PairResidual> = set
        .pair_residuals()?
        .into_iter()
        .map(|(i, j, residual)| PairResidual { first: labels[i].into(), second: labels[j].into(), residual })
        .collect();
    let worst = pairs.iter().fold(&pairs[0], |w, p| if p.residual > w.residual { p } else { w });
    Ok(TrioReport { max_residual: worst.residual, worst_pair: (worst.first.clone(), worst.second.clone()), pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{gen_fourier, gen_haagerup, gen_tao, OmegaBranch};
    use crate::matrix::{cis, I};

    fn normalized(h: &CMatrix) -> CMatrix {
        h.scale(C64::new(1.0 / 6f64.sqrt(), 0.0))
    }

    #[test]
    fn identity_against_chms() {
        let id = CMatrix::identity(6);
        assert!(unbiasedness_residual(&id, &normalized(&gen_fourier(6).unwrap())).unwrap() < 1e-12);
        assert!(unbiasedness_residual(&id, &normalized(&gen_tao(OmegaBranch::First))).unwrap() < 1e-12);
        let self_res = unbiasedness_residual(&id, &id).unwrap();
        assert!((self_res - (1.0 - 1.0 / 6f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = normalized(&gen_tao(OmegaBranch::First));
        let b = normalized(&gen_haagerup(I).unwrap());
        let ab = unbiasedness_residual(&a, &b).unwrap();
        let ba = unbiasedness_residual(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_unitary() {
        let id = CMatrix::identity(6);
        assert!(matches!(unbiasedness_residual(&id, &gen_fourier(6).unwrap()), Err(ChmError::Precondition(_))));
        assert!(unbiasedness_residual(&id, &CMatrix::identity(4)).is_err());
    }

    #[test]
    fn identical_bases_worst_pair() {
        let f6 = gen_fourier(6).unwrap();
        let r = trio_check(&f6, &f6, &f6).unwrap();
        assert_eq!(r.worst_pair, ("H1".to_string(), "H2".to_string()));
        assert!((r.max_residual - (1.0 - 1.0 / 6f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn diagonal_rephasing_keeps_identity_pair() {
        let f6 = gen_fourier(6).unwrap();
        let d = CMatrix::diagonal(&(0..6).map(|k| cis(0.3 * k as f64 + 0.1)).collect::<Vec<_>>());
        let h2 = d.matmul(&f6).unwrap();
        let r = trio_check(&f6, &h2, &f6).unwrap();
        let pair = |a: &str, b: &str| r.pairs.iter().find(|p| p.first == a && p.second == b).unwrap().residual;
        assert!(pair("I", "H2") < 1e-12);
        assert!(pair("H1", "H2") > 0.0);
    }
}
