//! Verifiers for the spectral structure of dephased CHMs: the constant
//! eigenpairs `±√n`, the vanishing first coordinate of every other
//! eigenvector, and the Hermitian ⟺ `{±√6 ×3}` equivalence in dimension six.

use serde::{Deserialize, Serialize};

use crate::eigen::{self, Spectrum, CLUSTER_TOL};
use crate::error::{ChmError, Result};
use crate::hadamard::{chm_residuals, is_dephased, VALIDATION_TOL};
use crate::matrix::{CMatrix, C64, ONE};

/// Eigenvalues farther than this from `±√n` count as "non-constant".
const CONSTANT_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEigenpairReport {
    pub n: usize,
    /// `‖H v1 − √n v1‖` with `v1 = [1+√n, 1, …, 1]`.
    pub residual_plus: f64,
    /// `‖H v2 + √n v2‖` with `v2 = [1−√n, 1, …, 1]`.
    pub residual_minus: f64,
    /// Inner product of the normalised `v1` and `v2`.
    pub v1_v2_inner: f64,
    /// Largest `|x1|` over unit eigenvectors whose eigenvalue is not `±√n`.
    pub max_first_coord: f64,
    /// Number of eigenpairs that entered `max_first_coord`.
    pub non_constant_pairs: usize,
    /// Set when every eigenvalue is `±√n`, so `max_first_coord` is vacuous.
    pub vacuous: bool,
}

pub fn constant_vectors(n: usize) -> (Vec<C64>, Vec<C64>) {
    let s = (n as f64).sqrt();
    let mut v1 = vec![ONE; n];
    let mut v2 = vec![ONE; n];
    v1[0] = C64::new(1.0 + s, 0.0);
    v2[0] = C64::new(1.0 - s, 0.0);
    (v1, v2)
}

fn eigen_residual(h: &CMatrix, v: &[C64], value: f64) -> f64 {
    h.mul_vec(v).iter().zip(v).map(|(a, b)| (a - b * value).norm_sqr()).sum::<f64>().sqrt()
}

fn check_dephased_chm(h: &CMatrix, tol: f64) -> Result<usize> {
    let n = h.ensure_square()?;
    if !is_dephased(h, tol) {
        return Err(ChmError::Precondition("matrix is not in dephased form".into()));
    }
    let report = chm_residuals(h, tol)?;
    if !report.is_chm {
        return Err(ChmError::Precondition(format!(
            "matrix is not a CHM (unimodularity {:.3e}, unitarity {:.3e})",
            report.unimodularity_residual, report.unitarity_residual
        )));
    }
    Ok(n)
}

pub fn verify_constant_eigenpairs(h: &CMatrix) -> Result<ConstantEigenpairReport> {
    verify_constant_eigenpairs_with(h, VALIDATION_TOL)
}

pub fn verify_constant_eigenpairs_with(h: &CMatrix, tol: f64) -> Result<ConstantEigenpairReport> {
    let n = check_dephased_chm(h, tol)?;
    let s = (n as f64).sqrt();
    let (v1, v2) = constant_vectors(n);
    let residual_plus = eigen_residual(h, &v1, s);
    let residual_minus = eigen_residual(h, &v2, -s);
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let v1_v2_inner = v1.iter().zip(&v2).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / (norm(&v1) * norm(&v2));

    let pairs = eigen::eigenpairs(h)?;
    let moving: Vec<_> = pairs
        .iter()
        .filter(|p| (p.value - s).norm() > CONSTANT_SEPARATION && (p.value + s).norm() > CONSTANT_SEPARATION)
        .collect();
    let max_first_coord = moving.iter().map(|p| p.vector[0].norm()).fold(0.0, f64::max);
    Ok(ConstantEigenpairReport {
        n,
        residual_plus,
        residual_minus,
        v1_v2_inner,
        max_first_coord,
        non_constant_pairs: moving.len(),
        vacuous: moving.is_empty(),
    })
}

/// Cluster sizes of a spectrum, largest first.
pub fn multiplicity_profile(s: &Spectrum, cluster_tol: f64) -> Vec<usize> {
    let mut sizes: Vec<usize> = eigen::cluster_indices(s.values(), cluster_tol).iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureTolerances {
    /// Bound on `‖H − H†‖_F`.
    pub hermitian: f64,
    /// Bound on `|tr H|`.
    pub trace: f64,
    /// Eigenvalue clustering radius.
    pub cluster: f64,
    /// Distance from `±√6` still counted as `±√6`.
    pub spectrum: f64,
}

impl Default for StructureTolerances {
    fn default() -> Self {
        Self { hermitian: 1e-8, trace: 1e-8, cluster: CLUSTER_TOL, spectrum: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm5Counterexample {
    pub spectrum: Spectrum,
    pub profile: Vec<usize>,
    pub hermitian_defect: f64,
    pub trace: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianEquivalenceReport {
    pub is_hermitian: bool,
    pub has_triple_eigenvalue: bool,
    pub trace_zero: bool,
    pub spectrum_is_pm_sqrt6: bool,
    /// `is_hermitian ⟺ (triple ∧ trace 0) ⟺ spectrum ⊂ {±√6}`
    pub equivalence_holds: bool,
    pub hermitian_defect: f64,
    pub trace: C64,
    pub profile: Vec<usize>,
    pub counterexample: Option<Thm5Counterexample>,
}

/// Evaluates the three equivalent characterisations of a Hermitian dephased
/// 6×6 CHM. Disagreement is returned as data rather than an error.
pub fn verify_thm5_i(h: &CMatrix) -> Result<HermitianEquivalenceReport> {
    verify_thm5_i_with(h, StructureTolerances::default())
}

pub fn verify_thm5_i_with(h: &CMatrix, tol: StructureTolerances) -> Result<HermitianEquivalenceReport> {
    let n = check_dephased_chm(h, VALIDATION_TOL)?;
    if n != 6 {
        return Err(ChmError::Precondition(format!("expected a 6x6 matrix, got {n}x{n}")));
    }
    let s6 = 6f64.sqrt();
    let spectrum = eigen::eigenvalues(h)?;
    let profile = multiplicity_profile(&spectrum, tol.cluster);
    let hermitian_defect = h.hermitian_defect();
    let trace = h.trace();

    let is_hermitian = hermitian_defect <= tol.hermitian;
    let has_triple_eigenvalue = profile.first().is_some_and(|&m| m >= 3);
    let trace_zero = trace.norm() <= tol.trace;
    let spectrum_is_pm_sqrt6 =
        spectrum.values().iter().all(|z| (z - s6).norm() <= tol.spectrum || (z + s6).norm() <= tol.spectrum);
    let middle = has_triple_eigenvalue && trace_zero;
    let equivalence_holds = is_hermitian == middle && middle == spectrum_is_pm_sqrt6;
    let counterexample = (!equivalence_holds).then(|| Thm5Counterexample {
        spectrum: spectrum.clone(),
        profile: profile.clone(),
        hermitian_defect,
        trace,
    });
    Ok(HermitianEquivalenceReport {
        is_hermitian,
        has_triple_eigenvalue,
        trace_zero,
        spectrum_is_pm_sqrt6,
        equivalence_holds,
        hermitian_defect,
        trace,
        profile,
        counterexample,
    })
}

/// Multiplicity rules for dephased 6×6 CHMs: no cluster of four or more, and
/// a cluster of three only for the `{±√6 ×3}` spectrum.
pub fn profile_respects_multiplicity_bounds(s: &Spectrum, cluster_tol: f64) -> bool {
    let profile = multiplicity_profile(s, cluster_tol);
    let largest = profile.first().copied().unwrap_or(0);
    if largest >= 4 {
        return false;
    }
    if largest == 3 {
        let s6 = 6f64.sqrt();
        return profile == [3, 3] && s.values().iter().all(|z| (z - s6).norm() <= 1e-7 || (z + s6).norm() <= 1e-7);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{gen_fourier, gen_haagerup, gen_hermitian, gen_tao, OmegaBranch};
    use crate::matrix::{cis, I};

    #[test]
    fn haagerup_constant_eigenpairs() {
        let h = gen_haagerup(cis(1.0)).unwrap();
        let r = verify_constant_eigenpairs(&h).unwrap();
        assert!(r.residual_plus < 1e-10 && r.residual_minus < 1e-10);
        assert!(r.max_first_coord < 1e-8);
        assert_eq!(r.non_constant_pairs, 4);
        assert!(r.v1_v2_inner.abs() < 1e-12);
    }

    #[test]
    fn fourier2_is_exact() {
        let f2 = gen_fourier(2).unwrap();
        let r = verify_constant_eigenpairs(&f2).unwrap();
        assert!(r.residual_plus < 1e-14 && r.residual_minus < 1e-14);
        assert!(r.vacuous);
    }

    #[test]
    fn hermitian_family_is_vacuous() {
        let h = gen_hermitian(2.0).unwrap().matrix;
        let r = verify_constant_eigenpairs(&h).unwrap();
        assert!(r.vacuous);
        assert_eq!(r.max_first_coord, 0.0);
        assert!(r.residual_plus < 1e-10);
    }

    #[test]
    fn rejects_non_dephased_and_non_chm() {
        let mut s = gen_tao(OmegaBranch::First);
        s[(0, 1)] = I;
        assert!(matches!(verify_constant_eigenpairs(&s), Err(ChmError::Precondition(_))));
        let mut t = gen_tao(OmegaBranch::First);
        t[(3, 3)] = C64::new(0.5, 0.0);
        assert!(matches!(verify_constant_eigenpairs(&t), Err(ChmError::Precondition(_))));
    }

    #[test]
    fn thm5_hermitian_member_all_true() {
        let r = verify_thm5_i(&gen_hermitian(2.0).unwrap().matrix).unwrap();
        assert!(r.is_hermitian && r.has_triple_eigenvalue && r.trace_zero && r.spectrum_is_pm_sqrt6);
        assert!(r.equivalence_holds && r.counterexample.is_none());
        assert_eq!(r.profile, vec![3, 3]);
    }

    #[test]
    fn thm5_tao_and_haagerup_all_false() {
        for h in [gen_tao(OmegaBranch::First), gen_haagerup(I).unwrap()] {
            let r = verify_thm5_i(&h).unwrap();
            assert!(!r.is_hermitian && !r.has_triple_eigenvalue && !r.trace_zero && !r.spectrum_is_pm_sqrt6);
            assert!(r.equivalence_holds);
        }
    }

    #[test]
    fn thm5_requires_dimension_six() {
        assert!(verify_thm5_i(&gen_fourier(4).unwrap()).is_err());
    }

    #[test]
    fn profiles_of_family_spectra() {
        let prof = |h: &CMatrix| multiplicity_profile(&eigen::eigenvalues(h).unwrap(), CLUSTER_TOL);
        assert_eq!(prof(&gen_hermitian(2.5).unwrap().matrix), vec![3, 3]);
        assert_eq!(prof(&gen_tao(OmegaBranch::First)), vec![2, 2, 1, 1]);
        assert_eq!(prof(&gen_haagerup(cis(0.2)).unwrap()), vec![1; 6]);
    }

    #[test]
    fn multiplicity_bounds_rule() {
        let s6 = 6f64.sqrt();
        let four = Spectrum::new(vec![C64::new(s6, 0.0); 4].into_iter().chain([C64::new(-s6, 0.0), I * s6]).collect())
            .unwrap();
        assert!(!profile_respects_multiplicity_bounds(&four, 1e-7));
        let herm = eigen::eigenvalues(&gen_hermitian(3.0).unwrap().matrix).unwrap();
        assert!(profile_respects_multiplicity_bounds(&herm, 1e-7));
    }
}
