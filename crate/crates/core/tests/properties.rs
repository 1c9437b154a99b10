mod common;

use std::f64::consts::PI;

use chm::eigen::{eigenvalues, spectrum_distance, Spectrum};
use chm::families::{gen_haagerup, gen_hermitian, hermitian_theta_min};
use chm::gadgets::{gadget_lemma4_iii, gadget_thm5_construction, Thm5Input};
use chm::hadamard::{apply_equivalence, chm_residuals, dephase, is_dephased, MonomialUnitary, VALIDATION_TOL};
use chm::io::{matrix_from_json, matrix_to_json, spectrum_from_csv, spectrum_to_csv};
use chm::matrix::cis;
use chm::mub::unbiasedness_residual;
use chm::search::{chm_objective, matrix_from_phases, phases_from_matrix};
use chm::spectral::{
    multiplicity_profile, profile_respects_multiplicity_bounds, verify_constant_eigenpairs, verify_thm5_i,
};
use chm::{CMatrix, C64};
use proptest::prelude::*;

fn corpus_matrix(i: usize) -> CMatrix {
    let c = common::corpus();
    c[i % c.len()].matrix.clone()
}

fn monomial() -> impl Strategy<Value = MonomialUnitary> {
    (Just((0..6).collect::<Vec<usize>>()).prop_shuffle(), prop::collection::vec(-PI..PI, 6))
        .prop_map(|(perm, args)| MonomialUnitary::new(perm, args.into_iter().map(cis).collect()).unwrap())
}

fn complex_matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), n * n)
        .prop_map(move |v| CMatrix::from_fn(n, n, |j, k| C64::new(v[j * n + k].0, v[j * n + k].1)))
}

fn spectrum(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-3f64..3.0, -3f64..3.0).prop_map(|(a, b)| C64::new(a, b)), n)
}

fn unitary_from(m: &CMatrix) -> CMatrix {
    let n = m.rows();
    let mut cols: Vec<Vec<C64>> = Vec::new();
    for k in 0..n {
        let mut v = m.col(k);
        for _ in 0..2 {
            for q in &cols {
                let p: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    CMatrix::from_fn(n, n, |j, k| cols[k][j])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dephase_normalises_equivalent_matrices(i in 0usize..19, p in monomial(), q in monomial()) {
        let h = apply_equivalence(&corpus_matrix(i), &p, &q).unwrap();
        let (d, d1, d2) = dephase(&h).unwrap();
        prop_assert!(is_dephased(&d, 0.0));
        prop_assert!(d1.is_diagonal() && d2.is_diagonal());
        prop_assert!(common::max_abs_diff(&apply_equivalence(&h, &d1, &d2).unwrap(), &d) < 1e-12);
        prop_assert!(chm_residuals(&d, VALIDATION_TOL).unwrap().is_chm);
        let (again, _, _) = dephase(&d).unwrap();
        prop_assert_eq!(again, d);
    }

    #[test]
    fn chm_residuals_invariant_under_equivalence(i in 0usize..19, p in monomial(), q in monomial()) {
        let h = corpus_matrix(i);
        let a = chm_residuals(&h, VALIDATION_TOL).unwrap();
        let b = chm_residuals(&apply_equivalence(&h, &p, &q).unwrap(), VALIDATION_TOL).unwrap();
        prop_assert!(b.is_chm);
        prop_assert!((a.unimodularity_residual - b.unimodularity_residual).abs() < 1e-14);
        prop_assert!((a.unitarity_residual - b.unitarity_residual).abs() < 1e-12);
    }

    #[test]
    fn spectrum_invariant_under_monomial_similarity(i in 0usize..19, p in monomial()) {
        let h = corpus_matrix(i);
        let pinv = CMatrix::from_fn(6, 6, |j, k| p.to_dense()[(k, j)].conj());
        let similar = p.to_dense().matmul(&h).unwrap().matmul(&pinv).unwrap();
        let d = spectrum_distance(&eigenvalues(&h).unwrap(), &eigenvalues(&similar).unwrap()).unwrap();
        prop_assert!(d < 1e-9, "distance {d:e}");
    }

    #[test]
    fn spectrum_trace_and_profile(m in complex_matrix(6)) {
        let s = eigenvalues(&m).unwrap();
        let scale = m.frobenius_norm();
        prop_assert!((s.sum() - m.trace()).norm() < 1e-10 * scale);
        let profile = multiplicity_profile(&s, 1e-7);
        prop_assert_eq!(profile.iter().sum::<usize>(), 6);
        prop_assert!(profile.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn spectrum_order_is_canonical(v in spectrum(6), seed in any::<u64>()) {
        let mut shuffled = v.clone();
        let k = (seed % 6) as usize;
        shuffled.rotate_left(k);
        shuffled.reverse();
        prop_assert_eq!(Spectrum::new(v).unwrap(), Spectrum::new(shuffled).unwrap());
    }

    #[test]
    fn spectrum_distance_is_a_metric(a in spectrum(5), b in spectrum(5), c in spectrum(5)) {
        let (a, b, c) = (Spectrum::new(a).unwrap(), Spectrum::new(b).unwrap(), Spectrum::new(c).unwrap());
        let d = |x: &Spectrum, y: &Spectrum| spectrum_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-15);
        prop_assert!((d(&a, &b) - common::bottleneck_bruteforce(a.values(), b.values())).abs() < 1e-15);
    }

    #[test]
    fn phases_round_trip(phases in prop::collection::vec(-PI + 1e-9..PI - 1e-9, 25)) {
        let h = matrix_from_phases(6, &phases).unwrap();
        prop_assert!(is_dephased(&h, 0.0));
        let back = phases_from_matrix(&h).unwrap();
        for (a, b) in phases.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-14);
        }
        let lhs = chm_objective(&phases).unwrap();
        prop_assert!((lhs - common::naive_chm_objective(6, &phases)).abs() < 1e-10 * (1.0 + lhs));
    }

    #[test]
    fn unbiasedness_is_symmetric(a in complex_matrix(6), b in complex_matrix(6)) {
        let (ua, ub) = (unitary_from(&a), unitary_from(&b));
        let ab = unbiasedness_residual(&ua, &ub).unwrap();
        let ba = unbiasedness_residual(&ub, &ua).unwrap();
        prop_assert!((ab - ba).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn matrix_json_round_trip_is_exact(m in complex_matrix(4)) {
        let back = matrix_from_json(&matrix_to_json(&m).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn spectrum_csv_round_trip_is_exact(v in spectrum(6)) {
        let s = Spectrum::new(v).unwrap();
        prop_assert_eq!(spectrum_from_csv(&spectrum_to_csv(&s)).unwrap(), s);
    }

    #[test]
    fn haagerup_members_obey_eigenstructure(arg in -PI..PI) {
        let h = gen_haagerup(cis(arg)).unwrap();
        prop_assert!(chm_residuals(&h, VALIDATION_TOL).unwrap().is_chm);
        let report = verify_constant_eigenpairs(&h).unwrap();
        prop_assert!(report.residual_plus < 1e-9 && report.residual_minus < 1e-9);
        prop_assert!(report.max_first_coord < 1e-8);
        prop_assert!(profile_respects_multiplicity_bounds(&eigenvalues(&h).unwrap(), 1e-7));
        let thm5 = verify_thm5_i(&h).unwrap();
        prop_assert!(thm5.equivalence_holds && !thm5.is_hermitian);
    }

    #[test]
    fn hermitian_members_are_all_true(theta in hermitian_theta_min() + 0.02..PI, negate in any::<bool>()) {
        let theta = if negate { -theta } else { theta };
        let h = gen_hermitian(theta).unwrap().matrix;
        let report = verify_thm5_i(&h).unwrap();
        prop_assert!(report.equivalence_holds);
        prop_assert!(report.is_hermitian && report.trace_zero && report.spectrum_is_pm_sqrt6);
        prop_assert_eq!(report.profile, vec![3, 3]);
        prop_assert!(verify_constant_eigenpairs(&h).unwrap().max_first_coord < 1e-8);
    }

    #[test]
    fn lemma4_iii_construction_never_hadamard(n in 4usize..=8, arg in 0.01f64..2.0 * PI - 0.01) {
        let report = gadget_lemma4_iii(n, cis(arg) * (n as f64).sqrt()).unwrap();
        prop_assert!(report.passed(), "n = {n}, arg = {arg}: {:?}", report.residuals);
    }

    #[test]
    fn thm5_construction_passes(seed in any::<u64>()) {
        let (_, report) = gadget_thm5_construction(&Thm5Input::seeded(seed)).unwrap();
        prop_assert!(report.passed(), "{:?}", report.residuals);
    }
}
