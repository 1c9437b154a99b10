//! Independent oracles for integration tests. None of these call into the
//! library's eigensolver, rank or distance code.
#![allow(dead_code)]

use chm::families::{
    gen_fourier, gen_haagerup, gen_hermitian, gen_tao, haagerup_q_samples, hermitian_theta_samples, OmegaBranch,
};
use chm::{CMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Member {
    pub label: String,
    pub matrix: CMatrix,
    pub hermitian_family: bool,
}

/// F6, Tao on both branches, 8 Haagerup and 8 Hermitian members.
pub fn corpus() -> Vec<Member> {
    let mut out = vec![
        Member { label: "F6".into(), matrix: gen_fourier(6).unwrap(), hermitian_family: false },
        Member { label: "Tao(w1)".into(), matrix: gen_tao(OmegaBranch::First), hermitian_family: false },
        Member { label: "Tao(w2)".into(), matrix: gen_tao(OmegaBranch::Second), hermitian_family: false },
    ];
    for q in haagerup_q_samples(8) {
        out.push(Member {
            label: format!("Haagerup(arg q={:.4})", q.arg()),
            matrix: gen_haagerup(q).unwrap(),
            hermitian_family: false,
        });
    }
    for theta in hermitian_theta_samples(8) {
        out.push(Member {
            label: format!("Hermitian(theta={theta:.4})"),
            matrix: gen_hermitian(theta).unwrap().matrix,
            hermitian_family: true,
        });
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn to_rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.rows()).map(|j| m.row(j).to_vec()).collect()
}

fn mul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = a.len();
    (0..n).map(|j| (0..n).map(|k| (0..n).map(|l| a[j][l] * b[l][k]).sum()).collect()).collect()
}

/// Monic characteristic polynomial by Faddeev–LeVerrier; `c[k]` is the
/// coefficient of `x^k`.
pub fn char_poly(m: &CMatrix) -> Vec<C64> {
    let a = to_rows(m);
    let n = a.len();
    let mut c = vec![C64::new(0.0, 0.0); n + 1];
    c[n] = C64::new(1.0, 0.0);
    let mut mk = vec![vec![C64::new(0.0, 0.0); n]; n];
    for k in 1..=n {
        for (j, row) in mk.iter_mut().enumerate() {
            row[j] += c[n + 1 - k];
        }
        let amk = mul(&a, &mk);
        let tr: C64 = (0..n).map(|j| amk[j][j]).sum();
        c[n - k] = -tr / k as f64;
        mk = amk;
    }
    c
}

fn horner(c: &[C64], x: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Roots of a monic polynomial by Durand–Kerner, polished with Newton steps.
pub fn poly_roots(c: &[C64]) -> Vec<C64> {
    let n = c.len() - 1;
    let bound = 1.0 + c[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let seed = C64::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * (0.5 * bound)).collect();
    for _ in 0..2000 {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let (p, _) = horner(c, z[i]);
            let denom: C64 = (0..n).filter(|&j| j != i).map(|j| z[i] - z[j]).product();
            let step = p / denom;
            z[i] -= step;
            change = change.max(step.norm());
        }
        if change < 1e-15 * bound {
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(c, *r);
            if dp.norm() > 0.0 {
                *r -= p / dp;
            }
        }
    }
    z
}

/// Bottleneck distance by enumerating every permutation.
pub fn bottleneck_bruteforce(a: &[C64], b: &[C64]) -> f64 {
    fn rec(a: &[C64], b: &[C64], used: &mut Vec<bool>, i: usize, cur: f64, best: &mut f64) {
        if i == a.len() {
            *best = best.min(cur);
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                rec(a, b, used, i + 1, cur.max((a[i] - b[j]).norm()), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(a, b, &mut vec![false; b.len()], 0, 0.0, &mut best);
    if a.is_empty() {
        0.0
    } else {
        best
    }
}

/// Rank by Gaussian elimination with complete pivoting; pivots below
/// `tol · max|m_jk|` count as zero.
pub fn rank_by_elimination(m: &CMatrix, tol: f64) -> usize {
    let mut a = (0..m.rows()).map(|j| m.row(j).to_vec()).collect::<Vec<_>>();
    let (rows, cols) = (m.rows(), m.cols());
    let scale = m.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut rank = 0;
    while rank < rows.min(cols) {
        let (mut pr, mut pc, mut best) = (rank, rank, 0.0);
        for (j, row) in a.iter().enumerate().skip(rank) {
            for (k, z) in row.iter().enumerate().skip(rank) {
                if z.norm() > best {
                    (pr, pc, best) = (j, k, z.norm());
                }
            }
        }
        if best <= tol * scale {
            break;
        }
        a.swap(rank, pr);
        for row in a.iter_mut() {
            row.swap(rank, pc);
        }
        let pivot = a[rank].clone();
        for row in a.iter_mut().skip(rank + 1) {
            let f = row[rank] / pivot[rank];
            row[rank..].iter_mut().zip(&pivot[rank..]).for_each(|(x, v)| *x -= f * v);
        }
        rank += 1;
    }
    rank
}

/// `‖HH† − nI‖_F²` for the dephased matrix built from row-major inner phases.
pub fn naive_chm_objective(n: usize, phases: &[f64]) -> f64 {
    let h: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    if j == 0 || k == 0 {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::from_polar(1.0, phases[(j - 1) * (n - 1) + k - 1])
                    }
                })
                .collect()
        })
        .collect();
    let mut total = 0.0;
    for j in 0..n {
        for k in 0..n {
            let mut g: C64 = (0..n).map(|l| h[j][l] * h[k][l].conj()).sum();
            if j == k {
                g -= n as f64;
            }
            total += g.norm_sqr();
        }
    }
    total
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
