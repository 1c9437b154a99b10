//! Small dense complex eigensolver.
//!
//! Eigenvalues come from a Householder reduction to upper Hessenberg form
//! followed by single-shift QR sweeps with Wilkinson shifts. Complex
//! arithmetic makes the double-shift machinery unnecessary. Eigenvectors are
//! recovered by inverse iteration, one block per eigenvalue cluster.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{ChmError, Result};
use crate::matrix::{CMatrix, C64, ZERO};

/// Eigenvalues closer than this are treated as one repeated eigenvalue.
pub const CLUSTER_TOL: f64 = 1e-7;

/// Deflation iterations allowed per unit of dimension.
const QR_ITERS_PER_DIM: usize = 100;
const INVERSE_ITERATION_SWEEPS: usize = 3;
/// Pairs whose residual exceeds this multiple of `‖H‖_F` are reported as failures.
const PAIR_FAILURE_RESIDUAL: f64 = 1e-6;

/// Multiset of eigenvalues in a canonical order: real part descending, then
/// imaginary part descending. Real parts that agree to ~1e-9 (relative) are
/// treated as ties so conjugate pairs sort stably.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<C64>,
}

impl Spectrum {
    pub fn new(mut values: Vec<C64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(ChmError::Precondition(format!("non-finite eigenvalue {bad}")));
        }
        canonical_sort(&mut values);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn sum(&self) -> C64 {
        self.values.iter().sum()
    }

    pub fn product(&self) -> C64 {
        self.values.iter().product()
    }
}

fn canonical_sort(values: &mut [C64]) {
    values.sort_by(|a, b| b.re.total_cmp(&a.re));
    let scale = 1.0 + values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tie = 1e-9 * scale;
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && (values[end - 1].re - values[end].re).abs() <= tie {
            end += 1;
        }
        values[start..end].sort_by(|a, b| b.im.total_cmp(&a.im));
        start = end;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: C64,
    /// Unit-norm eigenvector, phased so its largest component is real positive.
    pub vector: Vec<C64>,
}

impl EigenPair {
    /// `‖H v − λ v‖₂`.
    pub fn residual(&self, h: &CMatrix) -> f64 {
        let hv = h.mul_vec(&self.vector);
        hv.iter().zip(&self.vector).map(|(a, b)| (a - self.value * b).norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Full eigenvalue multiset of a square matrix.
pub fn eigenvalues(h: &CMatrix) -> Result<Spectrum> {
    let n = h.ensure_square()?;
    h.ensure_finite()?;
    let mut work = h.as_slice().to_vec();
    reduce_to_hessenberg(&mut work, n);
    let values = hessenberg_qr(&mut work, n)?;
    Spectrum::new(values)
}

/// Eigenvalues without canonical sorting. Used in hot loops.
pub(crate) fn eigenvalues_unsorted(h: &CMatrix) -> Result<Vec<C64>> {
    let n = h.ensure_square()?;
    let mut work = h.as_slice().to_vec();
    reduce_to_hessenberg(&mut work, n);
    hessenberg_qr(&mut work, n)
}

/// Householder reduction to upper Hessenberg form, in place, row-major.
fn reduce_to_hessenberg(a: &mut [C64], n: usize) {
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let alpha = (k + 1..n).map(|r| a[r * n + k].norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        for (i, r) in (k + 1..n).enumerate() {
            v[i] = a[r * n + k];
        }
        v[0] += phase * alpha;
        let vnorm2: f64 = v[..len].iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // Left: A ← (I − β v v†) A on rows k+1..n.
        for c in k..n {
            let dot: C64 = (0..len).map(|i| v[i].conj() * a[(k + 1 + i) * n + c]).sum();
            let f = dot * beta;
            for i in 0..len {
                a[(k + 1 + i) * n + c] -= v[i] * f;
            }
        }
        // Right: A ← A (I − β v v†) on columns k+1..n.
        for r in 0..n {
            let dot: C64 = (0..len).map(|i| a[r * n + k + 1 + i] * v[i]).sum();
            let f = dot * beta;
            for i in 0..len {
                a[r * n + k + 1 + i] -= f * v[i].conj();
            }
        }
        for r in k + 2..n {
            a[r * n + k] = ZERO;
        }
    }
}

/// Givens rotation `[[c, s], [-s̄, c]]` that zeroes `g` against `f`.
fn givens(f: C64, g: C64) -> (f64, C64) {
    let fa = f.norm();
    let ga = g.norm();
    if ga == 0.0 {
        return (1.0, ZERO);
    }
    if fa == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let r = fa.hypot(ga);
    (fa / r, (f / fa) * g.conj() / r)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// Single-shift QR iteration on an upper Hessenberg matrix with deflation.
fn hessenberg_qr(h: &mut [C64], n: usize) -> Result<Vec<C64>> {
    let mut values = vec![ZERO; n];
    if n == 0 {
        return Ok(values);
    }
    let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let max_iter = QR_ITERS_PER_DIM * n;
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let at = |r: usize, c: usize| r * n + c;

    loop {
        if hi == 0 {
            values[0] = h[at(0, 0)];
            break;
        }
        // Locate the active unreduced block [lo, hi].
        let mut lo = hi;
        while lo > 0 {
            let mut s = h[at(lo - 1, lo - 1)].norm() + h[at(lo, lo)].norm();
            if s == 0.0 {
                s = norm;
            }
            if h[at(lo, lo - 1)].norm() <= eps * s {
                h[at(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            values[hi] = h[at(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        total += 1;
        since_deflation += 1;
        if total > max_iter {
            let converged = n - 1 - hi;
            return Err(ChmError::Convergence {
                iterations: total - 1,
                converged,
                n,
                partial: values[hi + 1..].to_vec(),
            });
        }

        let mu = if since_deflation.is_multiple_of(11) {
            // Exceptional shift to break cycling.
            h[at(hi, hi)] + C64::new(0.75 * h[at(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[at(hi - 1, hi - 1)], h[at(hi - 1, hi)], h[at(hi, hi - 1)], h[at(hi, hi)])
        };

        for k in lo..=hi {
            h[at(k, k)] -= mu;
        }
        let mut rots: Vec<(f64, C64)> = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[at(k, k)], h[at(k + 1, k)]);
            for col in k..=hi {
                let x = h[at(k, col)];
                let y = h[at(k + 1, col)];
                h[at(k, col)] = x * c + s * y;
                h[at(k + 1, col)] = -s.conj() * x + y * c;
            }
            h[at(k + 1, k)] = ZERO;
            rots.push((c, s));
        }
        for (offset, &(c, s)) in rots.iter().enumerate() {
            let k = lo + offset;
            for row in lo..=(k + 1).min(hi) {
                let x = h[at(row, k)];
                let y = h[at(row, k + 1)];
                h[at(row, k)] = x * c + s.conj() * y;
                h[at(row, k + 1)] = -s * x + y * c;
            }
        }
        for k in lo..=hi {
            h[at(k, k)] += mu;
        }
    }
    Ok(values)
}

/// Groups values so that each member lies within `tol` of its cluster's
/// first member. Clusters are returned in order of first appearance.
pub fn cluster_indices(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, z) in values.iter().enumerate() {
        match clusters.iter_mut().find(|c| (values[c[0]] - z).norm() <= tol) {
            Some(c) => c.push(i),
            None => clusters.push(vec![i]),
        }
    }
    clusters
}

/// Eigenpairs with per-pair outcomes. Repeated eigenvalues (within
/// [`CLUSTER_TOL`]) share an orthonormal basis of their invariant subspace.
pub fn eigenpairs_detailed(h: &CMatrix) -> Result<Vec<Result<EigenPair>>> {
    let spectrum = eigenvalues(h)?;
    let n = h.n();
    let hnorm = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let values = spectrum.values();
    let mut out = Vec::with_capacity(n);
    for cluster in cluster_indices(values, CLUSTER_TOL) {
        let mean = cluster.iter().map(|&i| values[i]).sum::<C64>() / cluster.len() as f64;
        let basis = inverse_iteration_block(h, mean, cluster.len(), hnorm);
        for (slot, &i) in cluster.iter().enumerate() {
            let pair = EigenPair { value: values[i], vector: basis[slot].clone() };
            let residual = pair.residual(h);
            if residual.is_finite() && residual <= PAIR_FAILURE_RESIDUAL * hnorm {
                out.push(Ok(pair));
            } else {
                out.push(Err(ChmError::EigenvectorConvergence { value: values[i], residual }));
            }
        }
    }
    Ok(out)
}

/// All eigenpairs, failing on the first pair whose inverse iteration did not
/// converge.
pub fn eigenpairs(h: &CMatrix) -> Result<Vec<EigenPair>> {
    eigenpairs_detailed(h)?.into_iter().collect()
}

/// Block inverse iteration on `H − μI` followed by orthonormalisation.
fn inverse_iteration_block(h: &CMatrix, shift: C64, m: usize, hnorm: f64) -> Vec<Vec<C64>> {
    let n = h.n();
    let lu = Lu::factor(h, shift, hnorm);
    let mut block: Vec<Vec<C64>> = (0..m).map(|j| start_vector(n, j)).collect();
    for _ in 0..INVERSE_ITERATION_SWEEPS {
        for v in block.iter_mut() {
            *v = lu.solve(v);
        }
        orthonormalize(&mut block);
    }
    for v in block.iter_mut() {
        normalize_phase(v);
    }
    block
}

/// Deterministic, well-spread starting vectors.
fn start_vector(n: usize, seed: usize) -> Vec<C64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ ((seed as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03));
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    (0..n).map(|_| C64::new(next(), next())).collect()
}

/// Modified Gram–Schmidt, applied twice for stability.
pub(crate) fn orthonormalize(block: &mut [Vec<C64>]) {
    for _ in 0..2 {
        for j in 0..block.len() {
            let (done, rest) = block.split_at_mut(j);
            let v = &mut rest[0];
            for q in done.iter() {
                let proj: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|z| *z /= norm);
            }
        }
    }
}

/// Rotates a vector so its largest-modulus component is real and positive.
pub(crate) fn normalize_phase(v: &mut [C64]) {
    let pivot =
        v.iter().copied().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(Ordering::Equal)).unwrap_or(ZERO);
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

/// LU factorisation with partial pivoting of `H − μI`. Tiny pivots are
/// replaced by `eps·‖H‖` so exact eigenvalue shifts stay solvable.
struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(h: &CMatrix, shift: C64, hnorm: f64) -> Self {
        let n = h.n();
        let mut lu = h.as_slice().to_vec();
        for k in 0..n {
            lu[k * n + k] -= shift;
        }
        let floor = f64::EPSILON * hnorm;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&a, &b| lu[a * n + k].norm().partial_cmp(&lu[b * n + k].norm()).unwrap_or(Ordering::Equal))
                .unwrap_or(k);
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            if lu[k * n + k].norm() < floor {
                lu[k * n + k] = C64::new(floor, 0.0);
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / pivot;
                lu[r * n + k] = f;
                if f != ZERO {
                    for c in k + 1..n {
                        let u = lu[k * n + c];
                        lu[r * n + c] -= f * u;
                    }
                }
            }
        }
        Self { n, lu, perm }
    }

    fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let s: C64 = (0..r).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] -= s;
        }
        for r in (0..n).rev() {
            let s: C64 = (r + 1..n).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] = (x[r] - s) / self.lu[r * n + r];
        }
        // Rescale so repeated solves stay in range.
        let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale > 0.0 && scale.is_finite() {
            x.iter_mut().for_each(|z| *z /= scale);
        }
        x
    }
}

/// Bottleneck distance between spectra: the smallest, over all pairings, of
/// the largest pairwise gap. Exhaustive over `n!` pairings, so `n ≤ 8`.
pub fn spectrum_distance(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    distance_between(a.values(), b.values())
}

pub(crate) fn distance_between(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(ChmError::Dimension(format!("spectra of sizes {} and {}", a.len(), b.len())));
    }
    if a.len() > 8 {
        return Err(ChmError::Dimension(format!("spectrum_distance supports n <= 8, got {}", a.len())));
    }
    let n = a.len();
    let cost: Vec<f64> = (0..n * n).map(|ij| (a[ij / n] - b[ij % n]).norm()).collect();
    let mut best = f64::INFINITY;
    let mut used = vec![false; n];
    bottleneck_search(&cost, n, 0, 0.0, &mut used, &mut best);
    Ok(if n == 0 { 0.0 } else { best })
}

fn bottleneck_search(cost: &[f64], n: usize, row: usize, current: f64, used: &mut [bool], best: &mut f64) {
    if current >= *best {
        return;
    }
    if row == n {
        *best = current;
        return;
    }
    for col in 0..n {
        if !used[col] {
            used[col] = true;
            bottleneck_search(cost, n, row + 1, current.max(cost[row * n + col]), used, best);
            used[col] = false;
        }
    }
}
