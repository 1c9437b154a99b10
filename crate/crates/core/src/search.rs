//! Multi-start search over dephased phase space for CHMs with a prescribed
//! eigenvalue multiset.
//!
//! A dephased `n×n` matrix is fixed by the `(n−1)²` phases of its inner block.
//! The objective is `w_chm·‖HH† − nI‖_F² + w_spec·penalty`, where the penalty
//! either measures the distance to an explicit spectrum or how far the
//! eigenvalues are from clustering into a multiplicity pattern on the circle
//! of radius `√n`. Each restart runs BFGS with a backtracking line search from
//! random phases; restarts are independent and seeded by their index.

use std::f64::consts::TAU;
use std::io::Write;
use std::str::FromStr;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::{self, Spectrum};
use crate::error::{ChmError, Result};
use crate::hadamard::is_dephased;
use crate::matrix::{cis, CMatrix, C64, ONE};
use crate::parallel::{self, Execution};
use crate::spectral::multiplicity_profile;

/// Step size of the central differences used for the spectral term.
pub const FD_STEP: f64 = 1e-6;
/// Local descent stops once an accepted step is shorter than this.
pub const MIN_STEP: f64 = 1e-12;
/// Eigenvalue clustering radius used when reporting the found profile.
pub const PROFILE_TOL: f64 = 1e-6;
/// Hermitian-defect floor imposed by the `-non-hermitian` pattern suffix.
pub const NON_HERMITIAN_MARGIN: f64 = 0.1;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    /// Cluster sizes; padded with ones up to the number of free eigenvalues.
    pub multiplicities: Vec<usize>,
    /// Pin one eigenvalue at `√n` and one at `−√n`, and apply the pattern to
    /// the remaining `n − 2`.
    #[serde(default)]
    pub pinned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Spectrum(Spectrum),
    Pattern(Pattern),
}

/// A pattern string such as `[4,1,1]`, `3,1,1,1-non-hermitian` or
/// `[3,1]-pinned`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    pub pattern: Pattern,
    pub non_hermitian: bool,
}

impl FromStr for PatternSpec {
    type Err = ChmError;

    fn from_str(s: &str) -> Result<Self> {
        let mut body = s.trim();
        let (mut pinned, mut non_hermitian) = (false, false);
        loop {
            if let Some(rest) = body.strip_suffix("-non-hermitian") {
                non_hermitian = true;
                body = rest;
            } else if let Some(rest) = body.strip_suffix("-pinned") {
                pinned = true;
                body = rest;
            } else {
                break;
            }
        }
        let body = body.trim().trim_start_matches('[').trim_end_matches(']');
        let multiplicities = body
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| ChmError::Parse(format!("bad multiplicity {p:?} in pattern {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { pattern: Pattern { multiplicities, pinned }, non_hermitian })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w_chm: f64,
    pub w_spec: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { w_chm: 1.0, w_spec: 1.0 }
    }
}

fn default_n() -> usize {
    6
}

fn default_tol_success() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTask {
    #[serde(default = "default_n")]
    pub n: usize,
    pub target: Target,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    #[serde(default = "default_tol_success")]
    pub tol_success: f64,
    #[serde(default)]
    pub weights: Weights,
    /// Adds `max(0, m − ‖H − H†‖_F²)²`, pushing the search away from
    /// Hermitian matrices.
    #[serde(default)]
    pub hermitian_margin: Option<f64>,
    /// Keep the per-iteration residuals of every restart.
    #[serde(default)]
    pub record_history: bool,
}

impl SearchTask {
    pub fn new(target: Target, restarts: usize, max_iters: usize, seed: u64) -> Self {
        Self {
            n: default_n(),
            target,
            restarts,
            max_iters,
            seed,
            tol_success: default_tol_success(),
            weights: Weights::default(),
            hermitian_margin: None,
            record_history: false,
        }
    }

    /// Task for a pattern string, see [`PatternSpec`].
    pub fn for_pattern(spec: &str, restarts: usize, max_iters: usize, seed: u64) -> Result<Self> {
        let parsed: PatternSpec = spec.parse()?;
        let mut task = Self::new(Target::Pattern(parsed.pattern), restarts, max_iters, seed);
        task.hermitian_margin = parsed.non_hermitian.then_some(NON_HERMITIAN_MARGIN);
        Ok(task)
    }

    pub fn phase_count(&self) -> usize {
        (self.n - 1) * (self.n - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ChmError::Precondition(msg));
        if !(2..=8).contains(&self.n) {
            return bad(format!("n = {} is outside 2..=8", self.n));
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        let Weights { w_chm, w_spec } = self.weights;
        if !(w_chm > 0.0 && w_spec > 0.0 && w_chm.is_finite() && w_spec.is_finite()) {
            return bad(format!("weights must be positive, got ({w_chm}, {w_spec})"));
        }
        if self.tol_success.is_nan() || self.tol_success <= 0.0 {
            return bad(format!("tol_success must be positive, got {}", self.tol_success));
        }
        if let Some(m) = self.hermitian_margin {
            if !(m >= 0.0 && m.is_finite()) {
                return bad(format!("hermitian margin must be nonnegative, got {m}"));
            }
        }
        match &self.target {
            Target::Spectrum(s) if s.n() != self.n => {
                bad(format!("target spectrum has {} values for n = {}", s.n(), self.n))
            }
            Target::Spectrum(_) => Ok(()),
            Target::Pattern(p) => {
                let free = if p.pinned { self.n.saturating_sub(2) } else { self.n };
                if p.pinned && self.n < 3 {
                    return bad("pinned patterns need n >= 3".into());
                }
                if p.multiplicities.contains(&0) {
                    return bad("multiplicities must be at least 1".into());
                }
                let total: usize = p.multiplicities.iter().sum();
                if total > free {
                    return bad(format!(
                        "pattern {:?} needs {total} eigenvalues but only {free} are free",
                        p.multiplicities
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Dephased matrix whose inner block has entries `e^{iθ}`, row-major.
pub fn matrix_from_phases(n: usize, phases: &[f64]) -> Result<CMatrix> {
    check_phase_count(n, phases)?;
    Ok(CMatrix::from_fn(n, n, |j, k| if j == 0 || k == 0 { ONE } else { cis(phases[(j - 1) * (n - 1) + (k - 1)]) }))
}

/// Inverse of [`matrix_from_phases`] for a dephased matrix.
pub fn phases_from_matrix(h: &CMatrix) -> Result<Vec<f64>> {
    let n = h.ensure_square()?;
    if !is_dephased(h, 1e-10) {
        return Err(ChmError::Precondition("matrix is not in dephased form".into()));
    }
    Ok((1..n).cartesian_product(1..n).map(|(j, k)| h[(j, k)].arg()).collect())
}

fn check_phase_count(n: usize, phases: &[f64]) -> Result<()> {
    let want = n.saturating_sub(1).pow(2);
    if n < 2 || phases.len() != want {
        return Err(ChmError::Dimension(format!("expected {want} phases for n = {n}, got {}", phases.len())));
    }
    if phases.iter().any(|x| !x.is_finite()) {
        return Err(ChmError::Precondition("phases must be finite".into()));
    }
    Ok(())
}

fn dimension_from_phase_count(len: usize) -> Result<usize> {
    let m = (len as f64).sqrt().round() as usize;
    if m * m != len || m == 0 {
        return Err(ChmError::Dimension(format!("{len} phases is not (n-1)^2 for any n >= 2")));
    }
    Ok(m + 1)
}

/// `‖HH† − nI‖_F²` and, optionally, its gradient with respect to the phases:
/// `∂/∂θ_jk = −4 Im(H_jk (H†G)_kj)` with `G = HH† − nI`.
fn chm_term(h: &CMatrix, grad: Option<&mut [f64]>) -> f64 {
    let n = h.n();
    let mut g = h.gram_rows();
    for j in 0..n {
        g[(j, j)] -= C64::new(n as f64, 0.0);
    }
    let value = g.as_slice().iter().map(|z| z.norm_sqr()).sum();
    if let Some(out) = grad {
        let hg = h.adjoint().mul_unchecked(&g);
        for j in 1..n {
            for k in 1..n {
                out[(j - 1) * (n - 1) + (k - 1)] = -4.0 * (h[(j, k)] * hg[(k, j)]).im;
            }
        }
    }
    value
}

/// Value of the CHM term of the objective.
pub fn chm_objective(phases: &[f64]) -> Result<f64> {
    let n = dimension_from_phase_count(phases.len())?;
    Ok(chm_term(&matrix_from_phases(n, phases)?, None))
}

/// Analytic gradient of the CHM term.
pub fn chm_gradient(phases: &[f64]) -> Result<Vec<f64>> {
    let n = dimension_from_phase_count(phases.len())?;
    let h = matrix_from_phases(n, phases)?;
    let mut g = vec![0.0; phases.len()];
    chm_term(&h, Some(&mut g));
    Ok(g)
}

/// Largest deviation between the analytic CHM gradient and central finite
/// differences with step [`FD_STEP`], relative to the gradient's max-norm.
pub fn gradient_check(phases: &[f64]) -> Result<f64> {
    let analytic = chm_gradient(phases)?;
    let mut x = phases.to_vec();
    let mut numeric = vec![0.0; x.len()];
    for i in 0..x.len() {
        let x0 = x[i];
        x[i] = x0 + FD_STEP;
        let fp = chm_objective(&x)?;
        x[i] = x0 - FD_STEP;
        let fm = chm_objective(&x)?;
        x[i] = x0;
        numeric[i] = (fp - fm) / (2.0 * FD_STEP);
    }
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = inf(&analytic).max(inf(&numeric)).max(f64::MIN_POSITIVE);
    Ok(analytic.iter().zip(&numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
}

/// All set partitions of `0..m` whose block sizes are the multiset `sizes`.
fn partitions_with_sizes(m: usize, sizes: &[usize]) -> Vec<Vec<Vec<usize>>> {
    fn rec(free: &[usize], sizes: &mut Vec<usize>, current: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        let Some((&first, rest)) = free.split_first() else {
            out.push(current.clone());
            return;
        };
        let distinct: Vec<usize> = sizes.iter().copied().unique().collect();
        for s in distinct {
            let pos = sizes.iter().position(|&x| x == s).expect("size present");
            sizes.remove(pos);
            for companions in rest.iter().copied().combinations(s - 1) {
                let mut block = vec![first];
                block.extend(&companions);
                let remaining: Vec<usize> = rest.iter().copied().filter(|x| !companions.contains(x)).collect();
                current.push(block);
                rec(&remaining, sizes, current, out);
                current.pop();
            }
            sizes.insert(pos, s);
        }
    }
    let mut padded = sizes.to_vec();
    padded.extend(std::iter::repeat_n(1, m.saturating_sub(sizes.iter().sum())));
    let mut out = Vec::new();
    let free: Vec<usize> = (0..m).collect();
    rec(&free, &mut padded, &mut Vec::new(), &mut out);
    out
}

/// Smallest clustering cost over the given partitions of `values`: within-block
/// variance plus the squared deviation of each block mean's modulus from `radius`.
fn cluster_cost(values: &[C64], partitions: &[Vec<Vec<usize>>], radius: f64) -> f64 {
    partitions
        .iter()
        .map(|blocks| {
            blocks
                .iter()
                .map(|b| {
                    let mean = b.iter().map(|&i| values[i]).sum::<C64>() / b.len() as f64;
                    let spread: f64 = b.iter().map(|&i| (values[i] - mean).norm_sqr()).sum();
                    spread + (mean.norm() - radius).powi(2)
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

struct Problem<'a> {
    task: &'a SearchTask,
    n: usize,
    partitions: Vec<Vec<Vec<usize>>>,
}

impl<'a> Problem<'a> {
    fn new(task: &'a SearchTask) -> Result<Self> {
        task.validate()?;
        let n = task.n;
        let partitions = match &task.target {
            Target::Spectrum(_) => Vec::new(),
            Target::Pattern(p) => partitions_with_sizes(if p.pinned { n - 2 } else { n }, &p.multiplicities),
        };
        Ok(Self { task, n, partitions })
    }

    fn spectral_penalty(&self, values: &[C64]) -> f64 {
        let radius = (self.n as f64).sqrt();
        match &self.task.target {
            Target::Spectrum(s) => eigen::distance_between(values, s.values()).map_or(f64::INFINITY, |d| d * d),
            Target::Pattern(p) if p.pinned => {
                let mut best = f64::INFINITY;
                let mut rest = Vec::with_capacity(self.n - 2);
                for i in 0..self.n {
                    for j in 0..self.n {
                        if i == j {
                            continue;
                        }
                        let pin = (values[i] - radius).norm_sqr() + (values[j] + radius).norm_sqr();
                        if pin >= best {
                            continue;
                        }
                        rest.clear();
                        rest.extend((0..self.n).filter(|&k| k != i && k != j).map(|k| values[k]));
                        best = best.min(pin + cluster_cost(&rest, &self.partitions, radius));
                    }
                }
                best
            }
            Target::Pattern(_) => cluster_cost(values, &self.partitions, radius),
        }
    }

    /// Everything except the CHM term. Non-convergence of the eigensolver
    /// makes the point unusable, reported as an infinite objective.
    fn auxiliary(&self, h: &CMatrix) -> f64 {
        let spec = match eigen::eigenvalues_unsorted(h) {
            Ok(values) => self.task.weights.w_spec * self.spectral_penalty(&values),
            Err(_) => f64::INFINITY,
        };
        let herm = self.task.hermitian_margin.map_or(0.0, |m| {
            let d = h.hermitian_defect().powi(2);
            (m - d).max(0.0).powi(2)
        });
        spec + herm
    }

    fn value(&self, x: &[f64]) -> f64 {
        let h = matrix_from_phases(self.n, x).expect("phase count checked");
        self.task.weights.w_chm * chm_term(&h, None) + self.auxiliary(&h)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let h = matrix_from_phases(self.n, x).expect("phase count checked");
        let w = self.task.weights.w_chm;
        let value = w * chm_term(&h, Some(grad)) + self.auxiliary(&h);
        grad.iter_mut().for_each(|g| *g *= w);
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            probe[i] = x[i] + FD_STEP;
            let fp = self.auxiliary(&matrix_from_phases(self.n, &probe).expect("phase count checked"));
            probe[i] = x[i] - FD_STEP;
            let fm = self.auxiliary(&matrix_from_phases(self.n, &probe).expect("phase count checked"));
            probe[i] = x[i];
            grad[i] += (fp - fm) / (2.0 * FD_STEP);
        }
        value
    }
}

/// Objective value at `phases` for `task`.
pub fn objective(phases: &[f64], task: &SearchTask) -> Result<f64> {
    let problem = Problem::new(task)?;
    check_phase_count(task.n, phases)?;
    Ok(problem.value(phases))
}

struct LocalResult {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS on the inverse Hessian with Armijo backtracking.
fn bfgs(problem: &Problem, mut x: Vec<f64>, max_iters: usize, record: bool) -> LocalResult {
    let m = x.len();
    let mut g = vec![0.0; m];
    let mut f = problem.value_grad(&x, &mut g);
    let mut hinv = identity(m);
    let mut scaled = false;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut d = vec![0.0; m];
    let mut g_new = vec![0.0; m];
    let mut x_new = vec![0.0; m];

    while iterations < max_iters && f.is_finite() {
        for (i, di) in d.iter_mut().enumerate() {
            *di = -dot(&hinv[i * m..(i + 1) * m], &g);
        }
        let mut slope = dot(&g, &d);
        if slope.is_nan() || slope >= 0.0 {
            hinv = identity(m);
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = -dot(&g, &g);
        }
        if slope == 0.0 {
            break;
        }
        let mut alpha = 1.0;
        let mut f_new = f64::INFINITY;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            x_new.iter_mut().zip(x.iter().zip(&d)).for_each(|(xn, (xi, di))| *xn = xi + alpha * di);
            f_new = problem.value(&x_new);
            if f_new <= f + ARMIJO_C1 * alpha * slope {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        iterations += 1;
        let step = alpha * dot(&d, &d).sqrt();
        problem.value_grad(&x_new, &mut g_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if !scaled {
                let gamma = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|v| *v *= gamma);
                scaled = true;
            }
            bfgs_update(&mut hinv, &s, &y, sy);
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        if record {
            history.push(f.sqrt());
        }
        if step < MIN_STEP {
            break;
        }
    }
    LocalResult { x, value: f, iterations, history }
}

fn identity(m: usize) -> Vec<f64> {
    let mut id = vec![0.0; m * m];
    (0..m).for_each(|i| id[i * m + i] = 1.0);
    id
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` for symmetric `H`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let m = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..m).map(|i| dot(&h[i * m..(i + 1) * m], y)).collect();
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..m {
        for j in 0..m {
            h[i * m + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchVerdict {
    Found,
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    /// The task seed; restarts differ by the ChaCha stream, which equals `restart`.
    pub seed: u64,
    pub residual: f64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    /// `sqrt` of the smallest objective over all restarts.
    pub best_residual: f64,
    pub best_restart: usize,
    pub best_matrix: CMatrix,
    pub best_spectrum: Spectrum,
    /// Cluster sizes of `best_spectrum` at [`PROFILE_TOL`].
    pub best_profile: Vec<usize>,
    pub restarts: Vec<RestartTrace>,
    pub verdict: SearchVerdict,
}

impl SearchReport {
    pub fn found(&self) -> bool {
        self.verdict == SearchVerdict::Found
    }

    /// Writes `restart,iter,residual` lines for every recorded iteration.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "restart,iter,residual")?;
        for trace in &self.restarts {
            for (i, r) in trace.history.iter().enumerate() {
                writeln!(w, "{},{},{:.16e}", trace.restart, i + 1, r)?;
            }
        }
        Ok(())
    }
}

/// Starting phases of one restart: uniform on `[0, 2π)` from ChaCha8 keyed by
/// `seed` on stream `restart`.
pub fn initial_phases(seed: u64, restart: usize, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    (0..count).map(|_| rng.random_range(0.0..TAU)).collect()
}

pub fn minimize(task: &SearchTask) -> Result<SearchReport> {
    minimize_with(task, Execution::default())
}

pub fn minimize_with(task: &SearchTask, exec: Execution) -> Result<SearchReport> {
    let problem = Problem::new(task)?;
    let runs = parallel::map_indexed(task.restarts, exec, |r| {
        let x0 = initial_phases(task.seed, r, task.phase_count());
        bfgs(&problem, x0, task.max_iters, task.record_history)
    });

    let best_restart =
        runs.iter().enumerate().fold(0, |best, (i, run)| if run.value < runs[best].value { i } else { best });
    let best = &runs[best_restart];
    let best_residual = best.value.max(0.0).sqrt();
    let best_matrix = matrix_from_phases(task.n, &best.x)?;
    let best_spectrum = eigen::eigenvalues(&best_matrix)?;
    let best_profile = multiplicity_profile(&best_spectrum, PROFILE_TOL);
    let restarts = runs
        .iter()
        .enumerate()
        .map(|(restart, run)| RestartTrace {
            restart,
            seed: task.seed,
            residual: run.value.max(0.0).sqrt(),
            iterations: run.iterations,
            history: run.history.clone(),
        })
        .collect();
    let verdict = if best_residual <= task.tol_success { SearchVerdict::Found } else { SearchVerdict::NotFound };
    Ok(SearchReport { best_residual, best_restart, best_matrix, best_spectrum, best_profile, restarts, verdict })
}

/// The multiplicity profile a pattern target asks for, padded with ones.
pub fn expected_profile(n: usize, pattern: &Pattern) -> Vec<usize> {
    let free = if pattern.pinned { n - 2 } else { n };
    let mut profile = pattern.multiplicities.clone();
    let used: usize = profile.iter().sum();
    profile.extend(std::iter::repeat_n(1, free.saturating_sub(used)));
    if pattern.pinned {
        profile.extend([1, 1]);
    }
    profile.sort_unstable_by(|a, b| b.cmp(a));
    profile
}
