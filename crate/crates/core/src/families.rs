//! Generators for the named complex Hadamard families: Fourier, the Tao
//! matrix, the Haagerup one-parameter family and the Hermitian family.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{ChmError, Result};
use crate::matrix::{cis, CMatrix, C64, I, ONE};

/// Lower end of the admissible |θ| range for the Hermitian family,
/// `arccos((√3 − 1)/2)`.
pub fn hermitian_theta_min() -> f64 {
    ((3f64.sqrt() - 1.0) / 2.0).acos()
}

/// Unimodularity tolerance for parameters (`q`, branch selection).
const UNIMODULAR_TOL: f64 = 1e-12;
const BRANCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaBranch {
    /// ω = e^{2πi/3}
    #[default]
    First,
    /// ω = e^{4πi/3}
    Second,
}

impl OmegaBranch {
    pub fn omega(self) -> C64 {
        match self {
            OmegaBranch::First => cis(TAU / 3.0),
            OmegaBranch::Second => cis(2.0 * TAU / 3.0),
        }
    }
}

/// Tagged parameter record selecting a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FamilySpec {
    Fourier {
        n: usize,
    },
    Tao {
        #[serde(default)]
        omega_branch: OmegaBranch,
    },
    Haagerup {
        q_re: f64,
        q_im: f64,
    },
    Hermitian {
        theta: f64,
    },
}

impl FamilySpec {
    pub fn haagerup_arg(arg: f64) -> Self {
        let q = cis(arg);
        FamilySpec::Haagerup { q_re: q.re, q_im: q.im }
    }

    pub fn generate(&self) -> Result<CMatrix> {
        match *self {
            FamilySpec::Fourier { n } => gen_fourier(n),
            FamilySpec::Tao { omega_branch } => Ok(gen_tao(omega_branch)),
            FamilySpec::Haagerup { q_re, q_im } => gen_haagerup(C64::new(q_re, q_im)),
            FamilySpec::Hermitian { theta } => gen_hermitian(theta).map(|h| h.matrix),
        }
    }
}

/// `F_n[j,k] = e^{2πi jk/n}`.
pub fn gen_fourier(n: usize) -> Result<CMatrix> {
    if n < 2 {
        return Err(ChmError::Domain(format!("Fourier matrix needs n >= 2, got {n}")));
    }
    // Reduce jk mod n first so large products keep full precision.
    Ok(CMatrix::from_fn(n, n, |j, k| root_of_unity((j * k) % n, n)))
}

fn root_of_unity(k: usize, n: usize) -> C64 {
    // Exact values on the axes avoid 1e-16 noise in the real Hadamard cases.
    if (4 * k).is_multiple_of(n) {
        return [ONE, I, -ONE, -I][(4 * k / n) % 4];
    }
    cis(TAU * k as f64 / n as f64)
}

/// The 6×6 Tao matrix over the cube roots of unity.
pub fn gen_tao(branch: OmegaBranch) -> CMatrix {
    let w = branch.omega();
    let w2 = w * w;
    let rows = [
        [ONE, ONE, ONE, ONE, ONE, ONE],
        [ONE, ONE, w, w, w2, w2],
        [ONE, w, ONE, w2, w2, w],
        [ONE, w, w2, ONE, w, w2],
        [ONE, w2, w2, w, ONE, w],
        [ONE, w2, w, w2, w, ONE],
    ];
    CMatrix::from_fn(6, 6, |j, k| rows[j][k])
}

/// The Haagerup family `H_6^q`, `|q| = 1`.
pub fn gen_haagerup(q: C64) -> Result<CMatrix> {
    if !q.re.is_finite() || !q.im.is_finite() || (q.norm() - 1.0).abs() > UNIMODULAR_TOL {
        return Err(ChmError::Domain(format!("Haagerup parameter must be unimodular, |q| = {}", q.norm())));
    }
    let qi = q.conj();
    let rows = [
        [ONE, ONE, ONE, ONE, ONE, ONE],
        [ONE, -ONE, I, I, -I, -I],
        [ONE, I, -ONE, -I, q, -q],
        [ONE, I, -I, -ONE, -q, q],
        [ONE, -I, qi, -qi, I, -ONE],
        [ONE, -I, -qi, qi, -ONE, I],
    ];
    Ok(CMatrix::from_fn(6, 6, |j, k| rows[j][k]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SqrtBranch {
    Principal,
    Negated,
}

/// A member of the Hermitian family together with its derived parameters.
#[derive(Debug, Clone)]
pub struct HermitianMember {
    pub matrix: CMatrix,
    pub x: C64,
    pub y: C64,
    pub z: C64,
    pub t: C64,
    pub branch: SqrtBranch,
}

pub fn theta_in_hermitian_domain(theta: f64) -> bool {
    theta.is_finite() && theta.abs() >= hermitian_theta_min() && theta.abs() <= PI
}

/// The dephased Hermitian family, parameterised by `θ`.
///
/// `x`, `y`, `z`, `t` are unimodular. The square root in `x`/`t` is taken on
/// the principal branch unless that fails to give unimodular values, in which
/// case the negated root is tried.
pub fn gen_hermitian(theta: f64) -> Result<HermitianMember> {
    if !theta_in_hermitian_domain(theta) {
        return Err(ChmError::Domain(format!(
            "theta = {theta} outside [-pi, -{m:.6}] U [{m:.6}, pi]",
            m = hermitian_theta_min()
        )));
    }
    let y = cis(theta);
    let y2 = y * y;
    let num_z = ONE + 2.0 * y - y2;
    let den_t = -ONE + 2.0 * y + y2;
    let z = num_z / (y * den_t);

    // 1 + 2y + 2y³ + y⁴ = y²(2cosθ + 1 + √3)(2cosθ + 1 − √3)
    let c = theta.cos();
    let s3 = 3f64.sqrt();
    let radicand = y2 * ((2.0 * c + 1.0 + s3) * (2.0 * c + 1.0 - s3));
    let root = 2f64.sqrt() * radicand.sqrt();
    let base = ONE + 2.0 * y + y2;

    let candidate = |r: C64| {
        let x = (base - r) / num_z;
        let t = (base - r) / den_t;
        (x, t)
    };
    let (px, pt) = candidate(root);
    let (nx, nt) = candidate(-root);
    let ok = |x: C64, t: C64| (x.norm() - 1.0).abs() <= BRANCH_TOL && (t.norm() - 1.0).abs() <= BRANCH_TOL;
    let (x, t, branch) = if ok(px, pt) {
        (px, pt, SqrtBranch::Principal)
    } else if ok(nx, nt) {
        (nx, nt, SqrtBranch::Negated)
    } else {
        return Err(ChmError::BranchFailure {
            principal_x: px.norm(),
            principal_t: pt.norm(),
            negated_x: nx.norm(),
            negated_t: nt.norm(),
        });
    };
    if (z.norm() - 1.0).abs() > BRANCH_TOL {
        return Err(ChmError::Domain(format!("z is not unimodular at theta = {theta}: |z| = {}", z.norm())));
    }

    let (xi, yi, zi, ti) = (x.inv(), y.inv(), z.inv(), t.inv());
    let rows = [
        [ONE, ONE, ONE, ONE, ONE, ONE],
        [ONE, -ONE, xi, -y, -xi, y],
        [ONE, x, -ONE, t, -t, -x],
        [ONE, -yi, ti, -ONE, yi, -ti],
        [ONE, -x, -ti, y, ONE, zi],
        [ONE, yi, -xi, -t, z, ONE],
    ];
    let matrix = CMatrix::from_fn(6, 6, |j, k| rows[j][k]);
    Ok(HermitianMember { matrix, x, y, z, t, branch })
}

/// Interior sample points of the Hermitian θ-domain, alternating sign.
/// The domain endpoints are avoided: the radicand vanishes there and
/// rounding costs about half the digits.
pub fn hermitian_theta_samples(count: usize) -> Vec<f64> {
    let lo = hermitian_theta_min() + 0.02;
    let hi = PI;
    let half = count.div_ceil(2);
    let mut out = Vec::with_capacity(count);
    for k in 0..half {
        let frac = if half == 1 { 1.0 } else { k as f64 / (half - 1) as f64 };
        let theta = lo + (hi - lo) * frac;
        out.push(theta);
        if out.len() < count {
            out.push(-theta);
        }
    }
    out
}

/// Unimodular Haagerup parameters `q = e^{2πi(k+½)/count}` plus `q = 1`.
pub fn haagerup_q_samples(count: usize) -> Vec<C64> {
    let mut out = vec![ONE];
    out.extend((0..count.saturating_sub(1)).map(|k| cis(TAU * (k as f64 + 0.5) / (count - 1) as f64)));
    out
}
