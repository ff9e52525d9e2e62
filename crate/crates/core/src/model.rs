//! Truncated three-level Hamiltonians, their dark states and spectra.
//!
//! Units: ħ = 1, couplings are angular frequencies and time is measured in
//! inverse coupling units.
//!
//! The unprimed Hamiltonian couples both excited kets to the photon ket:
//!
//! ```text
//!       | 0     0     λ1 |
//! H  =  | 0     0    -λ2 |
//!       | λ1*  -λ2*   0  |
//! ```
//!
//! and the primed one replaces `-λ2` with `c λ3`, where the branch sign `c`
//! is -1 for α = 1 and +1 for α = 2.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statevec::{StateVector, Subspace};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Complex coupling strengths λ1, λ2, λ3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingSet {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub lambda3: Complex64,
}

impl CouplingSet {
    pub fn new(lambda1: Complex64, lambda2: Complex64, lambda3: Complex64) -> Self {
        CouplingSet { lambda1, lambda2, lambda3 }
    }

    pub fn real(l1: f64, l2: f64, l3: f64) -> Self {
        CouplingSet::new(l1.into(), l2.into(), l3.into())
    }

    pub fn zero() -> Self {
        CouplingSet::real(0.0, 0.0, 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        CouplingSet::new(self.lambda1 * s, self.lambda2 * s, self.lambda3 * s)
    }

    pub fn channels(&self) -> [Complex64; 3] {
        [self.lambda1, self.lambda2, self.lambda3]
    }

    pub fn from_channels(c: [Complex64; 3]) -> Self {
        CouplingSet::new(c[0], c[1], c[2])
    }

    pub fn is_finite(&self) -> bool {
        self.channels().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// The coupling that pairs with λ1 in the given subspace.
    fn partner(&self, primed: bool) -> Complex64 {
        if primed {
            self.lambda3
        } else {
            self.lambda2
        }
    }
}

/// One of the four dark branches `D1, D2, D1', D2'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BranchId {
    alpha: u8,
    primed: bool,
}

impl BranchId {
    pub const D1: BranchId = BranchId { alpha: 1, primed: false };
    pub const D2: BranchId = BranchId { alpha: 2, primed: false };
    pub const D1P: BranchId = BranchId { alpha: 1, primed: true };
    pub const D2P: BranchId = BranchId { alpha: 2, primed: true };

    /// Gate diagonal order.
    pub const ALL: [BranchId; 4] = [BranchId::D1, BranchId::D2, BranchId::D1P, BranchId::D2P];

    pub fn new(alpha: u8, primed: bool) -> Result<Self> {
        match alpha {
            1 | 2 => Ok(BranchId { alpha, primed }),
            _ => Err(Error::Usage(format!("branch index must be 1 or 2, got {alpha}"))),
        }
    }

    pub fn alpha(&self) -> u8 {
        self.alpha
    }

    pub fn primed(&self) -> bool {
        self.primed
    }

    /// `c_α`: -1 for α = 1, +1 for α = 2.
    pub fn sign(&self) -> f64 {
        if self.alpha == 1 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn subspace(&self) -> Subspace {
        if self.primed {
            Subspace::Primed
        } else {
            Subspace::Unprimed
        }
    }

    /// Same subspace, other α.
    pub fn partner(&self) -> BranchId {
        BranchId { alpha: 3 - self.alpha, primed: self.primed }
    }

    pub fn with_primed(self, primed: bool) -> BranchId {
        BranchId { alpha: self.alpha, primed }
    }

    /// Index into `BranchId::ALL`.
    pub fn index(&self) -> usize {
        (self.alpha as usize - 1) + if self.primed { 2 } else { 0 }
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}{}", self.alpha, if self.primed { "'" } else { "" })
    }
}

/// Dense 3×3 complex matrix in the fixed basis order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hamiltonian3 {
    pub m: [[Complex64; 3]; 3],
}

impl Hamiltonian3 {
    pub fn new(m: [[Complex64; 3]; 3]) -> Self {
        Hamiltonian3 { m }
    }

    pub fn zero() -> Self {
        Hamiltonian3 { m: [[ZERO; 3]; 3] }
    }

    pub fn from_real(m: [[f64; 3]; 3]) -> Self {
        Hamiltonian3 { m: m.map(|row| row.map(|x| Complex64::new(x, 0.0))) }
    }

    /// Largest deviation from Hermiticity, `max |H_ij - conj(H_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in i..3 {
                d = d.max((self.m[i][j] - self.m[j][i].conj()).norm());
            }
        }
        d
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, v: &[Complex64; 3]) -> [Complex64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Real part of `<ψ|H|ψ>`.
    pub fn expectation(&self, psi: &StateVector) -> f64 {
        let hv = self.apply(&psi.amps);
        psi.amps.iter().zip(hv.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// `H + e·I`.
    pub fn shifted(&self, e: f64) -> Self {
        let mut out = *self;
        for i in 0..3 {
            out.m[i][i] += e;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigensystem3 {
    /// Ascending.
    pub values: [f64; 3],
    /// `vectors[k]` belongs to `values[k]`.
    pub vectors: [[Complex64; 3]; 3],
}

impl Eigensystem3 {
    /// Largest `‖H v_k − E_k v_k‖` over the three pairs.
    pub fn max_residual(&self, h: &Hamiltonian3) -> f64 {
        (0..3)
            .map(|k| {
                let hv = h.apply(&self.vectors[k]);
                (0..3)
                    .map(|i| (hv[i] - self.vectors[k][i] * self.values[k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let g: Complex64 = (0..3).map(|i| self.vectors[a][i].conj() * self.vectors[b][i]).sum();
                let target = if a == b { ONE } else { ZERO };
                d = d.max((g - target).norm());
            }
        }
        d
    }
}

pub fn build_h(branch: BranchId, c: &CouplingSet) -> Hamiltonian3 {
    let l1 = c.lambda1;
    let l2 = if branch.primed { branch.sign() * c.lambda3 } else { -c.lambda2 };
    Hamiltonian3::new([
        [ZERO, ZERO, l1],
        [ZERO, ZERO, l2],
        [l1.conj(), l2.conj(), ZERO],
    ])
}

/// Normalised zero-energy eigenvector of `build_h(branch, c)`.
///
/// The photonic amplitude is exactly zero. The gauge makes the second
/// amplitude real and non-negative; when λ1 = 0 the first amplitude is real
/// with the sign of the real-coupling closed form (`+1` unprimed, `-c_α`
/// primed), so that the result is `(cos θ, sin θ, 0)` or
/// `(-c_α cos θ', sin θ', 0)` whenever the couplings are real and
/// non-negative.
pub fn dark_state(branch: BranchId, c: &CouplingSet) -> Result<StateVector> {
    let l1 = c.lambda1;
    let lb = c.partner(branch.primed);
    let g = (l1.norm_sqr() + lb.norm_sqr()).sqrt();
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::DegenerateKernel(branch));
    }
    // kernel direction (k * conj(lb), conj(l1), 0) with k = 1 unprimed, -c primed
    let k = if branch.primed { -branch.sign() } else { 1.0 };
    let amps = if l1.norm() > 0.0 {
        let gauge = l1 / l1.norm();
        [lb.conj() * gauge * (k / g), Complex64::new(l1.norm() / g, 0.0), ZERO]
    } else {
        [Complex64::new(k, 0.0), ZERO, ZERO]
    };
    Ok(StateVector::new(amps, branch.subspace()))
}

/// θ (unprimed) or θ' (primed) in [0, π/2].
pub fn mixing_angle(branch: BranchId, c: &CouplingSet) -> Result<f64> {
    let a = c.lambda1.norm();
    let b = c.partner(branch.primed).norm();
    if !(a + b > 0.0) || !(a + b).is_finite() {
        return Err(Error::DegenerateKernel(branch));
    }
    Ok(a.atan2(b))
}

/// Gap `g = sqrt(|λ1|² + |λ_partner|²)`; the spectrum of `build_h` is {-g, 0, g}.
pub fn bright_gap(branch: BranchId, c: &CouplingSet) -> f64 {
    (c.lambda1.norm_sqr() + c.partner(branch.primed).norm_sqr()).sqrt()
}

/// Relative Hermiticity tolerance accepted by [`eigensystem`].
const HERMITIAN_TOL: f64 = 1e-12;
/// Relative residual / orthonormality tolerance for the closed-form route.
const ACCEPT_TOL: f64 = 1e-12;

/// Full eigen-decomposition of a Hermitian 3×3 matrix.
///
/// Eigenvalues come from the trigonometric solution of the characteristic
/// cubic and eigenvectors from cross products of rows of `H - E I`. If the
/// result fails the residual check (near-degenerate spectrum) a cyclic
/// Jacobi sweep is used instead.
pub fn eigensystem(h: &Hamiltonian3) -> Result<Eigensystem3> {
    let scale = h.norm().max(1.0);
    let defect = h.hermitian_defect();
    if defect > HERMITIAN_TOL * scale || !defect.is_finite() {
        return Err(Error::NotHermitian(defect));
    }
    if let Some(es) = closed_form(h) {
        if es.max_residual(h) <= ACCEPT_TOL * scale && es.orthonormality_defect() <= ACCEPT_TOL {
            return Ok(es);
        }
    }
    let es = jacobi(h);
    let r = es.max_residual(h);
    if r > 1e-10 * scale {
        return Err(Error::Eigensolver(r));
    }
    Ok(es)
}

fn eigenvalues_trig(h: &Hamiltonian3) -> [f64; 3] {
    let m = &h.m;
    let a = [m[0][0].re, m[1][1].re, m[2][2].re];
    let q = (a[0] + a[1] + a[2]) / 3.0;
    let p1 = m[0][1].norm_sqr() + m[0][2].norm_sqr() + m[1][2].norm_sqr();
    let p2 = a.iter().map(|x| (x - q) * (x - q)).sum::<f64>() + 2.0 * p1;
    if p2 == 0.0 {
        return [q; 3];
    }
    let p = (p2 / 6.0).sqrt();
    // B = (H - qI)/p, r = det(B)/2
    let b = |i: usize, j: usize| -> Complex64 {
        let d = if i == j { q } else { 0.0 };
        (m[i][j] - d) / p
    };
    let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
        - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let r = (det.re / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let mid = 3.0 * q - hi - lo;
    [lo, mid, hi]
}

fn cross(a: &[Complex64; 3], b: &[Complex64; 3]) -> [Complex64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn vnorm(v: &[Complex64; 3]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn closed_form(h: &Hamiltonian3) -> Option<Eigensystem3> {
    let values = eigenvalues_trig(h);
    let scale = h.norm().max(f64::MIN_POSITIVE);
    let mut vectors = [[ZERO; 3]; 3];
    for (k, &e) in values.iter().enumerate() {
        let rows: Vec<[Complex64; 3]> = (0..3)
            .map(|i| {
                let mut r = h.m[i];
                r[i] -= e;
                r
            })
            .collect();
        // Any row of H - E I is orthogonal (bilinearly) to the cross product of two others.
        let best = [cross(&rows[0], &rows[1]), cross(&rows[0], &rows[2]), cross(&rows[1], &rows[2])]
            .into_iter()
            .max_by(|a, b| vnorm(a).total_cmp(&vnorm(b)))?;
        let n = vnorm(&best);
        if n <= 1e-8 * scale * scale {
            // repeated eigenvalue
            return None;
        }
        vectors[k] = best.map(|z| z / n);
    }
    Some(Eigensystem3 { values, vectors })
}

fn jacobi(h: &Hamiltonian3) -> Eigensystem3 {
    let mut a = h.m;
    let mut v = [[ZERO; 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = ONE;
    }
    let scale = h.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let off = a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr();
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq.norm() <= 1e-300 {
                continue;
            }
            let phase = apq / apq.norm();
            let app = a[p][p].re;
            let aqq = a[q][q].re;
            let tau = (aqq - app) / (2.0 * apq.norm());
            let t = if tau >= 0.0 {
                1.0 / (tau + (1.0 + tau * tau).sqrt())
            } else {
                -1.0 / (-tau + (1.0 + tau * tau).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            // U acts on the (p, q) plane: columns u_p = (c, -s e^{-iφ}), u_q = (s e^{iφ}, c)
            let mut u = [[ZERO; 3]; 3];
            for (i, row) in u.iter_mut().enumerate() {
                row[i] = ONE;
            }
            u[p][p] = c.into();
            u[q][q] = c.into();
            u[p][q] = phase * s;
            u[q][p] = -phase.conj() * s;
            a = mat_mul(&mat_adjoint(&u), &mat_mul(&a, &u));
            v = mat_mul(&v, &u);
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
    let values = order.map(|i| a[i][i].re);
    let vectors = order.map(|k| [v[0][k], v[1][k], v[2][k]]);
    Eigensystem3 { values, vectors }
}

type Mat3 = [[Complex64; 3]; 3];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_adjoint(a: &Mat3) -> Mat3 {
    let mut out = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// `‖H · d‖` for a state vector.
pub fn residual_norm(h: &Hamiltonian3, v: &StateVector) -> f64 {
    vnorm(&h.apply(&v.amps))
}
