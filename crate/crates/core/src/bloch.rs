//! Bloch-sphere projection of the two-level dark manifold and oriented
//! solid angles of closed paths.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::model::BranchId;
use crate::propagator::TrajectoryRecord;
use crate::statevec::{StateVector, PHOTON};

/// Chord/arc gap below which a path counts as closed.
pub const CLOSURE_TOL: f64 = 1e-3;

/// Longest path edge used when fanning triangles.
const MAX_EDGE: f64 = PI / 8.0;

/// Consecutive samples closer than this to antipodal are rejected.
const ANTIPODAL_GUARD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl BlochVector {
    pub const NORTH: BlochVector = BlochVector { nx: 0.0, ny: 0.0, nz: 1.0 };

    pub fn new(nx: f64, ny: f64, nz: f64) -> Self {
        BlochVector { nx, ny, nz }
    }

    pub fn dot(&self, o: &BlochVector) -> f64 {
        self.nx * o.nx + self.ny * o.ny + self.nz * o.nz
    }

    pub fn cross(&self, o: &BlochVector) -> BlochVector {
        BlochVector::new(
            self.ny * o.nz - self.nz * o.ny,
            self.nz * o.nx - self.nx * o.nz,
            self.nx * o.ny - self.ny * o.nx,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Option<BlochVector> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self * (1.0 / n))
    }

    /// Great-circle angle to `o`, robust for small and near-π separations.
    pub fn angle_to(&self, o: &BlochVector) -> f64 {
        self.cross(o).norm().atan2(self.dot(o))
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.nx + o.nx, self.ny + o.ny, self.nz + o.nz)
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.nx - o.nx, self.ny - o.ny, self.nz - o.nz)
    }
}

impl Mul<f64> for BlochVector {
    type Output = BlochVector;
    fn mul(self, s: f64) -> BlochVector {
        BlochVector::new(self.nx * s, self.ny * s, self.nz * s)
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;
    fn neg(self) -> BlochVector {
        self * -1.0
    }
}

/// `n = ⟨ψ|σ|ψ⟩` of the renormalised restriction of `psi` to kets 0 and 1.
///
/// Fails if more than `tol` of the population sits in the photonic ket.
pub fn project(psi: &StateVector, tol: f64) -> Result<BlochVector> {
    let total = psi.norm_sqr();
    let photon = psi.amps[PHOTON].norm_sqr();
    let two = total - photon;
    if !(two > 0.0) || photon > tol * total {
        return Err(Error::Projection(if total > 0.0 { photon / total } else { 1.0 }));
    }
    let (a0, a1) = (psi.amps[0], psi.amps[1]);
    let cross = a0.conj() * a1;
    Ok(BlochVector::new(
        2.0 * cross.re / two,
        2.0 * cross.im / two,
        (a0.norm_sqr() - a1.norm_sqr()) / two,
    ))
}

/// Closed-form Bloch vector of the dark state at mixing angle `theta`:
/// `(sin 2θ, 0, cos 2θ)` unprimed, `(-c_α sin 2θ', 0, cos 2θ')` primed.
pub fn dark_point(branch: BranchId, theta: f64) -> BlochVector {
    let k = if branch.primed() { -branch.sign() } else { 1.0 };
    let (s, c) = (2.0 * theta).sin_cos();
    BlochVector::new(k * s, 0.0, c)
}

/// Time-ordered samples on the sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochPath {
    /// Sample parameter (time, or mixing angle for closed-form paths).
    pub times: Vec<f64>,
    pub samples: Vec<BlochVector>,
    /// Great-circle distance between first and last sample.
    pub closure_gap: f64,
}

impl BlochPath {
    pub fn new(times: Vec<f64>, samples: Vec<BlochVector>) -> Result<Self> {
        if times.len() != samples.len() {
            return Err(Error::Usage(format!(
                "{} times for {} Bloch samples",
                times.len(),
                samples.len()
            )));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if w[0].angle_to(&w[1]) > PI - ANTIPODAL_GUARD {
                return Err(Error::AntipodalStep(i, i + 1));
            }
        }
        let closure_gap = match (samples.first(), samples.last()) {
            (Some(a), Some(b)) => a.angle_to(b),
            _ => 0.0,
        };
        Ok(BlochPath { times, samples, closure_gap })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn reversed(&self) -> BlochPath {
        let end = self.times.last().copied().unwrap_or(0.0);
        let start = self.times.first().copied().unwrap_or(0.0);
        BlochPath {
            times: self.times.iter().rev().map(|t| start + end - t).collect(),
            samples: self.samples.iter().rev().copied().collect(),
            closure_gap: self.closure_gap,
        }
    }

    /// `self` followed by `other`, dropping a duplicated joint sample.
    pub fn concat(&self, other: &BlochPath) -> Result<BlochPath> {
        let mut times = self.times.clone();
        let mut samples = self.samples.clone();
        let mut skip = 0;
        if let (Some(a), Some(b)) = (samples.last(), other.samples.first()) {
            if a.angle_to(b) < 1e-15 {
                skip = 1;
            }
        }
        times.extend(other.times.iter().skip(skip));
        samples.extend(other.samples.iter().skip(skip));
        BlochPath::new(times, samples)
    }

    /// Projects every recorded state.
    pub fn from_trajectory(traj: &TrajectoryRecord, tol: f64) -> Result<BlochPath> {
        let samples = traj.states.iter().map(|s| project(s, tol)).collect::<Result<Vec<_>>>()?;
        BlochPath::new(traj.times.clone(), samples)
    }

    /// Largest angular distance between matching samples of two paths.
    pub fn max_deviation(&self, other: &BlochPath) -> f64 {
        self.samples
            .iter()
            .zip(other.samples.iter())
            .map(|(a, b)| a.angle_to(b))
            .fold(0.0, f64::max)
    }
}

/// Closed-form dark-state path for a list of mixing angles.
pub fn dark_path(branch: BranchId, theta_samples: &[f64]) -> Result<BlochPath> {
    if let Some(bad) = theta_samples.iter().find(|t| !(0.0..=PI / 2.0).contains(*t)) {
        return Err(Error::Usage(format!("mixing angle {bad} outside [0, π/2]")));
    }
    let samples = theta_samples.iter().map(|&t| dark_point(branch, t)).collect();
    BlochPath::new(theta_samples.to_vec(), samples)
}

/// Oriented area (steradians) enclosed by a closed path, counter-clockwise
/// seen from outside counted positive.
pub fn solid_angle(path: &BlochPath) -> Result<f64> {
    solid_angle_with_tolerance(path, CLOSURE_TOL)
}

/// [`solid_angle`] with a caller-chosen closure tolerance. The remaining gap
/// is closed by a geodesic segment.
pub fn solid_angle_with_tolerance(path: &BlochPath, closure_tol: f64) -> Result<f64> {
    if path.len() < 2 {
        return Ok(0.0);
    }
    if path.closure_gap > closure_tol {
        return Err(Error::OpenPath { gap: path.closure_gap, tol: closure_tol });
    }
    let pts: Vec<BlochVector> = path
        .samples
        .iter()
        .map(|p| p.normalized().ok_or_else(|| Error::Usage("zero Bloch vector".into())))
        .collect::<Result<_>>()?;
    let ring = densify(&pts);
    if ring.iter().all(|p| p.angle_to(&ring[0]) < 1e-15) {
        return Ok(0.0);
    }
    let apex = fan_apex(&ring);
    let n = ring.len();
    Ok((0..n).map(|i| triangle_excess(&apex, &ring[i], &ring[(i + 1) % n])).sum())
}

/// Splits every edge (including the closing one) into pieces no longer
/// than `MAX_EDGE`. Returns the ring without a repeated endpoint.
fn densify(pts: &[BlochVector]) -> Vec<BlochVector> {
    let mut out = Vec::with_capacity(pts.len());
    let n = pts.len();
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        out.push(a);
        let ang = a.angle_to(&b);
        let pieces = (ang / MAX_EDGE).ceil() as usize;
        for k in 1..pieces {
            out.push(slerp(&a, &b, ang, k as f64 / pieces as f64));
        }
    }
    out
}

fn slerp(a: &BlochVector, b: &BlochVector, ang: f64, f: f64) -> BlochVector {
    let s = ang.sin();
    let p = *a * (((1.0 - f) * ang).sin() / s) + *b * ((f * ang).sin() / s);
    p.normalized().unwrap_or(*a)
}

/// Fan apex: a direction whose antipode stays as far from the path as
/// possible. Candidates do not depend on traversal direction, so reversing
/// a path reverses the sign of its area exactly.
fn fan_apex(ring: &[BlochVector]) -> BlochVector {
    let sum = ring.iter().fold(BlochVector::new(0.0, 0.0, 0.0), |acc, p| acc + *p);
    let area = (0..ring.len()).fold(BlochVector::new(0.0, 0.0, 0.0), |acc, i| {
        acc + ring[i].cross(&ring[(i + 1) % ring.len()])
    });
    let mut candidates = Vec::with_capacity(10);
    if sum.norm() > 1e-9 * ring.len() as f64 {
        candidates.push(sum.normalized().unwrap());
    }
    if let Some(u) = area.normalized() {
        candidates.push(canonical_sign(u));
        candidates.push(-canonical_sign(u));
    }
    for axis in [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)] {
        let a = BlochVector::new(axis.0, axis.1, axis.2);
        candidates.push(a);
        candidates.push(-a);
    }
    let score = |a: &BlochVector| ring.iter().map(|p| 1.0 + a.dot(p)).fold(f64::INFINITY, f64::min);
    let mut best = candidates[0];
    let mut best_score = score(&best);
    for c in &candidates[1..] {
        let s = score(c);
        // prefer earlier candidates unless a later one is clearly safer
        if s > best_score + 1e-9 {
            best = *c;
            best_score = s;
        }
    }
    best
}

fn canonical_sign(u: BlochVector) -> BlochVector {
    let lead = [u.nx, u.ny, u.nz].into_iter().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
    if lead < 0.0 {
        -u
    } else {
        u
    }
}

/// Signed excess of the spherical triangle `(a, b, c)`.
fn triangle_excess(a: &BlochVector, b: &BlochVector, c: &BlochVector) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    use crate::statevec::Subspace;

    fn arc(a: BlochVector, b: BlochVector, n: usize) -> Vec<BlochVector> {
        let ang = a.angle_to(&b);
        (0..n).map(|k| slerp(&a, &b, ang, k as f64 / n as f64)).collect()
    }

    fn path(samples: Vec<BlochVector>) -> BlochPath {
        let times = (0..samples.len()).map(|i| i as f64).collect();
        BlochPath::new(times, samples).unwrap()
    }

    fn great_circle_xz(n: usize) -> BlochPath {
        // N → +x → S → -x → N
        let mut s: Vec<BlochVector> = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                BlochVector::new(a.sin(), 0.0, a.cos())
            })
            .collect();
        s.push(BlochVector::NORTH);
        path(s)
    }

    #[test]
    fn project_examples() {
        let n = project(&StateVector::basis_ket(0, Subspace::Primed), 1e-9).unwrap();
        assert_eq!(n, BlochVector::NORTH);

        let q = PI / 4.0;
        // |D1'> at θ' = π/4 with c1 = -1: (cos θ', sin θ', 0)
        let d1 = StateVector::from_real([q.cos(), q.sin(), 0.0], Subspace::Primed);
        let n = project(&d1, 1e-9).unwrap();
        assert_abs_diff_eq!(n.nx, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(n.nz, 0.0, epsilon = 1e-15);
        let d2 = StateVector::from_real([-q.cos(), q.sin(), 0.0], Subspace::Primed);
        let n = project(&d2, 1e-9).unwrap();
        assert_abs_diff_eq!(n.nx, -1.0, epsilon = 1e-15);

        let y = StateVector::new(
            [Complex64::new(0.5f64.sqrt(), 0.0), Complex64::new(0.0, 0.5f64.sqrt()), Complex64::new(0.0, 0.0)],
            Subspace::Unprimed,
        );
        assert_abs_diff_eq!(project(&y, 1e-9).unwrap().ny, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn project_rejects_photonic_population() {
        let s = StateVector::from_real([0.8, 0.0, 0.6], Subspace::Primed);
        assert!(matches!(project(&s, 0.1), Err(Error::Projection(_))));
        assert!(project(&s, 0.5).is_ok());
    }

    #[test]
    fn dark_path_examples() {
        let thetas: Vec<f64> = (0..=8).map(|k| PI / 2.0 * k as f64 / 8.0).collect();
        let p = dark_path(BranchId::D1P, &thetas).unwrap();
        assert_eq!(p.samples[0], BlochVector::NORTH);
        assert_abs_diff_eq!(p.samples[4].nx, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.samples[8].nz, -1.0, epsilon = 1e-15);
        assert!(p.samples.iter().all(|s| s.nx >= 0.0 && s.ny == 0.0));

        let back: Vec<f64> = thetas.iter().rev().copied().collect();
        let q = dark_path(BranchId::D2P, &back).unwrap();
        assert_abs_diff_eq!(q.samples[4].nx, -1.0, epsilon = 1e-15);
        assert_eq!(*q.samples.last().unwrap(), BlochVector::NORTH);

        let still = dark_path(BranchId::D1P, &[0.0; 5]).unwrap();
        assert!(still.samples.iter().all(|s| *s == BlochVector::NORTH));
        assert_eq!(solid_angle(&still).unwrap(), 0.0);

        assert!(dark_path(BranchId::D1, &[2.0]).is_err());
    }

    #[test]
    fn great_circle_encloses_a_hemisphere() {
        let s = solid_angle(&great_circle_xz(64)).unwrap();
        assert_abs_diff_eq!(s.abs(), 2.0 * PI, epsilon = 1e-12);

        let thetas: Vec<f64> = (0..=50).map(|k| PI / 2.0 * k as f64 / 50.0).collect();
        let back: Vec<f64> = thetas.iter().rev().copied().collect();
        let a = dark_path(BranchId::D1P, &thetas).unwrap();
        let b = dark_path(BranchId::D2P, &back).unwrap();
        let loop1 = a.concat(&b).unwrap();
        let loop2 = dark_path(BranchId::D2P, &thetas)
            .unwrap()
            .concat(&dark_path(BranchId::D1P, &back).unwrap())
            .unwrap();
        let s1 = solid_angle(&loop1).unwrap();
        let s2 = solid_angle(&loop2).unwrap();
        assert_abs_diff_eq!(s1, 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(s2, -2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn octant_loop_is_an_eighth_of_the_sphere() {
        let x = BlochVector::new(1.0, 0.0, 0.0);
        let y = BlochVector::new(0.0, 1.0, 0.0);
        let z = BlochVector::NORTH;
        let mut s = arc(z, x, 10);
        s.extend(arc(x, y, 10));
        s.extend(arc(y, z, 10));
        s.push(z);
        assert_abs_diff_eq!(solid_angle(&path(s.clone())).unwrap(), PI / 2.0, epsilon = 1e-12);
        // three corners only; edges are geodesics anyway
        assert_abs_diff_eq!(solid_angle(&path(vec![z, x, y, z])).unwrap(), PI / 2.0, epsilon = 1e-12);
        s.reverse();
        assert_abs_diff_eq!(solid_angle(&path(s)).unwrap(), -PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn retraced_arc_has_zero_area() {
        let thetas: Vec<f64> = (0..=40).map(|k| PI / 8.0 * k as f64 / 40.0).collect();
        let out = dark_path(BranchId::D1, &thetas).unwrap();
        let back = out.reversed();
        let p = out.concat(&back).unwrap();
        assert!(solid_angle(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn spherical_cap_area() {
        // circle of colatitude χ, counter-clockwise about +z
        let chi: f64 = 0.7;
        let mut s: Vec<BlochVector> = (0..400)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / 400.0;
                BlochVector::new(chi.sin() * phi.cos(), chi.sin() * phi.sin(), chi.cos())
            })
            .collect();
        s.push(s[0]);
        let area = solid_angle(&path(s)).unwrap();
        // geodesic polygon inscribed in the cap; converges as O(1/n²)
        assert_abs_diff_eq!(area, 2.0 * PI * (1.0 - chi.cos()), epsilon = 1e-4);
    }

    #[test]
    fn open_paths_are_rejected() {
        let p = path(vec![BlochVector::NORTH, BlochVector::new(1.0, 0.0, 0.0)]);
        assert!(matches!(solid_angle(&p), Err(Error::OpenPath { .. })));
        assert!(solid_angle_with_tolerance(&p, 2.0).is_ok());
    }

    #[test]
    fn antipodal_steps_are_rejected() {
        let r = BlochPath::new(vec![0.0, 1.0], vec![BlochVector::NORTH, -BlochVector::NORTH]);
        assert!(matches!(r, Err(Error::AntipodalStep(0, 1))));
    }

    #[test]
    fn degenerate_paths_have_zero_area() {
        assert_eq!(solid_angle(&path(vec![])).unwrap(), 0.0);
        assert_eq!(solid_angle(&path(vec![BlochVector::NORTH])).unwrap(), 0.0);
        assert_eq!(solid_angle(&path(vec![BlochVector::NORTH; 4])).unwrap(), 0.0);
    }

    fn smooth_loop(coef: [f64; 6], n: usize) -> BlochPath {
        // closed smooth curve: random Fourier perturbation of a tilted circle
        let mut s: Vec<BlochVector> = (0..n)
            .map(|k| {
                let u = 2.0 * PI * k as f64 / n as f64;
                let pol = 0.9 + 0.4 * coef[0] * u.sin() + 0.3 * coef[1] * (2.0 * u).cos();
                let az = u + 0.5 * coef[2] * u.sin() + 0.2 * coef[3] * (3.0 * u).sin();
                let v = BlochVector::new(pol.sin() * az.cos(), pol.sin() * az.sin(), pol.cos());
                // tilt about x
                let t = coef[4];
                BlochVector::new(v.nx, v.ny * t.cos() - v.nz * t.sin(), v.ny * t.sin() + v.nz * t.cos())
            })
            .collect();
        s.push(s[0]);
        path(s)
    }

    proptest! {
        #[test]
        fn reversal_flips_sign(coef in prop::array::uniform6(-1.0f64..1.0)) {
            let p = smooth_loop(coef, 200);
            let a = solid_angle(&p).unwrap();
            let b = solid_angle(&p.reversed()).unwrap();
            prop_assert!((a + b).abs() < 1e-9);
        }

        #[test]
        fn retrace_cancels(coef in prop::array::uniform6(-1.0f64..1.0), cut in 10usize..190) {
            let p = smooth_loop(coef, 200);
            let open = path(p.samples[..cut].to_vec());
            let closed = open.concat(&open.reversed()).unwrap();
            prop_assert!(solid_angle(&closed).unwrap().abs() < 1e-9);
        }

        #[test]
        fn densification_is_stable(coef in prop::array::uniform6(-1.0f64..1.0)) {
            let a = solid_angle(&smooth_loop(coef, 10000)).unwrap();
            let b = solid_angle(&smooth_loop(coef, 20000)).unwrap();
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
    }
}
