//! Three-component complex state vectors over one truncated subspace.
//!
//! Basis order is fixed for every vector in the crate:
//!
//! | index | unprimed subspace | primed subspace  |
//! |-------|-------------------|------------------|
//! | 0     | `|e1 g2 0>`       | `|e1 g2' 0>`     |
//! | 1     | `|g1 e2 0>`       | `|g1 e2' 0>`     |
//! | 2     | `|g1 g2 1>`       | `|g1 g2' 1>`     |
//!
//! Index 2 is always the photonic ket.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexAmplitude = Complex64;

/// Overlaps smaller than this have no meaningful phase.
pub const MIN_PHASE_OVERLAP: f64 = 1e-6;

/// Index of the photonic basis ket.
pub const PHOTON: usize = 2;

/// Which truncated subspace the amplitudes refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subspace {
    Unprimed,
    Primed,
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subspace::Unprimed => write!(f, "unprimed"),
            Subspace::Primed => write!(f, "primed"),
        }
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    // rem_euclid maps -π to π already; guard against y == -π from rounding
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector {
    pub amps: [ComplexAmplitude; 3],
    pub basis: Subspace,
}

impl StateVector {
    pub fn new(amps: [ComplexAmplitude; 3], basis: Subspace) -> Self {
        StateVector { amps, basis }
    }

    pub fn from_real(a: [f64; 3], basis: Subspace) -> Self {
        StateVector::new(a.map(|x| Complex64::new(x, 0.0)), basis)
    }

    /// Basis ket `|index>`.
    pub fn basis_ket(index: usize, basis: Subspace) -> Self {
        let mut amps = [Complex64::new(0.0, 0.0); 3];
        amps[index] = Complex64::new(1.0, 0.0);
        StateVector::new(amps, basis)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, z: Complex64) -> Self {
        StateVector::new(self.amps.map(|a| a * z), self.basis)
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Population of the photonic ket.
    pub fn photon_population(&self) -> f64 {
        self.amps[PHOTON].norm_sqr()
    }
}

fn check_basis(a: &StateVector, b: &StateVector) -> Result<()> {
    if a.basis != b.basis {
        return Err(Error::Usage(format!(
            "state vectors live in different subspaces ({} vs {})",
            a.basis, b.basis
        )));
    }
    Ok(())
}

/// `<a|b>`, conjugating `a`.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<ComplexAmplitude> {
    check_basis(a, b)?;
    Ok(a.amps
        .iter()
        .zip(b.amps.iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `arg <a|b>` in (-π, π].
pub fn overlap_phase(a: &StateVector, b: &StateVector) -> Result<f64> {
    let z = inner(a, b)?;
    if z.norm() <= MIN_PHASE_OVERLAP {
        return Err(Error::UndefinedPhase(z.norm()));
    }
    Ok(wrap_angle(z.arg()))
}

/// `|<a|b>|²`, clamped to [0, 1].
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(inner(a, b)?.norm_sqr().clamp(0.0, 1.0))
}

pub fn normalize(v: &StateVector) -> Result<StateVector> {
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v.scale(Complex64::new(1.0 / n, 0.0)))
}
