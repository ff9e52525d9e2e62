//! Simulation and phase analysis of adiabatic dark-state conditional phase
//! gates.
//!
//! Each branch of the gate lives in a three-level truncated subspace with
//! one photonic ket. Driving the couplings through the two-stage protocol
//! keeps the state in the zero-energy dark manifold, so the dynamic phase
//! vanishes and the phase acquired is the Aharonov-Anandan geometric phase,
//! minus half the solid angle swept on the Bloch sphere.

pub mod bloch;
pub mod cli;
pub mod config;
pub mod error;
pub mod export;
pub mod gate;
pub mod model;
pub mod propagator;
pub mod pulses;
pub mod statevec;

pub use error::{Error, Result};
