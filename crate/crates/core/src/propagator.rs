//! Fixed-step propagation of `i dψ/dt = H(t) ψ` and phase bookkeeping.
//!
//! Sign conventions (ħ = 1): a stationary state of energy `E` evolves as
//! `e^{-iEt}`, the dynamic phase is `-∫⟨ψ|H|ψ⟩dt`, and the geometric
//! (Aharonov-Anandan) phase is `arg⟨ψ(0)|ψ(τ)⟩` minus the dynamic phase.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{bright_gap, build_h, dark_state, eigensystem, BranchId, CouplingSet, Hamiltonian3};
use crate::pulses::PulseSchedule;
use crate::statevec::{fidelity, inner, wrap_angle, StateVector, Subspace, MIN_PHASE_OVERLAP};

/// Upper bound on `h · g_max`.
pub const MAX_STEP_PHASE: f64 = 0.1;
pub const MIN_STEPS_PER_STAGE: usize = 100;
pub const DEFAULT_MIN_CYCLICITY: f64 = 0.99;

/// Anything that can hand the integrator a Hamiltonian at a given time.
///
/// The window is split into stages (see [`stage_times`]); within a stage
/// the Hamiltonian must be continuous, across stage boundaries it may jump.
///
/// [`stage_times`]: HamiltonianSource::stage_times
pub trait HamiltonianSource: Sync {
    fn basis(&self) -> Subspace;

    /// `[0, t_1, …, t_end]`, strictly increasing.
    fn stage_times(&self) -> Vec<f64>;

    fn hamiltonian(&self, stage: usize, t: f64) -> Result<Hamiltonian3>;

    /// Largest `|E|` of `H(t)`.
    fn spectral_radius(&self, stage: usize, t: f64) -> Result<f64> {
        let es = eigensystem(&self.hamiltonian(stage, t)?)?;
        Ok(es.values[0].abs().max(es.values[2].abs()))
    }

    /// Instantaneous dark state used for the leakage diagnostic, if any.
    fn reference_state(&self, _stage: usize, _t: f64) -> Option<StateVector> {
        None
    }

    /// Couplings recorded alongside each sample. Zero for sources that are
    /// not coupling schedules.
    fn couplings(&self, _t: f64) -> CouplingSet {
        CouplingSet::zero()
    }

    fn branch(&self) -> Option<BranchId> {
        None
    }
}

impl HamiltonianSource for PulseSchedule {
    fn basis(&self) -> Subspace {
        self.branch().subspace()
    }

    fn stage_times(&self) -> Vec<f64> {
        vec![0.0, self.stage_boundary(), self.duration()]
    }

    fn hamiltonian(&self, stage: usize, t: f64) -> Result<Hamiltonian3> {
        Ok(build_h(self.stage_branch(stage), &self.sample(t)?))
    }

    fn spectral_radius(&self, stage: usize, t: f64) -> Result<f64> {
        Ok(bright_gap(self.stage_branch(stage), &self.sample(t)?))
    }

    fn reference_state(&self, stage: usize, t: f64) -> Option<StateVector> {
        dark_state(self.stage_branch(stage), &self.sample(t).ok()?).ok()
    }

    fn couplings(&self, t: f64) -> CouplingSet {
        self.sample(t).unwrap_or_else(|_| CouplingSet::zero())
    }

    fn branch(&self) -> Option<BranchId> {
        Some(PulseSchedule::branch(self))
    }
}

/// A time-independent Hamiltonian applied for `duration`.
#[derive(Clone, Debug)]
pub struct ConstantHamiltonian {
    pub h: Hamiltonian3,
    pub duration: f64,
    pub basis: Subspace,
}

impl HamiltonianSource for ConstantHamiltonian {
    fn basis(&self) -> Subspace {
        self.basis
    }

    fn stage_times(&self) -> Vec<f64> {
        vec![0.0, self.duration]
    }

    fn hamiltonian(&self, _stage: usize, _t: f64) -> Result<Hamiltonian3> {
        Ok(self.h)
    }
}

/// `H(t) + E(t)·I` on top of another source.
pub struct EnergyShift<'a, S: ?Sized, F> {
    pub inner: &'a S,
    pub shift: F,
}

impl<S, F> HamiltonianSource for EnergyShift<'_, S, F>
where
    S: HamiltonianSource + ?Sized,
    F: Fn(f64) -> f64 + Sync,
{
    fn basis(&self) -> Subspace {
        self.inner.basis()
    }

    fn stage_times(&self) -> Vec<f64> {
        self.inner.stage_times()
    }

    fn hamiltonian(&self, stage: usize, t: f64) -> Result<Hamiltonian3> {
        Ok(self.inner.hamiltonian(stage, t)?.shifted((self.shift)(t)))
    }

    fn spectral_radius(&self, stage: usize, t: f64) -> Result<f64> {
        Ok(self.inner.spectral_radius(stage, t)? + (self.shift)(t).abs())
    }

    fn reference_state(&self, stage: usize, t: f64) -> Option<StateVector> {
        self.inner.reference_state(stage, t)
    }

    fn couplings(&self, t: f64) -> CouplingSet {
        self.inner.couplings(t)
    }

    fn branch(&self) -> Option<BranchId> {
        self.inner.branch()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IntegratorConfig {
    pub steps_per_stage: usize,
    pub renormalize_each_step: bool,
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { steps_per_stage: 20_000, renormalize_each_step: true, record_stride: 1 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_stage < MIN_STEPS_PER_STAGE {
            return Err(Error::Config(format!(
                "steps_per_stage must be at least {MIN_STEPS_PER_STAGE}, got {}",
                self.steps_per_stage
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks `h · g_max < 0.1` on every stage, scanning the RK4 evaluation
    /// points.
    pub fn check_step_size<S: HamiltonianSource + ?Sized>(&self, source: &S) -> Result<()> {
        self.validate()?;
        let n = self.steps_per_stage;
        for (stage, w) in source.stage_times().windows(2).enumerate() {
            let h = (w[1] - w[0]) / n as f64;
            let mut g_max: f64 = 0.0;
            for j in 0..=2 * n {
                let t = if j == 2 * n { w[1] } else { w[0] + 0.5 * h * j as f64 };
                g_max = g_max.max(source.spectral_radius(stage, t)?);
            }
            if !(h * g_max < MAX_STEP_PHASE) {
                return Err(Error::Config(format!(
                    "step size too large on stage {stage}: h·g_max = {:.4} ≥ {MAX_STEP_PHASE} \
                     (h = {h:.4e}, g_max = {g_max:.4e}); increase steps_per_stage",
                    h * g_max
                )));
            }
        }
        Ok(())
    }
}

/// Time-sampled output of [`evolve`].
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub couplings: Vec<CouplingSet>,
    /// `⟨ψ|H|ψ⟩`, with the stage-0 Hamiltonian at a stage boundary.
    pub energy_expect: Vec<f64>,
    /// Running `-∫⟨H⟩dt` (trapezoid per integration step).
    pub dyn_phase_acc: Vec<f64>,
    /// `1 - |⟨D(t)|ψ(t)⟩|²`; zero when the source has no reference dark state.
    pub leakage: Vec<f64>,
    pub branch: Option<BranchId>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_leakage(&self) -> f64 {
        self.leakage.last().copied().unwrap_or(0.0)
    }

    /// Largest photonic population along the run.
    pub fn max_photon_population(&self) -> f64 {
        self.states.iter().map(|s| s.photon_population()).fold(0.0, f64::max)
    }

    pub fn final_state(&self) -> Option<&StateVector> {
        self.states.last()
    }
}

fn deriv(h: &Hamiltonian3, psi: &[Complex64; 3]) -> [Complex64; 3] {
    // -i H ψ
    h.apply(psi).map(|z| Complex64::new(z.im, -z.re))
}

fn axpy(psi: &[Complex64; 3], a: f64, k: &[Complex64; 3]) -> [Complex64; 3] {
    [psi[0] + k[0] * a, psi[1] + k[1] * a, psi[2] + k[2] * a]
}

/// Integrates the Schrödinger equation with classical fourth-order
/// Runge-Kutta, `steps_per_stage` equal steps per stage.
pub fn evolve<S: HamiltonianSource + ?Sized>(
    source: &S,
    psi0: &StateVector,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryRecord> {
    cfg.check_step_size(source)?;
    if psi0.basis != source.basis() {
        return Err(Error::Usage(format!(
            "initial state is in the {} subspace but the Hamiltonian acts on the {} subspace",
            psi0.basis,
            source.basis()
        )));
    }
    if !psi0.is_finite() || (psi0.norm_sqr() - 1.0).abs() > 1e-9 {
        return Err(Error::Usage(format!("initial state must be normalized (norm² = {})", psi0.norm_sqr())));
    }

    let stages = source.stage_times();
    let n = cfg.steps_per_stage;
    let total_steps = n * (stages.len() - 1);
    let capacity = total_steps / cfg.record_stride + 2;
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        couplings: Vec::with_capacity(capacity),
        energy_expect: Vec::with_capacity(capacity),
        dyn_phase_acc: Vec::with_capacity(capacity),
        leakage: Vec::with_capacity(capacity),
        branch: source.branch(),
    };

    let basis = psi0.basis;
    let mut psi = psi0.amps;
    let mut dyn_phase = 0.0;
    let push = |rec: &mut TrajectoryRecord, stage: usize, t: f64, psi: &[Complex64; 3], e: f64, dyn_phase: f64| {
        let sv = StateVector::new(*psi, basis);
        let leak = source
            .reference_state(stage, t)
            .and_then(|d| fidelity(&d, &sv).ok())
            .map(|f| (1.0 - f).max(0.0))
            .unwrap_or(0.0);
        rec.times.push(t);
        rec.states.push(sv);
        rec.couplings.push(source.couplings(t));
        rec.energy_expect.push(e);
        rec.dyn_phase_acc.push(dyn_phase);
        rec.leakage.push(leak);
    };

    let e0 = source.hamiltonian(0, 0.0)?.expectation(psi0);
    push(&mut rec, 0, 0.0, &psi, e0, 0.0);

    let mut step = 0usize;
    for (stage, w) in stages.windows(2).enumerate() {
        let (t0, t1) = (w[0], w[1]);
        let h = (t1 - t0) / n as f64;
        let mut h_start = source.hamiltonian(stage, t0)?;
        let mut e_start = h_start.expectation(&StateVector::new(psi, basis));
        for j in 0..n {
            let t = t0 + h * j as f64;
            let t_end = if j + 1 == n { t1 } else { t0 + h * (j + 1) as f64 };
            let h_mid = source.hamiltonian(stage, t + 0.5 * h)?;
            let h_end = source.hamiltonian(stage, t_end)?;

            let k1 = deriv(&h_start, &psi);
            let k2 = deriv(&h_mid, &axpy(&psi, 0.5 * h, &k1));
            let k3 = deriv(&h_mid, &axpy(&psi, 0.5 * h, &k2));
            let k4 = deriv(&h_end, &axpy(&psi, h, &k3));
            for i in 0..3 {
                psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
            if cfg.renormalize_each_step {
                let nrm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                psi.iter_mut().for_each(|z| *z /= nrm);
            }

            let e_end = h_end.expectation(&StateVector::new(psi, basis));
            dyn_phase -= 0.5 * h * (e_start + e_end);
            e_start = e_end;
            h_start = h_end;

            step += 1;
            if step % cfg.record_stride == 0 || step == total_steps {
                push(&mut rec, stage, t_end, &psi, e_end, dyn_phase);
            }
        }
    }
    Ok(rec)
}

/// `-∫⟨ψ|H|ψ⟩dt` over the whole run, unwrapped.
pub fn dynamic_phase(traj: &TrajectoryRecord) -> Result<f64> {
    traj.dyn_phase_acc
        .last()
        .copied()
        .ok_or_else(|| Error::Usage("empty trajectory".into()))
}

/// `(arg⟨ψ(0)|ψ(end)⟩, |⟨ψ(0)|ψ(end)⟩|²)`.
pub fn total_phase(traj: &TrajectoryRecord) -> Result<(f64, f64)> {
    let (first, last) = match (traj.states.first(), traj.states.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Usage("empty trajectory".into())),
    };
    let z = inner(first, last)?;
    if z.norm() <= MIN_PHASE_OVERLAP {
        return Err(Error::UndefinedPhase(z.norm()));
    }
    Ok((wrap_angle(z.arg()), z.norm_sqr().min(1.0)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseReport {
    pub total_phase: f64,
    /// Unwrapped.
    pub dynamic_phase: f64,
    pub geometric_phase: f64,
    pub cyclicity_fidelity: f64,
}

/// Aharonov-Anandan split of the cyclic phase: `wrap(total - dynamic)`.
pub fn aa_phase(traj: &TrajectoryRecord, min_cyclicity: f64) -> Result<PhaseReport> {
    let (total, cyc) = total_phase(traj)?;
    if cyc < min_cyclicity {
        return Err(Error::NonCyclic { fidelity: cyc, threshold: min_cyclicity });
    }
    let dynamic = dynamic_phase(traj)?;
    Ok(PhaseReport {
        total_phase: total,
        dynamic_phase: dynamic,
        geometric_phase: wrap_angle(total - dynamic),
        cyclicity_fidelity: cyc,
    })
}
