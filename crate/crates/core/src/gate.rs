//! Four-branch gate runs, the branch-phase diagonal, and noise sweeps.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bloch::{solid_angle_with_tolerance, BlochPath};
use crate::error::{Error, Result};
use crate::model::{bright_gap, BranchId};
use crate::propagator::{
    aa_phase, dynamic_phase, evolve, total_phase, HamiltonianSource, IntegratorConfig, PhaseReport,
    TrajectoryRecord,
};
use crate::pulses::{default_gate_protocol, perturb, NoiseSpec, ProtocolSpec, PulseSchedule};
use crate::statevec::wrap_angle;

/// Cyclicity demanded of every branch in a gate run.
pub const GATE_MIN_CYCLICITY: f64 = 0.999;

/// Photonic population tolerated when projecting simulated states.
pub const SIMULATED_PROJECTION_TOL: f64 = 1e-2;

/// Ideal branch phases in `BranchId::ALL` order.
pub const TARGET_PHASES: [f64; 4] = [0.0, 0.0, PI, PI];

/// Bloch-sphere gap allowed for a state whose return fidelity is
/// `min_cyclicity`: fidelity `F` between pure qubit states corresponds to an
/// angle `2 acos(√F)` between their Bloch vectors.
pub fn closure_tolerance(min_cyclicity: f64) -> f64 {
    2.0 * min_cyclicity.clamp(0.0, 1.0).sqrt().acos() + 1e-9
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchPhaseReport {
    pub branch: BranchId,
    pub phases: PhaseReport,
    /// Solid angle of the simulated Bloch path, closed by a geodesic.
    pub solid_angle: f64,
    pub leakage_final: f64,
    pub closure_gap: f64,
    /// Largest photonic population seen along the run.
    pub photon_max: f64,
}

/// Everything produced for one branch.
#[derive(Clone, Debug)]
pub struct BranchRun {
    pub report: BranchPhaseReport,
    pub trajectory: TrajectoryRecord,
    pub path: BlochPath,
}

/// Evolves `sched` from its `t = 0` dark state and analyses the result.
pub fn run_branch(sched: &PulseSchedule, cfg: &IntegratorConfig, min_cyclicity: f64) -> Result<BranchRun> {
    let branch = sched.branch();
    let wrap = |e: Error| Error::GateRun { branch, source: Box::new(e) };
    let psi0 = sched
        .reference_state(0, 0.0)
        .ok_or_else(|| wrap(Error::DegenerateKernel(branch)))?;
    let trajectory = evolve(sched, &psi0, cfg).map_err(wrap)?;
    let phases = aa_phase(&trajectory, min_cyclicity).map_err(wrap)?;
    let path = BlochPath::from_trajectory(&trajectory, SIMULATED_PROJECTION_TOL).map_err(wrap)?;
    let solid_angle = solid_angle_with_tolerance(&path, closure_tolerance(min_cyclicity)).map_err(wrap)?;
    let report = BranchPhaseReport {
        branch,
        phases,
        solid_angle,
        leakage_final: trajectory.final_leakage().clamp(0.0, 1.0),
        closure_gap: path.closure_gap,
        photon_max: trajectory.max_photon_population(),
    };
    Ok(BranchRun { report, trajectory, path })
}

/// Runs all four branches (in parallel) with full outputs.
pub fn run_gate_detailed(spec: &ProtocolSpec, cfg: &IntegratorConfig) -> Result<Vec<BranchRun>> {
    spec.validate()?;
    cfg.validate()?;
    BranchId::ALL
        .par_iter()
        .map(|&b| run_branch(&default_gate_protocol(spec, b)?, cfg, GATE_MIN_CYCLICITY))
        .collect()
}

/// Branch reports in `(D1, D2, D1', D2')` order.
pub fn run_gate(spec: &ProtocolSpec, cfg: &IntegratorConfig) -> Result<[BranchPhaseReport; 4]> {
    let runs = run_gate_detailed(spec, cfg)?;
    Ok(std::array::from_fn(|i| runs[i].report))
}

/// Diagonal gate in `(D1, D2, D1', D2')` order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateMatrix {
    pub diag: [Complex64; 4],
}

impl GateMatrix {
    pub fn from_phases(phases: [f64; 4]) -> Self {
        GateMatrix { diag: phases.map(|p| Complex64::from_polar(1.0, p)) }
    }

    /// `diag(1, 1, -1, -1)`.
    pub fn ideal() -> Self {
        GateMatrix::from_phases(TARGET_PHASES)
    }

    pub fn identity() -> Self {
        GateMatrix::from_phases([0.0; 4])
    }

    pub fn phases(&self) -> [f64; 4] {
        self.diag.map(|z| wrap_angle(z.arg()))
    }
}

/// Collects `e^{i·total_phase}` per branch.
pub fn assemble_gate(reports: &[BranchPhaseReport]) -> Result<GateMatrix> {
    let mut diag: [Option<Complex64>; 4] = [None; 4];
    for r in reports {
        let slot = &mut diag[r.branch.index()];
        if slot.is_some() {
            return Err(Error::Assembly(format!("branch {} reported twice", r.branch)));
        }
        *slot = Some(Complex64::from_polar(1.0, r.phases.total_phase));
    }
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (i, d) in diag.iter().enumerate() {
        out[i] = d.ok_or_else(|| Error::Assembly(format!("branch {} missing", BranchId::ALL[i])))?;
    }
    Ok(GateMatrix { diag: out })
}

/// `|Σ conj(target_k) g_k|² / 16`.
pub fn gate_fidelity(g: &GateMatrix, target: &GateMatrix) -> f64 {
    let s: Complex64 = g.diag.iter().zip(target.diag.iter()).map(|(a, b)| b.conj() * a).sum();
    (s.norm_sqr() / 16.0).clamp(0.0, 1.0)
}

/// `-∫ g(t) dt` along the upper bright eigenstate of the `D1'` schedule
/// (trapezoid on the integration grid).
pub fn bright_control_phase(sched: &PulseSchedule, steps_per_stage: usize) -> Result<f64> {
    let sched = sched.with_branch(BranchId::D1P);
    let mut acc = 0.0;
    for (stage, w) in sched.stage_times().windows(2).enumerate() {
        let h = (w[1] - w[0]) / steps_per_stage as f64;
        let branch = sched.stage_branch(stage);
        let mut prev = bright_gap(branch, &sched.sample(w[0])?);
        for j in 1..=steps_per_stage {
            let t = if j == steps_per_stage { w[1] } else { w[0] + h * j as f64 };
            let g = bright_gap(branch, &sched.sample(t)?);
            acc -= 0.5 * h * (prev + g);
            prev = g;
        }
    }
    Ok(acc)
}

/// Noise grid: the cartesian product of the listed values, amplitude axis
/// outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub amp_rel_sigma: Vec<f64>,
    pub timing_rel_sigma: Vec<f64>,
    pub offset_sigma: Vec<f64>,
    pub scale: Vec<f64>,
    pub amp_correlated: bool,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            amp_rel_sigma: vec![0.0],
            timing_rel_sigma: vec![0.0],
            offset_sigma: vec![0.0],
            scale: vec![1.0],
            amp_correlated: false,
        }
    }
}

impl SweepGrid {
    /// Single-cell grid from one noise specification.
    pub fn single(n: &NoiseSpec) -> Self {
        SweepGrid {
            amp_rel_sigma: vec![n.amp_rel_sigma],
            timing_rel_sigma: vec![n.timing_rel_sigma],
            offset_sigma: vec![n.offset_sigma],
            scale: vec![n.scale],
            amp_correlated: n.amp_correlated,
        }
    }

    pub fn cells(&self) -> Vec<NoiseSpec> {
        let mut out = Vec::new();
        for &a in &self.amp_rel_sigma {
            for &t in &self.timing_rel_sigma {
                for &o in &self.offset_sigma {
                    for &s in &self.scale {
                        out.push(NoiseSpec {
                            amp_rel_sigma: a,
                            amp_correlated: self.amp_correlated,
                            timing_rel_sigma: t,
                            offset_sigma: o,
                            scale: s,
                            seed: 0,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for axis in [&self.amp_rel_sigma, &self.timing_rel_sigma, &self.offset_sigma, &self.scale] {
            if axis.is_empty() {
                return Err(Error::Config("sweep grid axis has no values".into()));
            }
        }
        self.cells().iter().try_for_each(NoiseSpec::validate)
    }
}

/// Parses `amp=0,0.01;timing=0;offset=0,1e-3;scale=0.9,1,1.1;correlated=true`.
/// Omitted axes keep their defaults.
impl FromStr for SweepGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut g = SweepGrid::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, vals) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("grid entry '{part}' is not key=values")))?;
            let key = key.trim();
            if key == "correlated" {
                g.amp_correlated = vals
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("correlated expects true/false, got '{vals}'")))?;
                continue;
            }
            let list = vals
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("grid axis {key}: cannot parse '{v}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            match key {
                "amp" => g.amp_rel_sigma = list,
                "timing" => g.timing_rel_sigma = list,
                "offset" => g.offset_sigma = list,
                "scale" => g.scale = list,
                other => return Err(Error::Config(format!("unknown grid axis '{other}'"))),
            }
        }
        g.validate()?;
        Ok(g)
    }
}

/// Mean, population standard deviation and maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Stats {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Stats { mean, std: var.sqrt(), max }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    /// Grid coordinates (the seed field is unused).
    pub noise: NoiseSpec,
    /// Worst-branch `|wrap(geometric − target)|` per trial.
    pub geo_dev: Stats,
    /// Worst-branch final leakage per trial.
    pub leakage: Stats,
    /// Bright-eigenstate dynamical phase per trial.
    pub control_phase: Stats,
    /// `|control / control_nominal − 1|` per trial.
    pub control_rel_dev: Stats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub trials: usize,
    pub seed: u64,
    pub control_nominal: f64,
}

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial; depends only on `(seed, cell, trial)`.
pub fn trial_seed(seed: u64, cell: usize, trial: usize) -> u64 {
    mix(mix(mix(seed) ^ cell as u64) ^ trial as u64)
}

struct TrialOutcome {
    geo_dev: f64,
    leakage: f64,
    control: f64,
}

fn run_trial(spec: &ProtocolSpec, cfg: &IntegratorConfig, noise: &NoiseSpec) -> Result<TrialOutcome> {
    let mut geo_dev: f64 = 0.0;
    let mut leakage: f64 = 0.0;
    for (i, &b) in BranchId::ALL.iter().enumerate() {
        let sched = perturb(&default_gate_protocol(spec, b)?, noise);
        let psi0 = sched
            .reference_state(0, 0.0)
            .ok_or(Error::GateRun { branch: b, source: Box::new(Error::DegenerateKernel(b)) })?;
        let tr = evolve(&sched, &psi0, cfg)?;
        let dev = match total_phase(&tr) {
            Ok((total, _)) => wrap_angle(total - dynamic_phase(&tr)? - TARGET_PHASES[i]).abs(),
            // no phase to speak of: count as the worst case
            Err(Error::UndefinedPhase(_)) => PI,
            Err(e) => return Err(e),
        };
        geo_dev = geo_dev.max(dev);
        leakage = leakage.max(tr.final_leakage());
    }
    let control = bright_control_phase(&perturb(&default_gate_protocol(spec, BranchId::D1P)?, noise), cfg.steps_per_stage)?;
    Ok(TrialOutcome { geo_dev, leakage, control })
}

/// Evolves `trials` perturbed gates per grid cell and aggregates deviations.
///
/// Every trial is seeded from `(seed, cell, trial)`, so the result does not
/// depend on scheduling.
pub fn robustness_sweep(
    spec: &ProtocolSpec,
    cfg: &IntegratorConfig,
    grid: &SweepGrid,
    trials: usize,
    seed: u64,
) -> Result<SweepResult> {
    if trials == 0 {
        return Err(Error::Config("sweep needs at least one trial".into()));
    }
    spec.validate()?;
    cfg.validate()?;
    grid.validate()?;
    let cells = grid.cells();
    let control_nominal = bright_control_phase(&default_gate_protocol(spec, BranchId::D1P)?, cfg.steps_per_stage)?;

    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..trials).map(move |t| (c, t))).collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let noise = NoiseSpec { seed: trial_seed(seed, c, t), ..cells[c] };
            run_trial(spec, cfg, &noise)
        })
        .collect::<Result<_>>()?;

    let cells = cells
        .iter()
        .enumerate()
        .map(|(c, noise)| {
            let chunk = &outcomes[c * trials..(c + 1) * trials];
            let pick = |f: fn(&TrialOutcome) -> f64| chunk.iter().map(f).collect::<Vec<f64>>();
            let control = pick(|o| o.control);
            let rel: Vec<f64> = control.iter().map(|x| (x / control_nominal - 1.0).abs()).collect();
            SweepCell {
                noise: *noise,
                geo_dev: Stats::of(&pick(|o| o.geo_dev)),
                leakage: Stats::of(&pick(|o| o.leakage)),
                control_phase: Stats::of(&control),
                control_rel_dev: Stats::of(&rel),
            }
        })
        .collect();
    Ok(SweepResult { cells, trials, seed, control_nominal })
}
