//! CSV and TOML writers. Every file starts with a `# config_hash=... seed=...`
//! line; floats are written with `{:.16e}` so re-reading is lossless.

use std::io::Write;

use serde::Serialize;

use crate::bloch::BlochPath;
use crate::error::Result;
use crate::gate::{BranchPhaseReport, GateMatrix, SweepResult};
use crate::propagator::TrajectoryRecord;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn line(&self) -> String {
        format!("# config_hash={} seed={}", self.config_hash, self.seed)
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(mut w: W, prov: &Provenance) -> Result<csv::Writer<W>> {
    writeln!(w, "{}", prov.line())?;
    Ok(csv::Writer::from_writer(w))
}

pub fn write_trajectory_csv<W: Write>(w: W, prov: &Provenance, tr: &TrajectoryRecord) -> Result<()> {
    let mut out = csv_writer(w, prov)?;
    out.write_record([
        "t", "re0", "im0", "re1", "im1", "re2", "im2", "energy_expect", "dyn_phase_acc", "leakage",
    ])?;
    for i in 0..tr.len() {
        let a = &tr.states[i].amps;
        let row = [
            tr.times[i], a[0].re, a[0].im, a[1].re, a[1].im, a[2].re, a[2].im,
            tr.energy_expect[i], tr.dyn_phase_acc[i], tr.leakage[i],
        ];
        out.write_record(row.map(num))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_bloch_csv<W: Write>(w: W, prov: &Provenance, path: &BlochPath) -> Result<()> {
    let mut out = csv_writer(w, prov)?;
    out.write_record(["t", "nx", "ny", "nz"])?;
    for (t, n) in path.times.iter().zip(&path.samples) {
        out.write_record([*t, n.nx, n.ny, n.nz].map(num))?;
    }
    out.flush()?;
    Ok(())
}

/// Closed-form and simulated paths side by side; both must share sample times.
pub fn write_bloch_comparison_csv<W: Write>(
    w: W,
    prov: &Provenance,
    closed_form: &BlochPath,
    simulated: &BlochPath,
    photon: &[f64],
) -> Result<()> {
    let mut out = csv_writer(w, prov)?;
    out.write_record(["t", "cf_nx", "cf_ny", "cf_nz", "sim_nx", "sim_ny", "sim_nz", "photon"])?;
    for i in 0..closed_form.len().min(simulated.len()) {
        let (c, s) = (closed_form.samples[i], simulated.samples[i]);
        let p = photon.get(i).copied().unwrap_or(f64::NAN);
        out.write_record([closed_form.times[i], c.nx, c.ny, c.nz, s.nx, s.ny, s.nz, p].map(num))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(w: W, prov: &Provenance, res: &SweepResult) -> Result<()> {
    let mut out = csv_writer(w, prov)?;
    out.write_record([
        "amp_rel_sigma", "amp_correlated", "timing_rel_sigma", "offset_sigma", "scale", "trials",
        "geo_dev_mean", "geo_dev_std", "geo_dev_max",
        "leakage_mean", "leakage_std", "leakage_max",
        "control_mean", "control_std", "control_max",
        "control_rel_dev_mean", "control_rel_dev_std", "control_rel_dev_max",
    ])?;
    for c in &res.cells {
        let n = &c.noise;
        let mut row = vec![
            num(n.amp_rel_sigma),
            n.amp_correlated.to_string(),
            num(n.timing_rel_sigma),
            num(n.offset_sigma),
            num(n.scale),
            res.trials.to_string(),
        ];
        for s in [c.geo_dev, c.leakage, c.control_phase, c.control_rel_dev] {
            row.extend([num(s.mean), num(s.std), num(s.max)]);
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BranchEntry {
    name: String,
    total_phase: f64,
    dynamic_phase: f64,
    geometric_phase: f64,
    cyclicity_fidelity: f64,
    solid_angle: f64,
    leakage_final: f64,
    closure_gap: f64,
    photon_max: f64,
    gate_re: f64,
    gate_im: f64,
}

#[derive(Serialize)]
struct GateReport {
    fidelity: f64,
    branch: Vec<BranchEntry>,
}

pub fn write_gate_report<W: Write>(
    mut w: W,
    prov: &Provenance,
    reports: &[BranchPhaseReport],
    gate: &GateMatrix,
    fidelity: f64,
) -> Result<()> {
    let doc = GateReport {
        fidelity,
        branch: reports
            .iter()
            .map(|r| {
                let g = gate.diag[r.branch.index()];
                BranchEntry {
                    name: r.branch.to_string(),
                    total_phase: r.phases.total_phase,
                    dynamic_phase: r.phases.dynamic_phase,
                    geometric_phase: r.phases.geometric_phase,
                    cyclicity_fidelity: r.phases.cyclicity_fidelity,
                    solid_angle: r.solid_angle,
                    leakage_final: r.leakage_final,
                    closure_gap: r.closure_gap,
                    photon_max: r.photon_max,
                    gate_re: g.re,
                    gate_im: g.im,
                }
            })
            .collect(),
    };
    let body = toml::to_string(&doc).expect("report serialises");
    write!(w, "{}\n{}", prov.line(), body)?;
    Ok(())
}
