//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 3 when
//! the numerics fail (non-cyclic branch, undefined phase, ...).

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bloch::{dark_point, project, BlochPath};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::export::{
    write_bloch_comparison_csv, write_bloch_csv, write_gate_report, write_sweep_csv, write_trajectory_csv,
    Provenance,
};
use crate::gate::{assemble_gate, gate_fidelity, robustness_sweep, run_gate_detailed, GateMatrix, SweepGrid};
use crate::model::BranchId;
use crate::propagator::{evolve, HamiltonianSource};
use crate::pulses::default_gate_protocol;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "darkphase", version, about = "Dark-state geometric phase gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the four gate branches and write the gate report.
    Run(Common),
    /// Monte-Carlo robustness sweep over a noise grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// e.g. "amp=0,0.01;timing=0;offset=0,1e-3;scale=0.9,1,1.1"
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Export closed-form and simulated Bloch paths.
    Bloch(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    quiet: bool,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut overrides = self.set.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        let mut cfg = RunConfig::load(self.config.as_deref(), &overrides)?;
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        Ok(cfg)
    }
}

fn file_tag(b: BranchId) -> String {
    b.to_string().replace('\'', "p")
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance { config_hash: cfg.hash(), seed: cfg.seed }
}

fn cmd_run(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let spec = cfg.protocol()?;
    let runs = run_gate_detailed(&spec, &cfg.integrator())?;
    let reports: Vec<_> = runs.iter().map(|r| r.report).collect();
    let gate = assemble_gate(&reports)?;
    let fid = gate_fidelity(&gate, &GateMatrix::ideal());

    let prov = provenance(&cfg);
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_gate_report(create(&cfg.out_dir, "report.toml")?, &prov, &reports, &gate, fid)?;
    for r in &runs {
        let tag = file_tag(r.report.branch);
        write_trajectory_csv(create(&cfg.out_dir, &format!("trajectory_{tag}.csv"))?, &prov, &r.trajectory)?;
        write_bloch_csv(create(&cfg.out_dir, &format!("bloch_{tag}.csv"))?, &prov, &r.path)?;
    }
    if !c.quiet {
        println!("{:<5} {:>12} {:>12} {:>12} {:>12} {:>10}", "branch", "total", "dynamic", "geometric", "solid_angle", "leakage");
        for r in &reports {
            println!(
                "{:<5} {:>12.6} {:>12.3e} {:>12.6} {:>12.6} {:>10.3e}",
                r.branch.to_string(),
                r.phases.total_phase,
                r.phases.dynamic_phase,
                r.phases.geometric_phase,
                r.solid_angle,
                r.leakage_final
            );
        }
        println!("gate fidelity {fid:.9}");
        println!("wrote {}", cfg.out_dir.display());
    }
    Ok(())
}

fn cmd_sweep(c: &Common, grid: Option<&str>, trials: Option<usize>) -> Result<()> {
    let cfg = c.load()?;
    let spec = cfg.protocol()?;
    let grid: SweepGrid = match grid {
        Some(g) => g.parse()?,
        None => cfg.grid()?,
    };
    let trials = trials.unwrap_or(cfg.sweep_trials);
    let res = robustness_sweep(&spec, &cfg.integrator(), &grid, trials, cfg.seed)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_sweep_csv(create(&cfg.out_dir, "sweep.csv")?, &provenance(&cfg), &res)?;
    if !c.quiet {
        println!("{:>10} {:>10} {:>10} {:>6} {:>12} {:>12} {:>12}", "amp", "timing", "offset", "scale", "geo_dev", "leakage", "ctrl_dev");
        for cell in &res.cells {
            let n = &cell.noise;
            println!(
                "{:>10.3e} {:>10.3e} {:>10.3e} {:>6.3} {:>12.4e} {:>12.4e} {:>12.4e}",
                n.amp_rel_sigma,
                n.timing_rel_sigma,
                n.offset_sigma,
                n.scale,
                cell.geo_dev.mean,
                cell.leakage.mean,
                cell.control_rel_dev.mean
            );
        }
        println!("wrote {}", cfg.out_dir.join("sweep.csv").display());
    }
    Ok(())
}

fn cmd_bloch(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let spec = cfg.protocol()?;
    let prov = provenance(&cfg);
    std::fs::create_dir_all(&cfg.out_dir)?;
    for b in BranchId::ALL {
        let sched = default_gate_protocol(&spec, b)?;
        let psi0 = sched.reference_state(0, 0.0).ok_or(Error::DegenerateKernel(b))?;
        let tr = evolve(&sched, &psi0, &cfg.integrator())?;
        let closed = tr
            .times
            .iter()
            .map(|&t| Ok(dark_point(sched.stage_branch(sched.stage_at(t)), sched.mixing_angle_at(t)?)))
            .collect::<Result<Vec<_>>>()?;
        let closed = BlochPath::new(tr.times.clone(), closed)?;
        // export even strongly non-adiabatic runs; the photon column shows it
        let sim = tr.states.iter().map(|s| project(s, 1.0)).collect::<Result<Vec<_>>>()?;
        let sim = BlochPath::new(tr.times.clone(), sim)?;
        let photon: Vec<f64> = tr.states.iter().map(|s| s.photon_population()).collect();
        let name = format!("bloch_compare_{}.csv", file_tag(b));
        write_bloch_comparison_csv(create(&cfg.out_dir, &name)?, &prov, &closed, &sim, &photon)?;
        if !c.quiet {
            println!("{b}: max deviation {:.3e}", closed.max_deviation(&sim));
        }
    }
    if !c.quiet {
        println!("wrote {}", cfg.out_dir.display());
    }
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() || matches!(e, Error::Io(_)) {
        EXIT_INVALID
    } else {
        EXIT_NUMERICAL
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let res = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Sweep { common, grid, trials } => cmd_sweep(common, grid.as_deref(), *trials),
        Command::Bloch(c) => cmd_bloch(c),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
