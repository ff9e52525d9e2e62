use std::f64::consts::PI;

use darkphase::bloch::{dark_point, BlochPath};
use darkphase::gate::{assemble_gate, gate_fidelity, run_branch, run_gate, GateMatrix, GATE_MIN_CYCLICITY, TARGET_PHASES};
use darkphase::model::{BranchId, CouplingSet};
use darkphase::propagator::{aa_phase, evolve, EnergyShift, HamiltonianSource, IntegratorConfig};
use darkphase::pulses::{default_gate_protocol, ProfileKind, ProtocolSpec, PulseSchedule, SampledCouplings};
use darkphase::statevec::wrap_angle;
use num_complex::Complex64;

fn cfg(steps: usize) -> IntegratorConfig {
    IntegratorConfig { steps_per_stage: steps, ..Default::default() }
}

#[test]
fn ideal_gate_matches_target_diagonal() {
    let reports = run_gate(&ProtocolSpec::trig(1.0, 200.0), &cfg(20000)).unwrap();
    let g = assemble_gate(&reports).unwrap();
    for z in g.diag {
        assert!((z.norm() - 1.0).abs() < 1e-6);
    }
    assert!(gate_fidelity(&g, &GateMatrix::ideal()) >= 0.999);
    for r in &reports {
        assert!((0.0..=1.0).contains(&r.leakage_final));
        assert!(wrap_angle(r.phases.geometric_phase + r.solid_angle / 2.0).abs() < 0.05);
    }
}

#[test]
fn longer_stages_move_phases_toward_targets() {
    let dev = |big_t: f64| {
        let reports = run_gate(&ProtocolSpec::trig(1.0, big_t), &cfg(20000)).unwrap();
        reports
            .iter()
            .zip(TARGET_PHASES)
            .map(|(r, t)| (wrap_angle(r.phases.total_phase - t).abs(), r.leakage_final))
            .collect::<Vec<_>>()
    };
    let (short, long) = (dev(50.0), dev(500.0));
    for (s, l) in short.iter().zip(&long) {
        assert!(l.0 <= s.0 + 1e-12);
        assert!(l.1 < s.1);
    }
}

#[test]
fn simulated_path_tracks_closed_form_and_converges() {
    let spec = |t| ProtocolSpec::trig(1.0, t);
    let deviation = |big_t: f64| {
        let sched = default_gate_protocol(&spec(big_t), BranchId::D1P).unwrap();
        let run = run_branch(&sched, &cfg(20000), GATE_MIN_CYCLICITY).unwrap();
        let closed: Vec<_> = run
            .path
            .times
            .iter()
            .map(|&t| dark_point(sched.stage_branch(sched.stage_at(t)), sched.mixing_angle_at(t).unwrap()))
            .collect();
        BlochPath::new(run.path.times.clone(), closed).unwrap().max_deviation(&run.path)
    };
    let (d200, d800) = (deviation(200.0), deviation(800.0));
    assert!(d200 < 0.02, "{d200}");
    // non-adiabatic lag scales like 1/T
    assert!(d800 < 0.3 * d200, "{d800} vs {d200}");
}

#[test]
fn periodic_energy_shift_leaves_geometric_phase_unchanged() {
    let spec = ProtocolSpec::trig(1.0, 200.0);
    let c = cfg(20000);
    for b in BranchId::ALL {
        let sched = default_gate_protocol(&spec, b).unwrap();
        let psi0 = sched.reference_state(0, 0.0).unwrap();
        let plain = aa_phase(&evolve(&sched, &psi0, &c).unwrap(), GATE_MIN_CYCLICITY).unwrap();
        let period = sched.duration() / 3.0;
        let shifted_src = EnergyShift { inner: &sched, shift: move |t: f64| 0.3 + 0.2 * (2.0 * PI * t / period).sin() };
        let shifted = aa_phase(&evolve(&shifted_src, &psi0, &c).unwrap(), GATE_MIN_CYCLICITY).unwrap();
        assert!((shifted.dynamic_phase - plain.dynamic_phase + 0.3 * 400.0).abs() < 1e-6);
        assert!(wrap_angle(shifted.geometric_phase - plain.geometric_phase).abs() < 1e-6, "{b}");
    }
}

#[test]
fn complex_coupling_phases_give_the_same_gate() {
    // a constant phase on every coupling is a basis relabelling
    let phase = Complex64::from_polar(1.0, 0.9);
    let big_t = 200.0;
    let reports: Vec<_> = BranchId::ALL
        .iter()
        .map(|&b| {
            let sched = PulseSchedule::custom(b, big_t, move |tau| {
                let s = if tau <= big_t { tau / big_t } else { (2.0 * big_t - tau) / big_t };
                let (sn, cs) = (PI / 2.0 * s).sin_cos();
                CouplingSet::new(phase * sn, Complex64::new(1.0, 0.0), phase.conj() * cs)
            })
            .unwrap();
            run_branch(&sched, &cfg(20000), GATE_MIN_CYCLICITY).unwrap().report
        })
        .collect();
    let g = assemble_gate(&reports).unwrap();
    assert!(gate_fidelity(&g, &GateMatrix::ideal()) > 0.999);
}

#[test]
fn sampled_profile_reproduces_trig_gate() {
    let big_t = 200.0;
    let n = 4001;
    let mut ch: [Vec<(f64, f64)>; 3] = Default::default();
    for k in 0..n {
        let t = 2.0 * big_t * k as f64 / (n - 1) as f64;
        let s = if t <= big_t { t / big_t } else { (2.0 * big_t - t) / big_t };
        let (sn, cs) = (PI / 2.0 * s.clamp(0.0, 1.0)).sin_cos();
        ch[0].push((t, sn));
        ch[1].push((t, 1.0));
        ch[2].push((t, cs));
    }
    let spec = ProtocolSpec {
        profile: ProfileKind::Sampled,
        samples: Some(std::sync::Arc::new(SampledCouplings::new(ch).unwrap())),
        ..ProtocolSpec::trig(1.0, big_t)
    };
    let reports = run_gate(&spec, &cfg(20000)).unwrap();
    for (r, t) in reports.iter().zip(TARGET_PHASES) {
        assert!(wrap_angle(r.phases.geometric_phase - t).abs() < 0.02);
        assert!((r.solid_angle.abs() - if t == 0.0 { 0.0 } else { 2.0 * PI }).abs() < 0.05);
    }
}
