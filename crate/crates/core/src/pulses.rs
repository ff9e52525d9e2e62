//! Coupling schedules for the two-stage dark-state protocol.
//!
//! Over the window `[0, 2T]` the primed mixing angle θ' = atan(|λ1|/|λ3|)
//! goes 0 → π/2 in the first stage and back π/2 → 0 in the second, while
//! λ2 is held constant. For primed branches the sign `c` entering the
//! Hamiltonian switches at the stage boundary.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{mixing_angle, BranchId, CouplingSet};

/// Angular tolerance for the closure check on sampled profiles.
const SAMPLED_CLOSURE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    #[default]
    Trig,
    Linear,
    Sampled,
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trig" => Ok(ProfileKind::Trig),
            "linear" => Ok(ProfileKind::Linear),
            "sampled" => Ok(ProfileKind::Sampled),
            other => Err(Error::Config(format!("unknown profile '{other}'"))),
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileKind::Trig => "trig",
            ProfileKind::Linear => "linear",
            ProfileKind::Sampled => "sampled",
        })
    }
}

/// Piecewise-linear coupling tables, one `(t, value)` list per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledCouplings {
    channels: [Vec<(f64, f64)>; 3],
}

impl SampledCouplings {
    pub fn new(channels: [Vec<(f64, f64)>; 3]) -> Result<Self> {
        for (i, ch) in channels.iter().enumerate() {
            if ch.is_empty() {
                return Err(Error::Config(format!("sampled channel lambda{} has no points", i + 1)));
            }
            if ch.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                return Err(Error::Config(format!("sampled channel lambda{} has non-finite values", i + 1)));
            }
            if ch.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Config(format!(
                    "sampled channel lambda{} times must be strictly increasing",
                    i + 1
                )));
            }
        }
        Ok(SampledCouplings { channels })
    }

    /// Reads `t1,lambda1,t2,lambda2,t3,lambda3` rows. Empty cells end a channel
    /// early; a non-numeric first row is taken as a header and `#` lines are
    /// comments.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut channels: [Vec<(f64, f64)>; 3] = Default::default();
        for (row_idx, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if row_idx == 0 && rec.iter().next().is_some_and(|f| f.parse::<f64>().is_err()) {
                continue;
            }
            for (ch, out) in channels.iter_mut().enumerate() {
                let (t, v) = (rec.get(2 * ch).unwrap_or(""), rec.get(2 * ch + 1).unwrap_or(""));
                if t.is_empty() && v.is_empty() {
                    continue;
                }
                let parse = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Config(format!("row {}: cannot parse '{s}'", row_idx + 1)))
                };
                out.push((parse(t)?, parse(v)?));
            }
        }
        SampledCouplings::new(channels)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|e| Error::Config(format!("cannot open samples file {}: {e}", path.display())))?;
        SampledCouplings::from_csv(f)
    }

    fn covers(&self, start: f64, end: f64) -> bool {
        self.channels
            .iter()
            .all(|ch| ch.first().unwrap().0 <= start && ch.last().unwrap().0 >= end)
    }

    pub fn eval(&self, t: f64) -> CouplingSet {
        let v = self.channels.each_ref().map(|ch| Complex64::new(interp(ch, t), 0.0));
        CouplingSet::from_channels(v)
    }
}

fn interp(points: &[(f64, f64)], t: f64) -> f64 {
    let i = points.partition_point(|p| p.0 <= t);
    if i == 0 {
        return points[0].1;
    }
    if i == points.len() {
        return points[i - 1].1;
    }
    let (t0, v0) = points[i - 1];
    let (t1, v1) = points[i];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Protocol parameters shared by all four branches.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSpec {
    /// Peak coupling Ω.
    pub omega_peak: f64,
    /// Duration T of one stage; the full window is 2T.
    pub stage_duration: f64,
    pub profile: ProfileKind,
    /// Constant λ2.
    pub lambda2_hold: f64,
    pub samples: Option<Arc<SampledCouplings>>,
}

impl ProtocolSpec {
    /// Trig profile with λ2 held at Ω.
    pub fn trig(omega_peak: f64, stage_duration: f64) -> Self {
        ProtocolSpec {
            omega_peak,
            stage_duration,
            profile: ProfileKind::Trig,
            lambda2_hold: omega_peak,
            samples: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_peak > 0.0) || !self.omega_peak.is_finite() {
            return Err(Error::Config(format!("omega_peak must be positive, got {}", self.omega_peak)));
        }
        if !(self.stage_duration > 0.0) || !self.stage_duration.is_finite() {
            return Err(Error::Config(format!(
                "stage_duration must be positive, got {}",
                self.stage_duration
            )));
        }
        if !self.lambda2_hold.is_finite() {
            return Err(Error::Config("lambda2_hold must be finite".into()));
        }
        if self.profile == ProfileKind::Sampled {
            match &self.samples {
                None => return Err(Error::Config("sampled profile requires coupling samples".into())),
                Some(s) if !s.covers(0.0, 2.0 * self.stage_duration) => {
                    return Err(Error::Config("coupling samples do not cover [0, 2T]".into()))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

type CouplingFn = dyn Fn(f64) -> CouplingSet + Send + Sync;

#[derive(Clone)]
enum Shape {
    Trig { omega: f64, lambda2: f64 },
    Linear { omega: f64, lambda2: f64 },
    Sampled(Arc<SampledCouplings>),
    Custom(Arc<CouplingFn>),
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Trig { omega, lambda2 } => write!(f, "Trig(Ω={omega}, λ2={lambda2})"),
            Shape::Linear { omega, lambda2 } => write!(f, "Linear(Ω={omega}, λ2={lambda2})"),
            Shape::Sampled(_) => write!(f, "Sampled"),
            Shape::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// `(sin(πs/2), cos(πs/2))`, exact at s = 0 and s = 1.
fn quarter_turn(s: f64) -> (f64, f64) {
    if s <= 0.0 {
        (0.0, 1.0)
    } else if s >= 1.0 {
        (1.0, 0.0)
    } else {
        (FRAC_PI_2 * s).sin_cos()
    }
}

/// Quasi-static control errors, frozen over one run.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Distortion {
    channel_scale: [f64; 3],
    offset: [f64; 3],
    time_factor: f64,
}

impl Default for Distortion {
    fn default() -> Self {
        Distortion { channel_scale: [1.0; 3], offset: [0.0; 3], time_factor: 1.0 }
    }
}

/// Time-dependent couplings over `[0, 2T]` for one branch.
#[derive(Clone, Debug)]
pub struct PulseSchedule {
    branch: BranchId,
    nominal_stage: f64,
    shape: Shape,
    distortion: Distortion,
}

pub fn default_gate_protocol(spec: &ProtocolSpec, branch: BranchId) -> Result<PulseSchedule> {
    spec.validate()?;
    let shape = match spec.profile {
        ProfileKind::Trig => Shape::Trig { omega: spec.omega_peak, lambda2: spec.lambda2_hold },
        ProfileKind::Linear => Shape::Linear { omega: spec.omega_peak, lambda2: spec.lambda2_hold },
        ProfileKind::Sampled => Shape::Sampled(spec.samples.clone().expect("validated")),
    };
    let sched = PulseSchedule {
        branch,
        nominal_stage: spec.stage_duration,
        shape,
        distortion: Distortion::default(),
    };
    if spec.profile == ProfileKind::Sampled {
        sched.check_closure(SAMPLED_CLOSURE_TOL)?;
    }
    Ok(sched)
}

impl PulseSchedule {
    /// Schedule driven by an arbitrary coupling function on `[0, 2T]`.
    pub fn custom<F>(branch: BranchId, stage_duration: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> CouplingSet + Send + Sync + 'static,
    {
        if !(stage_duration > 0.0) || !stage_duration.is_finite() {
            return Err(Error::Config(format!("stage_duration must be positive, got {stage_duration}")));
        }
        Ok(PulseSchedule {
            branch,
            nominal_stage: stage_duration,
            shape: Shape::Custom(Arc::new(f)),
            distortion: Distortion::default(),
        })
    }

    /// Same couplings, different branch.
    pub fn with_branch(&self, branch: BranchId) -> Self {
        PulseSchedule { branch, ..self.clone() }
    }

    pub fn branch(&self) -> BranchId {
        self.branch
    }

    pub fn stage_boundary(&self) -> f64 {
        self.nominal_stage * self.distortion.time_factor
    }

    pub fn duration(&self) -> f64 {
        2.0 * self.stage_boundary()
    }

    /// Hamiltonian branch in force during `stage` (0 or 1).
    ///
    /// Primed branch α runs its first stage with sign `c_α` and its second
    /// with the other sign, so `D1'` follows the `c1, c2` order and `D2'` the
    /// mirrored one. Unprimed Hamiltonians carry no sign.
    pub fn stage_branch(&self, stage: usize) -> BranchId {
        if self.branch.primed() && stage == 1 {
            self.branch.partner()
        } else {
            self.branch
        }
    }

    pub fn stage_at(&self, t: f64) -> usize {
        if t <= self.stage_boundary() {
            0
        } else {
            1
        }
    }

    fn nominal(&self, tau: f64) -> CouplingSet {
        let t_stage = self.nominal_stage;
        // stage-local progress, 0 at the ends of the window and 1 at the boundary
        let s = if tau <= t_stage { tau / t_stage } else { (2.0 * t_stage - tau) / t_stage };
        match &self.shape {
            Shape::Trig { omega, lambda2 } => {
                let (sn, cs) = quarter_turn(s);
                CouplingSet::real(omega * sn, *lambda2, omega * cs)
            }
            Shape::Linear { omega, lambda2 } => {
                let s = s.clamp(0.0, 1.0);
                CouplingSet::real(omega * s, *lambda2, omega * (1.0 - s))
            }
            Shape::Sampled(tab) => tab.eval(tau),
            Shape::Custom(f) => f(tau),
        }
    }

    /// Couplings at time `t ∈ [0, duration]`.
    pub fn sample(&self, t: f64) -> Result<CouplingSet> {
        let end = self.duration();
        let slack = 1e-12 * end;
        if !(t >= -slack && t <= end + slack) {
            return Err(Error::OutOfRange { t, end });
        }
        let d = &self.distortion;
        let tau = if t >= end {
            2.0 * self.nominal_stage
        } else if t <= 0.0 {
            0.0
        } else if t == self.stage_boundary() {
            self.nominal_stage
        } else {
            t / d.time_factor
        };
        let mut ch = self.nominal(tau).channels();
        for i in 0..3 {
            ch[i] = ch[i] * d.channel_scale[i] + d.offset[i];
        }
        Ok(CouplingSet::from_channels(ch))
    }

    /// Mixing angle of the stage Hamiltonian at `t`.
    pub fn mixing_angle_at(&self, t: f64) -> Result<f64> {
        let c = self.sample(t)?;
        mixing_angle(self.stage_branch(self.stage_at(t)), &c)
    }

    fn check_closure(&self, tol: f64) -> Result<()> {
        let primed = self.branch.with_primed(true);
        let probe = self.with_branch(primed);
        let th0 = probe.mixing_angle_at(0.0)?;
        let th1 = probe.mixing_angle_at(self.stage_boundary())?;
        let th2 = probe.mixing_angle_at(self.duration())?;
        if th0.abs() > tol || th2.abs() > tol || (th1 - FRAC_PI_2).abs() > tol {
            return Err(Error::Config(format!(
                "schedule does not close: θ'(0) = {th0:.3e}, θ'(T) = {th1:.6}, θ'(2T) = {th2:.3e}"
            )));
        }
        Ok(())
    }
}

/// Quasi-static noise: per-channel multiplicative and additive errors plus a
/// stretch of the time axis, all drawn once per run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// σ of the relative amplitude error per channel.
    pub amp_rel_sigma: f64,
    /// Draw one amplitude factor shared by all channels.
    pub amp_correlated: bool,
    /// σ of the relative stage-duration error.
    pub timing_rel_sigma: f64,
    /// σ of the additive coupling offset per channel.
    pub offset_sigma: f64,
    /// Deterministic global amplitude factor.
    pub scale: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            amp_rel_sigma: 0.0,
            amp_correlated: false,
            timing_rel_sigma: 0.0,
            offset_sigma: 0.0,
            scale: 1.0,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("amp_rel_sigma", self.amp_rel_sigma),
            ("timing_rel_sigma", self.timing_rel_sigma),
            ("offset_sigma", self.offset_sigma),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a finite non-negative number, got {v}")));
            }
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::Config(format!("scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }
}

/// Smallest admissible stretch of the time axis.
const MIN_TIME_FACTOR: f64 = 1e-3;

/// Applies one draw of `n` to `s`. Deterministic in `n.seed`.
pub fn perturb(s: &PulseSchedule, n: &NoiseSpec) -> PulseSchedule {
    let mut rng = ChaCha8Rng::seed_from_u64(n.seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };

    let amp: [f64; 3] = if n.amp_correlated {
        let a = gauss();
        [a; 3]
    } else {
        [gauss(), gauss(), gauss()]
    };
    let timing = gauss();
    let offsets = [gauss(), gauss(), gauss()];

    let mut d = s.distortion;
    for i in 0..3 {
        d.channel_scale[i] *= n.scale * (1.0 + n.amp_rel_sigma * amp[i]);
        d.offset[i] += n.offset_sigma * offsets[i];
    }
    d.time_factor *= (1.0 + n.timing_rel_sigma * timing).max(MIN_TIME_FACTOR);
    PulseSchedule { distortion: d, ..s.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn trig(omega: f64, t: f64) -> PulseSchedule {
        default_gate_protocol(&ProtocolSpec::trig(omega, t), BranchId::D1P).unwrap()
    }

    #[test]
    fn trig_endpoints_and_midpoint() {
        let s = trig(1.5, 10.0);
        let c0 = s.sample(0.0).unwrap();
        assert_eq!(c0, CouplingSet::real(0.0, 1.5, 1.5));
        assert_eq!(s.mixing_angle_at(0.0).unwrap(), 0.0);

        let c1 = s.sample(10.0).unwrap();
        assert_eq!(c1, CouplingSet::real(1.5, 1.5, 0.0));
        assert_eq!(s.mixing_angle_at(10.0).unwrap(), FRAC_PI_2);

        assert_abs_diff_eq!(s.mixing_angle_at(5.0).unwrap(), FRAC_PI_2 / 2.0, epsilon = 1e-15);
        assert_eq!(s.sample(20.0).unwrap(), c0);
        assert_eq!(s.mixing_angle_at(20.0).unwrap(), 0.0);
    }

    #[test]
    fn trig_matches_stage_formulas() {
        let (om, t) = (2.0, 7.0);
        let s = trig(om, t);
        for &x in &[0.3, 2.0, 6.9] {
            let c = s.sample(x).unwrap();
            let a = std::f64::consts::PI * x / (2.0 * t);
            assert_abs_diff_eq!(c.lambda1.re, om * a.sin(), epsilon = 1e-14);
            assert_abs_diff_eq!(c.lambda3.re, om * a.cos(), epsilon = 1e-14);
        }
        for &x in &[7.1, 10.0, 13.9] {
            let c = s.sample(x).unwrap();
            let a = std::f64::consts::PI * (x - t) / (2.0 * t);
            assert_abs_diff_eq!(c.lambda1.re, om * a.cos(), epsilon = 1e-14);
            assert_abs_diff_eq!(c.lambda3.re, om * a.sin(), epsilon = 1e-14);
            assert_eq!(c.lambda2.re, om);
        }
    }

    #[test]
    fn stage_boundary_is_continuous() {
        let s = trig(1.0, 3.0);
        let left = s.sample(3.0 - 1e-13).unwrap();
        let right = s.sample(3.0 + 1e-13).unwrap();
        for (a, b) in left.channels().iter().zip(right.channels().iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sample_outside_window_is_rejected() {
        let s = trig(1.0, 3.0);
        assert!(matches!(s.sample(-0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(s.sample(6.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn linear_profile_closes() {
        let spec = ProtocolSpec { profile: ProfileKind::Linear, ..ProtocolSpec::trig(1.0, 4.0) };
        let s = default_gate_protocol(&spec, BranchId::D2P).unwrap();
        assert_eq!(s.mixing_angle_at(0.0).unwrap(), 0.0);
        assert_eq!(s.mixing_angle_at(4.0).unwrap(), FRAC_PI_2);
        assert_eq!(s.mixing_angle_at(8.0).unwrap(), 0.0);
        assert_abs_diff_eq!(s.sample(2.0).unwrap().lambda1.re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn invalid_specs_are_config_errors() {
        let bad = [
            ProtocolSpec::trig(0.0, 1.0),
            ProtocolSpec::trig(1.0, 0.0),
            ProtocolSpec::trig(1.0, f64::NAN),
            ProtocolSpec { profile: ProfileKind::Sampled, ..ProtocolSpec::trig(1.0, 1.0) },
        ];
        for spec in bad {
            assert!(matches!(default_gate_protocol(&spec, BranchId::D1), Err(Error::Config(_))));
        }
    }

    #[test]
    fn sampled_profile_from_csv() {
        let csv = "t1,lambda1,t2,lambda2,t3,lambda3\n\
                   0,0,0,1,0,1\n\
                   1,1,2,1,1,0\n\
                   2,0,,,2,1\n";
        let tab = SampledCouplings::from_csv(csv.as_bytes()).unwrap();
        let spec = ProtocolSpec {
            profile: ProfileKind::Sampled,
            samples: Some(Arc::new(tab)),
            ..ProtocolSpec::trig(1.0, 1.0)
        };
        let s = default_gate_protocol(&spec, BranchId::D1P).unwrap();
        let c = s.sample(0.5).unwrap();
        assert_abs_diff_eq!(c.lambda1.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.lambda3.re, 0.5, epsilon = 1e-15);
        assert_eq!(c.lambda2.re, 1.0);
        assert_eq!(s.mixing_angle_at(1.0).unwrap(), FRAC_PI_2);
    }

    #[test]
    fn sampled_profile_that_does_not_close_is_rejected() {
        let csv = "0,0.2,0,1,0,1\n2,0.2,2,1,2,1\n";
        let tab = SampledCouplings::from_csv(csv.as_bytes()).unwrap();
        let spec = ProtocolSpec {
            profile: ProfileKind::Sampled,
            samples: Some(Arc::new(tab)),
            ..ProtocolSpec::trig(1.0, 1.0)
        };
        assert!(matches!(default_gate_protocol(&spec, BranchId::D1), Err(Error::Config(_))));
    }

    #[test]
    fn sampled_rows_must_increase() {
        let csv = "0,0,0,1,0,1\n0,1,1,1,1,0\n";
        assert!(SampledCouplings::from_csv(csv.as_bytes()).is_err());
    }

    #[test]
    fn stage_branches() {
        let s = trig(1.0, 1.0);
        assert_eq!(s.stage_branch(0), BranchId::D1P);
        assert_eq!(s.stage_branch(1), BranchId::D2P);
        let s2 = s.with_branch(BranchId::D2P);
        assert_eq!(s2.stage_branch(0), BranchId::D2P);
        assert_eq!(s2.stage_branch(1), BranchId::D1P);
        let u = s.with_branch(BranchId::D2);
        assert_eq!(u.stage_branch(1), BranchId::D2);
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = trig(1.0, 5.0);
        let p = perturb(&s, &NoiseSpec { seed: 42, ..Default::default() });
        for k in 0..=100 {
            let t = 0.1 * k as f64;
            assert_eq!(s.sample(t).unwrap(), p.sample(t).unwrap());
        }
    }

    #[test]
    fn perturb_is_deterministic() {
        let s = trig(1.0, 5.0);
        let n = NoiseSpec {
            amp_rel_sigma: 0.05,
            timing_rel_sigma: 0.02,
            offset_sigma: 0.01,
            seed: 7,
            ..Default::default()
        };
        let a = perturb(&s, &n);
        let b = perturb(&s, &n);
        assert_eq!(a.duration(), b.duration());
        for k in 0..=50 {
            let t = a.duration() * k as f64 / 50.0;
            assert_eq!(a.sample(t).unwrap(), b.sample(t).unwrap());
        }
        let c = perturb(&s, &NoiseSpec { seed: 8, ..n });
        assert_ne!(a.sample(1.0).unwrap(), c.sample(1.0).unwrap());
    }

    #[test]
    fn correlated_amplitude_noise_keeps_mixing_angles() {
        let s = trig(1.0, 5.0);
        for seed in 0..10 {
            let n = NoiseSpec { amp_rel_sigma: 0.1, amp_correlated: true, seed, ..Default::default() };
            let p = perturb(&s, &n);
            for k in 0..=40 {
                let t = 0.25 * k as f64;
                let a = s.mixing_angle_at(t).unwrap();
                let b = p.mixing_angle_at(t).unwrap();
                assert!((a - b).abs() < 1e-14, "seed {seed} t {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn timing_noise_stretches_the_window() {
        let s = trig(1.0, 5.0);
        let p = perturb(&s, &NoiseSpec { timing_rel_sigma: 0.1, seed: 3, ..Default::default() });
        assert_ne!(p.duration(), 10.0);
        assert_eq!(p.mixing_angle_at(p.duration()).unwrap(), 0.0);
        assert_eq!(p.mixing_angle_at(p.stage_boundary()).unwrap(), FRAC_PI_2);
    }

    #[test]
    fn noise_spec_validation() {
        assert!(NoiseSpec::default().validate().is_ok());
        assert!(NoiseSpec { offset_sigma: -1.0, ..Default::default() }.validate().is_err());
        assert!(NoiseSpec { scale: 0.0, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn trig_is_lipschitz(omega in 0.1f64..5.0, t_stage in 1.0f64..50.0, x in 0.0f64..1.0, dx in 1e-6f64..1e-2) {
            let s = trig(omega, t_stage);
            let t = x * (2.0 * t_stage - dx * t_stage);
            let d = dx * t_stage;
            let a = s.sample(t).unwrap().channels();
            let b = s.sample(t + d).unwrap().channels();
            let lip = std::f64::consts::PI * omega / (2.0 * t_stage);
            for i in 0..3 {
                prop_assert!((a[i] - b[i]).norm() <= lip * d * (1.0 + 1e-9) + 1e-15);
            }
        }

        #[test]
        fn global_scale_keeps_mixing_angles(scale in 0.5f64..2.0, x in 0.0f64..1.0) {
            let s = trig(1.0, 10.0);
            let p = perturb(&s, &NoiseSpec { scale, ..Default::default() });
            let t = 20.0 * x;
            prop_assert!((s.mixing_angle_at(t).unwrap() - p.mixing_angle_at(t).unwrap()).abs() < 1e-14);
        }
    }
}
