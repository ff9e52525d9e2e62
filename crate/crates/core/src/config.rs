//! Run configuration: a flat TOML key-value file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gate::SweepGrid;
use crate::propagator::IntegratorConfig;
use crate::pulses::{NoiseSpec, ProfileKind, ProtocolSpec, SampledCouplings};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega_peak: f64,
    pub stage_duration: f64,
    /// Defaults to `omega_peak`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2_hold: Option<f64>,
    pub profile: ProfileKind,
    /// CSV of sampled couplings, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_path: Option<PathBuf>,
    pub steps_per_stage: usize,
    pub renormalize: bool,
    pub record_stride: usize,
    pub amp_rel_sigma: f64,
    pub amp_correlated: bool,
    pub timing_rel_sigma: f64,
    pub offset_sigma: f64,
    pub scale: f64,
    pub seed: u64,
    pub sweep_trials: usize,
    /// Grid in `amp=..;timing=..;offset=..;scale=..` form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_grid: Option<String>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let integ = IntegratorConfig::default();
        RunConfig {
            omega_peak: 1.0,
            stage_duration: 200.0,
            lambda2_hold: None,
            profile: ProfileKind::Trig,
            samples_path: None,
            steps_per_stage: integ.steps_per_stage,
            renormalize: integ.renormalize_each_step,
            record_stride: integ.record_stride,
            amp_rel_sigma: 0.0,
            amp_correlated: false,
            timing_rel_sigma: 0.0,
            offset_sigma: 0.0,
            scale: 1.0,
            seed: 0,
            sweep_trials: 8,
            sweep_grid: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let table: toml::Table = s.parse().map_err(|e| Error::Config(format!("{e}")))?;
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }

    /// Reads `path` and applies `key=value` overrides in order. Values are
    /// parsed as TOML, falling back to a bare string.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
            table.insert(k.trim().to_string(), parse_value(v.trim()));
        }
        let mut cfg = Self::from_table(table)?;
        if let (Some(p), Some(dir)) = (&cfg.samples_path, path.and_then(Path::parent)) {
            if p.is_relative() {
                cfg.samples_path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.profile == ProfileKind::Sampled && self.samples_path.is_none() {
            return Err(Error::Config("profile = \"sampled\" needs samples_path".into()));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config(format!("seed must not exceed {}", i64::MAX)));
        }
        self.protocol_shape().validate()?;
        self.integrator().validate()?;
        self.noise().validate()?;
        if let Some(g) = &self.sweep_grid {
            g.parse::<SweepGrid>()?;
        }
        Ok(())
    }

    fn protocol_shape(&self) -> ProtocolSpec {
        ProtocolSpec {
            omega_peak: self.omega_peak,
            stage_duration: self.stage_duration,
            profile: if self.profile == ProfileKind::Sampled { ProfileKind::Trig } else { self.profile },
            lambda2_hold: self.lambda2_hold.unwrap_or(self.omega_peak),
            samples: None,
        }
    }

    /// Builds the protocol, loading sampled couplings if needed.
    pub fn protocol(&self) -> Result<ProtocolSpec> {
        let mut spec = self.protocol_shape();
        if self.profile == ProfileKind::Sampled {
            let path = self.samples_path.as_deref().expect("validated");
            spec.profile = ProfileKind::Sampled;
            spec.samples = Some(Arc::new(SampledCouplings::from_path(path)?));
            spec.validate()?;
        }
        Ok(spec)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            steps_per_stage: self.steps_per_stage,
            renormalize_each_step: self.renormalize,
            record_stride: self.record_stride,
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            amp_rel_sigma: self.amp_rel_sigma,
            amp_correlated: self.amp_correlated,
            timing_rel_sigma: self.timing_rel_sigma,
            offset_sigma: self.offset_sigma,
            scale: self.scale,
            seed: self.seed,
        }
    }

    /// The configured grid, or the single cell described by the noise keys.
    pub fn grid(&self) -> Result<SweepGrid> {
        match &self.sweep_grid {
            Some(g) => g.parse(),
            None => Ok(SweepGrid::single(&self.noise())),
        }
    }

    /// Hex SHA-256 of the canonical serialisation without `out_dir`,
    /// truncated to 16 digits.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { out_dir: PathBuf::new(), ..self.clone() };
        let digest = Sha256::digest(canonical.to_toml_string().as_bytes());
        hex::encode(&digest[..8])
    }
}

fn parse_value(v: &str) -> toml::Value {
    format!("x = {v}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("x"))
        .unwrap_or_else(|| toml::Value::String(v.to_string()))
}
