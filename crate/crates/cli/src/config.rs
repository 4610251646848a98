//! JSON job description and its validation.
//!
//! Complex numbers are two-element arrays `[re, im]`. A job either names a
//! single `theta` (for `analyze`) or a grid through `theta_min`, `theta_max`
//! and `theta_points` (for `sweep`).

use std::path::PathBuf;

use etaqfi_core::geometry::FdScheme;
use etaqfi_core::models::{Coupling, NonreciprocalModel, PolynomialModel, PtModel, RotatingMetricModel};
use etaqfi_core::pseudoherm::GaugeTag;
use etaqfi_core::qfi::ProbeFrame;
use etaqfi_core::system::ParameterizedSystem;
use etaqfi_core::Operator;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Environment variable overriding the default finite-difference step.
pub const FD_STEP_ENV: &str = "ETAQFI_FD_STEP";

#[derive(Debug, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

type Cx = [f64; 2];

fn cx(z: Cx) -> Complex64 {
    Complex64::new(z[0], z[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingSpec {
    Additive,
    Multiplicative,
    Raw { k1: f64, k2: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Nonreciprocal {
        #[serde(default)]
        omega: f64,
        delta: f64,
        coupling: CouplingSpec,
    },
    Pt {
        r: f64,
        phi: f64,
        s: f64,
    },
    /// H(θ) = Σ θⁿ·C_n, each C_n given row by row.
    Polynomial {
        coefficients: Vec<Vec<Vec<Cx>>>,
    },
    Rotating {
        lambda: [f64; 2],
        #[serde(default)]
        offset: f64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn ParameterizedSystem>, ConfigError> {
        let invalid = |e: etaqfi_core::Error| ConfigError::new("model", e.to_string());
        Ok(match self {
            ModelSpec::Nonreciprocal { omega, delta, coupling } => {
                let c = match coupling {
                    CouplingSpec::Additive => Coupling::Additive,
                    CouplingSpec::Multiplicative => Coupling::Multiplicative,
                    CouplingSpec::Raw { k1, k2 } => Coupling::Raw { k1: *k1, k2: *k2 },
                };
                Box::new(NonreciprocalModel::new(*omega, *delta, c).map_err(invalid)?)
            }
            ModelSpec::Pt { r, phi, s } => Box::new(PtModel::new(*r, *phi, *s).map_err(invalid)?),
            ModelSpec::Polynomial { coefficients } => {
                let mut ops = Vec::with_capacity(coefficients.len());
                for (n, rows) in coefficients.iter().enumerate() {
                    let rows: Vec<Vec<Complex64>> = rows.iter().map(|r| r.iter().copied().map(cx).collect()).collect();
                    let op = Operator::from_rows(&rows)
                        .map_err(|e| ConfigError::new(format!("model.coefficients[{n}]"), e.to_string()))?;
                    ops.push(op);
                }
                Box::new(PolynomialModel::new(ops).map_err(invalid)?)
            }
            ModelSpec::Rotating { lambda, offset } => {
                Box::new(RotatingMetricModel::new(*lambda, *offset).map_err(invalid)?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbeSpec {
    Named(String),
    Amplitudes(Vec<Cx>),
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec::Named("ground".into())
    }
}

impl ProbeSpec {
    pub fn resolve(&self, dim: usize) -> Result<Vec<Complex64>, ConfigError> {
        match self {
            ProbeSpec::Named(name) if name == "ground" => {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                v[0] = Complex64::new(1.0, 0.0);
                Ok(v)
            }
            ProbeSpec::Named(name) => Err(ConfigError::new(
                "probe",
                format!("unknown probe \"{name}\"; use \"ground\" or a list of [re, im] pairs"),
            )),
            ProbeSpec::Amplitudes(a) => {
                if a.len() != dim {
                    return Err(ConfigError::new(
                        "probe",
                        format!("has {} amplitudes but the model dimension is {dim}", a.len()),
                    ));
                }
                let v: Vec<Complex64> = a.iter().copied().map(cx).collect();
                if v.iter().all(|z| z.norm() == 0.0) || v.iter().any(|z| !z.is_finite()) {
                    return Err(ConfigError::new("probe", "must be finite and nonzero"));
                }
                Ok(v)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Spacing {
    #[default]
    Uniform,
    /// θ − anchor grows geometrically from θ_min − anchor to θ_max − anchor.
    Geometric { anchor: f64 },
}

/// Which SQFI goes into the CSV `sqfi` column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqfiMode {
    /// Flat SQFI of the mapped state S·ψ.
    #[default]
    Hermitian,
    /// Flat SQFI of the flat-normalized pseudo-Hermitian state.
    Flat,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub richardson: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

fn default_gauge() -> GaugeTag {
    GaugeTag::ClosedForm
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
    pub time: f64,
    #[serde(default)]
    pub probe: ProbeSpec,
    #[serde(default)]
    pub fd: FdSpec,
    #[serde(default = "default_gauge")]
    pub gauge: GaugeTag,
    #[serde(default)]
    pub frame: ProbeFrame,
    #[serde(default)]
    pub sqfi_mode: SqfiMode,
    #[serde(default)]
    pub outputs: Outputs,
}

/// A validated grid request.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

/// A validated job ready to run.
pub struct Job {
    pub config: JobConfig,
    pub system: Box<dyn ParameterizedSystem>,
    pub probe: Vec<Complex64>,
    pub scheme: FdScheme,
}

impl std::fmt::Debug for Job {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Job")
            .field("config", &self.config)
            .field("model", &self.system.name())
            .field("scheme", &self.scheme)
            .finish()
    }
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fills unset finite-difference fields, taking the default step from
    /// [`FD_STEP_ENV`] when it is set.
    pub fn resolve_fd(&mut self) -> Result<FdScheme, ConfigError> {
        let default = FdScheme::default();
        let step = match self.fd.step {
            Some(s) => s,
            None => match std::env::var(FD_STEP_ENV) {
                Ok(raw) => raw
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| ConfigError::new(FD_STEP_ENV, format!("not a number: {raw:?}")))?,
                Err(_) => default.step,
            },
        };
        let scheme = FdScheme {
            order: self.fd.order.unwrap_or(default.order),
            step,
            richardson: self.fd.richardson.unwrap_or(default.richardson),
        };
        scheme.validate().map_err(|e| ConfigError::new("fd", e.to_string()))?;
        self.fd = FdSpec {
            order: Some(scheme.order),
            step: Some(scheme.step),
            richardson: Some(scheme.richardson),
        };
        Ok(scheme)
    }

    pub fn grid(&self) -> Result<GridSpec, ConfigError> {
        let min = self
            .theta_min
            .ok_or_else(|| ConfigError::new("theta_min", "required for a sweep"))?;
        let max = self
            .theta_max
            .ok_or_else(|| ConfigError::new("theta_max", "required for a sweep"))?;
        let points = self
            .theta_points
            .ok_or_else(|| ConfigError::new("theta_points", "required for a sweep"))?;
        if !(min.is_finite() && max.is_finite()) || min >= max {
            return Err(ConfigError::new("theta_min", "must be finite and below theta_max"));
        }
        if points < 2 {
            return Err(ConfigError::new("theta_points", "at least 2 points are required"));
        }
        if let Spacing::Geometric { anchor } = self.spacing {
            if !(anchor < min) {
                return Err(ConfigError::new("spacing.geometric.anchor", "must lie below theta_min"));
            }
        }
        Ok(GridSpec {
            min,
            max,
            points,
            spacing: self.spacing,
        })
    }

    /// Validates everything except the θ selection and builds the job.
    pub fn into_job(mut self) -> Result<Job, ConfigError> {
        if !self.time.is_finite() {
            return Err(ConfigError::new("time", "must be finite"));
        }
        if let Some(th) = self.theta {
            if !th.is_finite() {
                return Err(ConfigError::new("theta", "must be finite"));
            }
        }
        let scheme = self.resolve_fd()?;
        let system = self.model.build()?;
        let probe = self.probe.resolve(system.dim())?;
        if self.gauge == GaugeTag::ClosedForm && !system.has_closed_form() {
            return Err(ConfigError::new(
                "gauge",
                format!("model \"{}\" has no closed-form metric; use entry11 or raw", system.name()),
            ));
        }
        Ok(Job {
            config: self,
            system,
            probe,
            scheme,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"type": "nonreciprocal", "delta": 0.5, "coupling": "additive"},
        "theta": 0.0,
        "time": 3.141592653589793
    }"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = JobConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.gauge, GaugeTag::ClosedForm);
        assert_eq!(cfg.probe, ProbeSpec::Named("ground".into()));
        assert_eq!(cfg.frame, ProbeFrame::PseudoHermitian);
        let job = cfg.into_job().unwrap();
        assert_eq!(job.probe.len(), 2);
        assert_eq!(job.system.name(), "nonreciprocal");
    }

    #[test]
    fn complex_pairs_parse() {
        let text = r#"{
            "model": {"type": "polynomial", "coefficients": [[[[0,0],[1,0]],[[1,0],[0,0]]]]},
            "theta": 0.1, "time": 1.0, "gauge": "entry11",
            "probe": [[0.6, 0.0], [0.0, 0.8]]
        }"#;
        let job = JobConfig::from_json(text).unwrap().into_job().unwrap();
        assert_eq!(job.probe[1], Complex64::new(0.0, 0.8));
    }

    #[test]
    fn field_level_errors() {
        let bad_probe = MINIMAL.replace("\"time\"", "\"probe\": [[1,0]], \"time\"");
        let err = JobConfig::from_json(&bad_probe).unwrap().into_job().unwrap_err();
        assert_eq!(err.field, "probe");

        let no_cf = r#"{"model": {"type": "polynomial", "coefficients": [[[[1,0]]]]}, "theta": 0, "time": 1}"#;
        let err = JobConfig::from_json(no_cf).unwrap().into_job().unwrap_err();
        assert_eq!(err.field, "gauge");

        let unknown = MINIMAL.replace("\"time\"", "\"tme\": 1, \"time\"");
        assert!(JobConfig::from_json(&unknown).is_err());

        let bad_delta = MINIMAL.replace("0.5", "1.0");
        assert_eq!(JobConfig::from_json(&bad_delta).unwrap().into_job().unwrap_err().field, "model");
    }

    #[test]
    fn grid_validation() {
        let mut cfg = JobConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.grid().unwrap_err().field, "theta_min");
        cfg.theta_min = Some(1.0);
        cfg.theta_max = Some(0.0);
        cfg.theta_points = Some(10);
        assert!(cfg.grid().is_err());
        cfg.theta_max = Some(2.0);
        cfg.theta_points = Some(1);
        assert_eq!(cfg.grid().unwrap_err().field, "theta_points");
        cfg.theta_points = Some(3);
        cfg.spacing = Spacing::Geometric { anchor: 1.5 };
        assert!(cfg.grid().is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = JobConfig::from_json(MINIMAL).unwrap();
        cfg.fd.step = Some(2e-6);
        cfg.resolve_fd().unwrap();
        let again = JobConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.fd.order, Some(2));
    }
}
