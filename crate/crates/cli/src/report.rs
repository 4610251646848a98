use etaqfi_core::geometry::FdScheme;
use etaqfi_core::pseudoherm::{hermitian_counterpart, GaugeTag, MetricBundle};
use etaqfi_core::qfi::{Flag, ProbeFrame, QfiSample};
use etaqfi_core::Operator;
use serde::{Deserialize, Serialize};

use crate::config::{Job, JobConfig, SqfiMode, FD_STEP_ENV};
use crate::sweep::{Exclusion, Row, Snap, SweepOutput};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub gauge: GaugeTag,
    pub fd: FdScheme,
    pub frame: ProbeFrame,
    pub sqfi_mode: SqfiMode,
    /// Value of the step override variable, when it was set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step_env: Option<String>,
}

impl Provenance {
    pub fn of(job: &Job) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            gauge: job.config.gauge,
            fd: job.scheme,
            frame: job.config.frame,
            sqfi_mode: job.config.sqfi_mode,
            fd_step_env: std::env::var(FD_STEP_ENV).ok(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub points: usize,
    pub failed: usize,
    pub flagged: usize,
    pub max_cqfi: Option<f64>,
    pub argmax_theta: Option<f64>,
    /// Largest |sqfi − cqfi| over rows not marked NearEP.
    pub duality_max_deviation: Option<f64>,
    /// Rows with a θ-independent metric basis where cqfi exceeds the bound.
    pub bound_violations: usize,
}

pub fn bound_violated(s: &QfiSample) -> bool {
    let fixed_basis = s
        .term_metric_rotation
        .is_some_and(|r| r.abs() <= 1e-12 * s.sqfi.max(1.0));
    match s.bound {
        Some(b) if fixed_basis && !s.flags.contains(&Flag::NearEp) => s.cqfi > b * (1.0 + 1e-6) + 1e-9,
        _ => false,
    }
}

impl Summary {
    pub fn of(rows: &[Row]) -> Self {
        let samples: Vec<&QfiSample> = rows.iter().filter_map(|r| r.sample.as_ref()).collect();
        let best = samples
            .iter()
            .filter(|s| s.cqfi.is_finite())
            .max_by(|a, b| a.cqfi.total_cmp(&b.cqfi));
        let duality = samples
            .iter()
            .filter(|s| !s.flags.contains(&Flag::NearEp))
            .map(|s| s.duality_deviation())
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
        Self {
            points: rows.len(),
            failed: rows.len() - samples.len(),
            flagged: samples.iter().filter(|s| s.is_flagged()).count(),
            max_cqfi: best.map(|s| s.cqfi),
            argmax_theta: best.map(|s| s.theta),
            duality_max_deviation: duality,
            bound_violations: samples.iter().filter(|s| bound_violated(s)).count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub requested_points: usize,
    pub snapped: Vec<Snap>,
    pub exclusions: Vec<Exclusion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// The job as run, with every default filled in.
    pub spec: JobConfig,
    pub grid: GridRecord,
    pub rows: Vec<Row>,
    pub summary: Summary,
    pub provenance: Provenance,
}

impl Report {
    pub fn from_sweep(job: &Job, out: &SweepOutput) -> Self {
        Self {
            spec: job.config.clone(),
            grid: GridRecord {
                requested_points: out.grid.points,
                snapped: out.snapped.snapped.clone(),
                exclusions: out.snapped.exclusions.clone(),
            },
            rows: out.rows.clone(),
            summary: Summary::of(&out.rows),
            provenance: Provenance::of(job),
        }
    }
}

/// Matrix as rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_json(op: &Operator) -> MatrixJson {
    let n = op.dim();
    (0..n)
        .map(|i| (0..n).map(|j| [op[(i, j)].re, op[(i, j)].im]).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDiagnostics {
    pub gauge: GaugeTag,
    pub eta: MatrixJson,
    pub lambda: Vec<f64>,
    pub basis: MatrixJson,
    pub s: MatrixJson,
    pub condition: f64,
    pub pseudo_hermiticity_residual: Option<f64>,
    pub congruence_factor: Option<f64>,
    pub counterpart: MatrixJson,
    pub counterpart_hermiticity_residual: f64,
}

impl MetricDiagnostics {
    pub fn new(bundle: &MetricBundle, h: &Operator) -> etaqfi_core::Result<Self> {
        let cp = hermitian_counterpart(h, &bundle.s)?;
        Ok(Self {
            gauge: bundle.gauge,
            eta: matrix_json(&bundle.eta),
            lambda: bundle.lambda.clone(),
            basis: matrix_json(&bundle.basis),
            s: matrix_json(&bundle.s),
            condition: bundle.condition(),
            pseudo_hermiticity_residual: bundle.residual_ph,
            congruence_factor: bundle.congruence_factor,
            counterpart: matrix_json(&cp.hamiltonian),
            counterpart_hermiticity_residual: cp.hermiticity_residual,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub spec: JobConfig,
    pub sample: QfiSample,
    pub metric: MetricDiagnostics,
    pub provenance: Provenance,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn sample(theta: f64, sqfi: f64, cqfi: f64, bound: f64, rot: f64) -> QfiSample {
        QfiSample {
            theta,
            time: 1.0,
            sqfi,
            sqfi_flat: sqfi,
            cqfi,
            bound: Some(bound),
            term_metric_rotation: Some(rot),
            term_cross: Some(0.0),
            k_diag: Some(0.0),
            flags: BTreeSet::new(),
            closure_residual: Some(0.0),
            metric_condition: 1.0,
            generator_asymmetry: Some(0.0),
        }
    }

    #[test]
    fn summary_counts() {
        let mut near = sample(0.3, 1.0, 50.0, 1.0, 0.0);
        near.flags.insert(Flag::NearEp);
        let rows = vec![
            Row { theta: 0.0, sample: Some(sample(0.0, 2.0, 2.0 + 1e-8, 3.0, 0.0)), error: None },
            Row { theta: 0.1, sample: Some(sample(0.1, 4.0, 5.0, 4.0, 0.0)), error: None },
            Row { theta: 0.2, sample: Some(sample(0.2, 4.0, 6.0, 1.0, 0.5)), error: None },
            Row { theta: 0.3, sample: Some(near), error: None },
            Row { theta: 0.4, sample: None, error: Some("x".into()) },
        ];
        let s = Summary::of(&rows);
        assert_eq!(s.points, 5);
        assert_eq!(s.failed, 1);
        assert_eq!(s.flagged, 1);
        assert_eq!(s.max_cqfi, Some(50.0));
        assert_eq!(s.argmax_theta, Some(0.3));
        assert_eq!(s.duality_max_deviation, Some(2.0));
        // the rotating-basis row and the NearEP row are exempt
        assert_eq!(s.bound_violations, 1);
    }

    #[test]
    fn matrices_are_row_major_pairs() {
        let op = Operator::from_real([[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(matrix_json(&op)[1][0], [3.0, 0.0]);
    }
}
