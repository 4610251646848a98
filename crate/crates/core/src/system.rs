//! The interface every θ-parameterized Hamiltonian family implements.

use crate::densela::Operator;
use crate::error::{Error, Result};
use crate::pseudoherm::{biorthogonal_system, metric_from_biorthogonal, GaugeTag, MetricBundle, MetricGauge};

/// Known exact data of a model at one θ.
#[derive(Clone, Debug)]
pub struct ClosedForm {
    pub hamiltonian: Operator,
    pub eta: Operator,
    /// Eigenvalues of η, descending.
    pub lambda: Vec<f64>,
    /// Eigenvectors of η matching `lambda`.
    pub basis: Operator,
    pub s: Operator,
    pub counterpart: Operator,
}

pub trait ParameterizedSystem: Send + Sync {
    fn dim(&self) -> usize;

    fn hamiltonian(&self, theta: f64) -> Result<Operator>;

    fn hamiltonian_derivative(&self, _theta: f64) -> Option<Result<Operator>> {
        None
    }

    /// Whether [`closed_form`](Self::closed_form) and the analytic metric and
    /// counterpart derivatives are provided.
    fn has_closed_form(&self) -> bool {
        false
    }

    fn closed_form(&self, _theta: f64) -> Option<Result<ClosedForm>> {
        None
    }

    fn closed_form_metric_derivative(&self, _theta: f64) -> Option<Result<Operator>> {
        None
    }

    /// ∂_θ of the closed-form Hermitian counterpart.
    fn counterpart_derivative(&self, _theta: f64) -> Option<Result<Operator>> {
        None
    }

    /// θ values where the family is known to be defective.
    fn exceptional_points(&self) -> Vec<f64> {
        Vec::new()
    }

    fn name(&self) -> &'static str;
}

/// Relative non-Hermiticity below which a Hamiltonian gets η = I exactly.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-14;

/// Metric of the system at θ under the requested gauge.
///
/// Hermitian Hamiltonians get η = I in the generic gauges; the eigenbasis of
/// a rounding-perturbed identity would otherwise be arbitrary.
///
/// The closed-form gauge keeps the model's η verbatim and, when the generic
/// biorthogonal construction also succeeds, records the trace ratio between
/// the two.
pub fn system_metric(system: &dyn ParameterizedSystem, theta: f64, gauge: GaugeTag) -> Result<MetricBundle> {
    match gauge {
        GaugeTag::ClosedForm => {
            let cf = system
                .closed_form(theta)
                .ok_or_else(|| Error::GaugeUnavailable(system.name().to_string()))??;
            match biorthogonal_system(&cf.hamiltonian) {
                Ok(b) => metric_from_biorthogonal(&b, &MetricGauge::ClosedForm(cf.eta)),
                Err(_) => MetricBundle::from_eta(cf.eta, Some(&cf.hamiltonian), GaugeTag::ClosedForm),
            }
        }
        GaugeTag::Entry11 | GaugeTag::Raw => {
            let h = system.hamiltonian(theta)?;
            if h.hermiticity_residual() <= HERMITIAN_INPUT_TOL * h.fro_norm() {
                return MetricBundle::from_eta(Operator::identity(h.dim()), Some(&h), gauge);
            }
            let b = biorthogonal_system(&h)?;
            let g = if gauge == GaugeTag::Raw {
                MetricGauge::Raw
            } else {
                MetricGauge::Entry11
            };
            metric_from_biorthogonal(&b, &g)
        }
    }
}
