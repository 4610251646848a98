use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::densela::{vector, Operator};
use crate::error::{Error, Result};
use crate::geometry::{FdScheme, OperatorCurve, ParamCurve, StateCurve, TrackedBasis};
use crate::pseudoherm::{hermitian_counterpart, GaugeTag, MetricBundle};
use crate::system::{system_metric, ParameterizedSystem};

use super::{antiparallel, cqfi, decompose_fh, evolve, hermitian_side_sqfi, qfi_bound, sqfi, Flag, QfiSample};

/// Which side of the similarity map holds the probe fixed in θ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeFrame {
    /// ψ(0) is the given vector for every θ, η(θ)-normalized.
    #[default]
    PseudoHermitian,
    /// S(θ)·ψ(0) is the given vector for every θ.
    Hermitian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointOptions {
    pub scheme: FdScheme,
    pub gauge: GaugeTag,
    pub frame: ProbeFrame,
}

impl Default for PointOptions {
    fn default() -> Self {
        Self {
            scheme: FdScheme::default(),
            gauge: GaugeTag::ClosedForm,
            frame: ProbeFrame::PseudoHermitian,
        }
    }
}

/// The θ-curves of one evolved probe.
pub struct SystemCurves<'s> {
    system: &'s dyn ParameterizedSystem,
    time: f64,
    probe: Vec<Complex64>,
    gauge: GaugeTag,
    frame: ProbeFrame,
}

impl<'s> SystemCurves<'s> {
    pub fn new(
        system: &'s dyn ParameterizedSystem,
        time: f64,
        probe: Vec<Complex64>,
        gauge: GaugeTag,
        frame: ProbeFrame,
    ) -> Result<Self> {
        if probe.len() != system.dim() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                found: probe.len(),
            });
        }
        Ok(Self {
            system,
            time,
            probe,
            gauge,
            frame,
        })
    }

    pub fn metric(&self, theta: f64) -> Result<MetricBundle> {
        system_metric(self.system, theta, self.gauge)
    }

    /// η(θ), with the model's analytic derivative in the closed-form gauge.
    pub fn eta_curve(&self) -> OperatorCurve<'_> {
        let curve = ParamCurve::new(move |th| Ok(self.metric(th)?.eta));
        if self.gauge == GaugeTag::ClosedForm && self.system.has_closed_form() {
            curve.with_derivative(move |th| {
                self.system
                    .closed_form_metric_derivative(th)
                    .ok_or_else(|| Error::GaugeUnavailable(self.system.name().into()))?
            })
        } else {
            curve
        }
    }

    fn evolved(&self, theta: f64, bundle: Option<&MetricBundle>) -> Result<Vec<Complex64>> {
        let h = self.system.hamiltonian(theta)?;
        let initial = match (self.frame, bundle) {
            (ProbeFrame::Hermitian, Some(b)) => b.s.solve_vec(&self.probe)?,
            (ProbeFrame::Hermitian, None) => self.metric(theta)?.s.solve_vec(&self.probe)?,
            (ProbeFrame::PseudoHermitian, _) => self.probe.clone(),
        };
        evolve(&h, &initial, self.time)
    }

    /// exp(−iH(θ)t)·ψ(0), η(θ)-normalized.
    pub fn state(&self, theta: f64) -> Result<Vec<Complex64>> {
        let bundle = self.metric(theta)?;
        let v = self.evolved(theta, Some(&bundle))?;
        Ok(vector::normalized(&v, Some(&bundle.eta)))
    }

    pub fn psi_curve(&self) -> StateCurve<'_> {
        ParamCurve::new(move |th| self.state(th))
    }

    /// The same evolution, flat-normalized.
    pub fn flat_psi_curve(&self) -> StateCurve<'_> {
        ParamCurve::new(move |th| Ok(vector::normalized(&self.evolved(th, None)?, None)))
    }

    /// S(θ)·ψ(θ)
    pub fn mapped_curve(&self) -> StateCurve<'_> {
        ParamCurve::new(move |th| {
            let bundle = self.metric(th)?;
            let v = self.evolved(th, Some(&bundle))?;
            Ok(bundle.s.matvec(&vector::normalized(&v, Some(&bundle.eta))))
        })
    }

    /// H^H(θ) = S·H·S⁻¹, with the analytic derivative in the closed-form gauge.
    pub fn counterpart_curve(&self) -> OperatorCurve<'_> {
        let curve = ParamCurve::new(move |th| {
            let bundle = self.metric(th)?;
            let h = self.system.hamiltonian(th)?;
            Ok(hermitian_counterpart(&h, &bundle.s)?.hamiltonian)
        });
        if self.gauge == GaugeTag::ClosedForm && self.system.has_closed_form() {
            curve.with_derivative(move |th| {
                self.system
                    .counterpart_derivative(th)
                    .ok_or_else(|| Error::GaugeUnavailable(self.system.name().into()))?
            })
        } else {
            curve
        }
    }

    pub fn hamiltonian(&self, theta: f64) -> Result<Operator> {
        self.system.hamiltonian(theta)
    }
}

/// Evaluates every quantity of one sample.
///
/// Loss of eigenbasis tracking is reported as a flag and leaves the
/// decomposition terms empty; any other error fails the point.
pub fn analyze_point(
    system: &dyn ParameterizedSystem,
    theta: f64,
    time: f64,
    probe: &[Complex64],
    opts: &PointOptions,
) -> Result<QfiSample> {
    let scheme = &opts.scheme;
    scheme.validate()?;
    let curves = SystemCurves::new(system, time, probe.to_vec(), opts.gauge, opts.frame)?;
    let eta_curve = curves.eta_curve();
    let psi_curve = curves.psi_curve();
    let mut flags = BTreeSet::new();

    let c = cqfi(&psi_curve, &eta_curve, theta, scheme)?;
    if c.near_ep {
        flags.insert(Flag::NearEp);
    }

    let (sqfi_h, cqfi_v, terms, k_diag, closure) = match TrackedBasis::around(&eta_curve, theta, scheme) {
        Ok(tracked) => {
            let d = decompose_fh(&psi_curve, &eta_curve, &tracked, theta, scheme)?;
            let k = antiparallel(&d).map(|a| a.k);
            (
                d.sqfi,
                d.cqfi,
                Some((d.term_metric_rotation, d.term_cross)),
                k,
                Some(d.closure_residual),
            )
        }
        Err(Error::TrackingLost(_)) => {
            flags.insert(Flag::TrackingDegenerate);
            let s = hermitian_side_sqfi(&psi_curve, &eta_curve, theta, scheme)?;
            (s, c.value, None, None, None)
        }
        Err(e) => return Err(e),
    };

    let sqfi_flat = sqfi(&curves.flat_psi_curve(), theta, scheme)?;
    let bound = qfi_bound(&curves.counterpart_curve(), theta, time, scheme)?;
    if bound.generator.small_t {
        flags.insert(Flag::BoundSmallT);
    }

    Ok(QfiSample {
        theta,
        time,
        sqfi: sqfi_h,
        sqfi_flat,
        cqfi: cqfi_v,
        bound: Some(bound.value),
        term_metric_rotation: terms.map(|t| t.0),
        term_cross: terms.map(|t| t.1),
        k_diag,
        flags,
        closure_residual: closure,
        metric_condition: c.metric_condition,
        generator_asymmetry: Some(bound.generator.asymmetry),
    })
}
