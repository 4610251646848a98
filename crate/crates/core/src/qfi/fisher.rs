use crate::densela::{eig_hermitian, vector};
use crate::error::{Error, Result};
use crate::geometry::{covariant_derivative, d_theta_fd, FdScheme, OperatorCurve, ParamCurve, StateCurve};
use crate::pseudoherm::{GaugeTag, MetricBundle};

use super::project_perp;

/// Metric condition numbers above this mark a sample as near an EP.
pub const NEAR_EP_CONDITION: f64 = 1e10;

/// SQFI 4‖(∂_θψ)_⊥‖², renormalizing the curve at every stencil point.
pub fn sqfi(psi_curve: &StateCurve<'_>, theta: f64, scheme: &FdScheme) -> Result<f64> {
    let normalized = ParamCurve::new(|th| {
        let p = psi_curve.eval(th)?;
        let n = vector::norm(&p);
        if !(n > 0.0) {
            return Err(Error::NotNormalized(n));
        }
        Ok(vector::scale_real(&p, 1.0 / n))
    });
    sqfi_raw(&normalized, theta, scheme)
}

/// SQFI of a curve already flat-normalized at every stencil point.
pub fn sqfi_raw(psi_curve: &StateCurve<'_>, theta: f64, scheme: &FdScheme) -> Result<f64> {
    let psi = psi_curve.eval(theta)?;
    let d = d_theta_fd(psi_curve, theta, scheme)?;
    Ok(4.0 * vector::norm_sqr(&project_perp(&d, &psi, None)))
}

/// ψ rescaled to unit η-norm at each θ.
pub(crate) fn eta_normalized<'a>(psi_curve: &'a StateCurve<'_>, eta_curve: &'a OperatorCurve<'_>) -> StateCurve<'a> {
    ParamCurve::new(move |th| {
        let p = psi_curve.eval(th)?;
        let e = eta_curve.eval(th)?;
        let n = vector::eta_norm_sqr(&p, &e);
        if !(n > 0.0) {
            return Err(Error::NotPositiveDefinite(n));
        }
        Ok(vector::scale_real(&p, 1.0 / n.sqrt()))
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CqfiValue {
    pub value: f64,
    /// Λ_max / Λ_min of η at θ.
    pub metric_condition: f64,
    pub near_ep: bool,
}

/// CQFI 4‖(D_θψ)_⊥‖²_η.
///
/// ψ must be η-normalized at θ; the curve is renormalized at the other
/// stencil points.
pub fn cqfi(
    psi_curve: &StateCurve<'_>,
    eta_curve: &OperatorCurve<'_>,
    theta: f64,
    scheme: &FdScheme,
) -> Result<CqfiValue> {
    let eta = eta_curve.eval(theta)?;
    let e = eig_hermitian(&eta)?;
    let lmin = *e.values.last().expect("non-empty");
    if lmin <= 0.0 {
        return Err(Error::NotPositiveDefinite(lmin));
    }
    let metric_condition = e.values[0] / lmin;
    let n2 = vector::eta_norm_sqr(&psi_curve.eval(theta)?, &eta);
    if (n2 - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(n2));
    }
    let normalized = eta_normalized(psi_curve, eta_curve);
    let cov = covariant_derivative(&normalized, eta_curve, theta, scheme)?;
    let perp = project_perp(&cov.value, &cov.psi, Some(&cov.connection.eta));
    Ok(CqfiValue {
        value: 4.0 * vector::eta_norm_sqr(&perp, &cov.connection.eta),
        metric_condition,
        near_ep: metric_condition > NEAR_EP_CONDITION,
    })
}

/// SQFI of the mapped curve S(θ)·ψ(θ), with S factored from η(θ) at every
/// stencil point.
pub fn hermitian_side_sqfi(
    psi_curve: &StateCurve<'_>,
    eta_curve: &OperatorCurve<'_>,
    theta: f64,
    scheme: &FdScheme,
) -> Result<f64> {
    let mapped = ParamCurve::new(|th| {
        let eta = eta_curve.eval(th)?;
        let p = psi_curve.eval(th)?;
        let s = MetricBundle::from_eta(eta, None, GaugeTag::Raw)?.s;
        Ok(s.matvec(&p))
    });
    sqfi(&mapped, theta, scheme)
}
