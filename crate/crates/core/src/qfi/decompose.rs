use num_complex::Complex64;

use crate::densela::{vector, Operator};
use crate::error::Result;
use crate::geometry::{covariant_derivative, FdScheme, OperatorCurve, StateCurve, TrackedBasis};

use super::fisher::{eta_normalized, hermitian_side_sqfi};
use super::project_perp;

/// A = ½U∂_θU† + ½η⁻¹U∂_θU†η
pub fn operator_a(eta: &Operator, u: &Operator, du: &Operator) -> Result<Operator> {
    let rot = u.matmul(&du.adjoint());
    let twisted = eta.solve(&rot.matmul(eta))?;
    Ok((&rot + &twisted).scale_real(0.5))
}

#[derive(Clone, Debug)]
pub struct IdentityCheck {
    /// ‖(∂_θ Sψ)_⊥‖² along the mapped curve
    pub lhs: f64,
    /// ‖(Aψ)_⊥ + (D_θψ)_⊥‖²_η
    pub rhs: f64,
    pub residual: f64,
}

/// Terms of F^H = F_c + 4‖(Aψ)_⊥‖²_η + 8Re⟨(Aψ)_⊥|(D_θψ)_⊥⟩_η, with F^H
/// evaluated separately on the mapped curve.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub sqfi: f64,
    pub cqfi: f64,
    pub term_metric_rotation: f64,
    pub term_cross: f64,
    pub closure_residual: f64,
    pub psi: Vec<Complex64>,
    pub eta: Operator,
    pub a: Operator,
    /// (D_θψ)_⊥
    pub d_perp: Vec<Complex64>,
    /// (Aψ)_⊥
    pub a_perp: Vec<Complex64>,
}

impl Decomposition {
    pub fn identity_check(&self) -> IdentityCheck {
        let lhs = self.sqfi / 4.0;
        let rhs = vector::eta_norm_sqr(&vector::add(&self.a_perp, &self.d_perp), &self.eta);
        IdentityCheck {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
        }
    }
}

/// Evaluates both sides of the decomposition. The left side maps ψ through
/// S(θ′) and uses the flat SQFI; the right side uses the connection and the
/// tracked eigenbasis.
pub fn decompose_fh(
    psi_curve: &StateCurve<'_>,
    eta_curve: &OperatorCurve<'_>,
    tracked: &TrackedBasis,
    theta: f64,
    scheme: &FdScheme,
) -> Result<Decomposition> {
    let normalized = eta_normalized(psi_curve, eta_curve);
    let cov = covariant_derivative(&normalized, eta_curve, theta, scheme)?;
    let eta = cov.connection.eta.clone();
    let (u, du) = tracked.at(theta)?;
    let a = operator_a(&eta, u, du)?;
    let d_perp = project_perp(&cov.value, &cov.psi, Some(&eta));
    let a_perp = project_perp(&a.matvec(&cov.psi), &cov.psi, Some(&eta));

    let cqfi = 4.0 * vector::eta_norm_sqr(&d_perp, &eta);
    let term_metric_rotation = 4.0 * vector::eta_norm_sqr(&a_perp, &eta);
    let term_cross = 8.0 * vector::eta_inner(&a_perp, &eta, &d_perp).re;
    let sqfi = hermitian_side_sqfi(&normalized, eta_curve, theta, scheme)?;
    Ok(Decomposition {
        sqfi,
        cqfi,
        term_metric_rotation,
        term_cross,
        closure_residual: (sqfi - (cqfi + term_metric_rotation + term_cross)).abs(),
        psi: cov.psi,
        eta,
        a,
        d_perp,
        a_perp,
    })
}

/// |‖(∂_θ Sψ)_⊥‖² − ‖(Aψ)_⊥ + (D_θψ)_⊥‖²_η|
pub fn identity_residual(
    psi_curve: &StateCurve<'_>,
    eta_curve: &OperatorCurve<'_>,
    tracked: &TrackedBasis,
    theta: f64,
    scheme: &FdScheme,
) -> Result<IdentityCheck> {
    Ok(decompose_fh(psi_curve, eta_curve, tracked, theta, scheme)?.identity_check())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Antiparallel {
    /// (Aψ)_⊥ = −k·(D_θψ)_⊥
    pub k: f64,
    /// |F_c − F^H/(1−k)²| / F_c, checked for 0 < k < 1.
    pub relation_residual: Option<f64>,
}

/// Collinearity test of (Aψ)_⊥ against −(D_θψ)_⊥ in the η product.
pub fn antiparallel(decomp: &Decomposition) -> Option<Antiparallel> {
    let eta = &decomp.eta;
    let a_norm = vector::eta_norm_sqr(&decomp.a_perp, eta).sqrt();
    let d_norm2 = vector::eta_norm_sqr(&decomp.d_perp, eta);
    if a_norm <= 1e-12 * d_norm2.sqrt().max(1.0) {
        return Some(Antiparallel {
            k: 0.0,
            relation_residual: None,
        });
    }
    if d_norm2 <= f64::MIN_POSITIVE {
        return None;
    }
    let k = -vector::eta_inner(&decomp.d_perp, eta, &decomp.a_perp) / d_norm2;
    let miss = vector::axpy(&decomp.a_perp, k, &decomp.d_perp);
    if vector::eta_norm_sqr(&miss, eta).sqrt() > 1e-6 * a_norm || k.im.abs() > 1e-6 * k.norm() {
        return None;
    }
    let k = k.re;
    let relation_residual = (k > 0.0 && k < 1.0).then(|| {
        let predicted = decomp.sqfi / ((1.0 - k) * (1.0 - k));
        (decomp.cqfi - predicted).abs() / decomp.cqfi
    });
    Some(Antiparallel { k, relation_residual })
}

pub fn antiparallel_diagnostic(
    psi_curve: &StateCurve<'_>,
    eta_curve: &OperatorCurve<'_>,
    tracked: &TrackedBasis,
    theta: f64,
    scheme: &FdScheme,
) -> Result<Option<Antiparallel>> {
    Ok(antiparallel(&decompose_fh(psi_curve, eta_curve, tracked, theta, scheme)?))
}
