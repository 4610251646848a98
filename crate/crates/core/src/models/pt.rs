use num_complex::Complex64;

use crate::densela::{pauli, Operator};
use crate::error::{Error, Result};
use crate::system::{ClosedForm, ParameterizedSystem};

/// H = [[r e^{iφ}, s], [s, r e^{−iφ}]] with the symmetric coupling shifted
/// as s → s + θ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PtModel {
    pub r: f64,
    pub phi: f64,
    pub s: f64,
}

struct Phase {
    /// r sin φ
    a: f64,
    /// s + θ
    coupling: f64,
    /// √((s+θ)² − r² sin²φ)
    w: f64,
}

impl PtModel {
    pub fn new(r: f64, phi: f64, s: f64) -> Result<Self> {
        if !(r.is_finite() && phi.is_finite() && s.is_finite()) {
            return Err(Error::InvalidModel("r, phi and s must be finite".into()));
        }
        Ok(Self { r, phi, s })
    }

    /// sin α = r sin φ / (s + θ), defined in the exact phase only.
    pub fn alpha(&self, theta: f64) -> Result<f64> {
        let p = self.phase(theta)?;
        Ok((p.a / p.coupling).asin())
    }

    fn phase(&self, theta: f64) -> Result<Phase> {
        let a = self.r * self.phi.sin();
        let coupling = self.s + theta;
        if coupling <= a.abs() {
            return Err(Error::BrokenPhase(theta));
        }
        let w = ((coupling - a) * (coupling + a)).sqrt();
        Ok(Phase { a, coupling, w })
    }

    fn h_of(&self, coupling: f64) -> Operator {
        let diag = Complex64::from_polar(self.r, self.phi);
        let c = Complex64::new(coupling, 0.0);
        Operator::from_complex([[diag, c], [c, diag.conj()]])
    }
}

impl ParameterizedSystem for PtModel {
    fn dim(&self) -> usize {
        2
    }

    fn hamiltonian(&self, theta: f64) -> Result<Operator> {
        Ok(self.h_of(self.s + theta))
    }

    fn hamiltonian_derivative(&self, _theta: f64) -> Option<Result<Operator>> {
        Some(Ok(pauli::x()))
    }

    fn has_closed_form(&self) -> bool {
        true
    }

    fn closed_form(&self, theta: f64) -> Option<Result<ClosedForm>> {
        Some(self.phase(theta).map(|p| {
            let i = Complex64::i();
            let sin_a = p.a / p.coupling;
            let sec = p.coupling / p.w;
            let tan = p.a / p.w;
            let eta = Operator::from_complex([
                [Complex64::new(sec, 0.0), -i * tan],
                [i * tan, Complex64::new(sec, 0.0)],
            ]);
            let r2 = std::f64::consts::FRAC_1_SQRT_2;
            let plus = [-i * r2, Complex64::new(r2, 0.0)];
            let minus = [i * r2, Complex64::new(r2, 0.0)];
            // descending Λ: sec α + tan α first unless α < 0
            let (lambda, cols, sign) = if sin_a >= 0.0 {
                (vec![sec + tan, sec - tan], [plus, minus], 1.0)
            } else {
                (vec![sec - tan, sec + tan], [minus, plus], -1.0)
            };
            let basis = Operator::from_complex([[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]]);
            let root = Operator::from_real_diag(&[lambda[0].sqrt(), lambda[1].sqrt()]);
            let s = root.matmul(&basis.adjoint());
            let diag = Complex64::new(self.r * self.phi.cos(), 0.0);
            let off = i * (sign * p.w);
            ClosedForm {
                hamiltonian: self.h_of(p.coupling),
                eta,
                lambda,
                basis,
                s,
                counterpart: Operator::from_complex([[diag, off], [-off, diag]]),
            }
        }))
    }

    fn closed_form_metric_derivative(&self, theta: f64) -> Option<Result<Operator>> {
        Some(self.phase(theta).map(|p| {
            let w3 = p.w.powi(3);
            let d_diag = Complex64::new(-p.a * p.a / w3, 0.0);
            let d_off = Complex64::new(0.0, p.a * p.coupling / w3);
            Operator::from_complex([[d_diag, d_off], [-d_off, d_diag]])
        }))
    }

    fn counterpart_derivative(&self, theta: f64) -> Option<Result<Operator>> {
        Some(self.phase(theta).map(|p| {
            let sign = if p.a >= 0.0 { 1.0 } else { -1.0 };
            let d_off = Complex64::new(0.0, sign * p.coupling / p.w);
            Operator::from_complex([[Complex64::new(0.0, 0.0), d_off], [-d_off, Complex64::new(0.0, 0.0)]])
        }))
    }

    fn exceptional_points(&self) -> Vec<f64> {
        vec![(self.r * self.phi.sin()).abs() - self.s]
    }

    fn name(&self) -> &'static str {
        "pt"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densela::eig_hermitian;
    use crate::pseudoherm::{biorthogonal_system, metric_from_biorthogonal, MetricGauge};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reference_point() {
        let m = PtModel::new(1.0, FRAC_PI_2, 2.0).unwrap();
        assert!((m.alpha(0.0).unwrap() - FRAC_PI_6).abs() < 1e-15);
        let cf = m.closed_form(0.0).unwrap().unwrap();
        let k = 2.0 / 3f64.sqrt();
        let eta = Operator::from_complex([[c(k, 0.0), c(0.0, -k / 2.0)], [c(0.0, k / 2.0), c(k, 0.0)]]);
        assert!((&cf.eta - &eta).fro_norm() < 1e-15);
        assert!((cf.lambda[0] - 3f64.sqrt()).abs() < 1e-15);
        assert!((cf.lambda[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let hh = Operator::from_complex([[c(0.0, 0.0), c(0.0, 3f64.sqrt())], [c(0.0, -(3f64.sqrt())), c(0.0, 0.0)]]);
        assert!((&cf.counterpart - &hh).fro_norm() < 1e-14);
    }

    #[test]
    fn factor_and_counterpart_consistent() {
        for (r, phi, s, th) in [(1.0, FRAC_PI_2, 2.0, 0.0), (0.7, 1.1, 1.3, 0.4), (0.9, -0.8, 1.0, 0.2)] {
            let m = PtModel::new(r, phi, s).unwrap();
            let cf = m.closed_form(th).unwrap().unwrap();
            assert!((&cf.s.adjoint().matmul(&cf.s) - &cf.eta).fro_norm() <= 1e-12);
            let direct = cf.hamiltonian.conjugate_by(&cf.s, &cf.s.inverse().unwrap());
            assert!((&direct - &cf.counterpart).fro_norm() < 1e-12);
            assert!(cf.counterpart.hermiticity_residual() <= 1e-12);
            let e = eig_hermitian(&cf.eta).unwrap();
            assert!((&e.basis - &cf.basis).fro_norm() < 1e-12);
        }
    }

    #[test]
    fn hermitian_limit() {
        let m = PtModel::new(0.0, 0.4, 1.5).unwrap();
        assert_eq!(m.alpha(0.0).unwrap(), 0.0);
        let cf = m.closed_form(0.0).unwrap().unwrap();
        assert!((&cf.eta - &Operator::identity(2)).fro_norm() < 1e-15);
        assert!(cf.hamiltonian.hermiticity_residual() == 0.0);
        // the counterpart is unitarily equivalent to H through the fixed basis
        let rotated = cf.basis.adjoint().matmul(&cf.hamiltonian).matmul(&cf.basis);
        assert!((&rotated - &cf.counterpart).fro_norm() < 1e-14);
    }

    #[test]
    fn broken_phase_boundary() {
        let m = PtModel::new(1.0, FRAC_PI_2, 1.0).unwrap();
        assert!(matches!(m.closed_form(0.0).unwrap(), Err(Error::BrokenPhase(_))));
        assert!(m.closed_form(0.01).unwrap().is_ok());
        assert!((m.exceptional_points()[0]).abs() < 1e-15);
    }

    #[test]
    fn generic_metric_is_proportional() {
        let m = PtModel::new(1.0, FRAC_PI_2, 2.0).unwrap();
        for th in [0.0, 0.5, -0.5] {
            let cf = m.closed_form(th).unwrap().unwrap();
            let b = biorthogonal_system(&cf.hamiltonian).unwrap();
            let bundle = metric_from_biorthogonal(&b, &MetricGauge::Raw).unwrap();
            let f = cf.eta.trace().re / bundle.eta.trace().re;
            assert!(f > 0.0);
            assert!((&bundle.eta.scale_real(f) - &cf.eta).fro_norm() < 1e-9);
        }
    }

    #[test]
    fn basis_is_parameter_independent() {
        let m = PtModel::new(1.0, FRAC_PI_2, 2.0).unwrap();
        let u0 = m.closed_form(-0.5).unwrap().unwrap().basis;
        for th in [-0.2, 0.0, 0.7, 3.0] {
            assert_eq!(m.closed_form(th).unwrap().unwrap().basis, u0);
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let m = PtModel::new(0.8, 1.2, 1.5).unwrap();
        let (th, h) = (0.1, 1e-6);
        let cf = |x: f64| m.closed_form(x).unwrap().unwrap();
        let fd_eta = (&cf(th + h).eta - &cf(th - h).eta).scale_real(0.5 / h);
        let fd_hh = (&cf(th + h).counterpart - &cf(th - h).counterpart).scale_real(0.5 / h);
        assert!((&fd_eta - &m.closed_form_metric_derivative(th).unwrap().unwrap()).fro_norm() < 1e-8);
        assert!((&fd_hh - &m.counterpart_derivative(th).unwrap().unwrap()).fro_norm() < 1e-8);
    }
}
