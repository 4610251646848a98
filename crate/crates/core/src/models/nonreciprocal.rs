use crate::densela::Operator;
use crate::error::{Error, Result};
use crate::system::{ClosedForm, ParameterizedSystem};

/// |k₁k₂| at or below this is treated as the exceptional point itself.
pub const EP_RADIUS: f64 = 1e-14;

/// How the couplings k₁, k₂ depend on θ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    /// k₁ = θ/δ, k₂ = θδ, restricted to θ > 0
    Multiplicative,
    /// k₁ = 1/δ + θ, k₂ = δ + θ
    Additive,
    /// θ-independent couplings
    Raw { k1: f64, k2: f64 },
}

/// H = [[ω, k₁], [k₂, −ω]] with real, same-signed, unequal couplings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonreciprocalModel {
    pub omega: f64,
    pub delta: f64,
    pub coupling: Coupling,
}

impl NonreciprocalModel {
    pub fn new(omega: f64, delta: f64, coupling: Coupling) -> Result<Self> {
        if !omega.is_finite() || !delta.is_finite() {
            return Err(Error::InvalidModel("omega and delta must be finite".into()));
        }
        match coupling {
            Coupling::Raw { k1, k2 } => {
                if !k1.is_finite() || !k2.is_finite() {
                    return Err(Error::InvalidModel("couplings must be finite".into()));
                }
                if k1 == k2 {
                    return Err(Error::InvalidModel("k1 must differ from k2".into()));
                }
            }
            _ => {
                if delta == 0.0 {
                    return Err(Error::InvalidModel("delta must be nonzero".into()));
                }
                if delta.abs() == 1.0 {
                    return Err(Error::InvalidModel("|delta| = 1 gives k1 = k2".into()));
                }
            }
        }
        Ok(Self { omega, delta, coupling })
    }

    /// (k₁, k₂) at θ without any phase check.
    pub fn couplings(&self, theta: f64) -> Result<(f64, f64)> {
        let d = self.delta;
        match self.coupling {
            Coupling::Multiplicative => {
                if theta <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "multiplicative coupling needs theta > 0, got {theta}"
                    )));
                }
                Ok((theta / d, theta * d))
            }
            Coupling::Additive => Ok((1.0 / d + theta, d + theta)),
            Coupling::Raw { k1, k2 } => Ok((k1, k2)),
        }
    }

    fn coupling_slopes(&self) -> (f64, f64) {
        match self.coupling {
            Coupling::Multiplicative => (1.0 / self.delta, self.delta),
            Coupling::Additive => (1.0, 1.0),
            Coupling::Raw { .. } => (0.0, 0.0),
        }
    }

    /// Couplings at θ, rejected at or beyond the exceptional point.
    fn exact_couplings(&self, theta: f64) -> Result<(f64, f64)> {
        let (k1, k2) = self.couplings(theta)?;
        let p = k1 * k2;
        if p.abs() <= EP_RADIUS {
            return Err(Error::AtExceptionalPoint(theta));
        }
        if p < 0.0 {
            return Err(Error::BrokenPhase(theta));
        }
        Ok((k1, k2))
    }

    fn h_of(&self, k1: f64, k2: f64) -> Operator {
        Operator::from_real([[self.omega, k1], [k2, -self.omega]])
    }
}

impl ParameterizedSystem for NonreciprocalModel {
    fn dim(&self) -> usize {
        2
    }

    fn hamiltonian(&self, theta: f64) -> Result<Operator> {
        let (k1, k2) = self.couplings(theta)?;
        Ok(self.h_of(k1, k2))
    }

    fn hamiltonian_derivative(&self, _theta: f64) -> Option<Result<Operator>> {
        let (d1, d2) = self.coupling_slopes();
        Some(Ok(Operator::from_real([[0.0, d1], [d2, 0.0]])))
    }

    fn has_closed_form(&self) -> bool {
        true
    }

    fn closed_form(&self, theta: f64) -> Option<Result<ClosedForm>> {
        Some(self.exact_couplings(theta).map(|(k1, k2)| {
            let ratio = k1 / k2;
            let root = ratio.sqrt();
            let off = k1.signum() * (k1 * k2).sqrt();
            let (lambda, basis) = if ratio >= 1.0 {
                (vec![ratio, 1.0], Operator::from_real([[0.0, 1.0], [1.0, 0.0]]))
            } else {
                (vec![1.0, ratio], Operator::identity(2))
            };
            ClosedForm {
                hamiltonian: self.h_of(k1, k2),
                eta: Operator::from_real_diag(&[1.0, ratio]),
                lambda,
                basis,
                s: Operator::from_real_diag(&[1.0, root]),
                counterpart: Operator::from_real([[self.omega, off], [off, -self.omega]]),
            }
        }))
    }

    fn closed_form_metric_derivative(&self, theta: f64) -> Option<Result<Operator>> {
        let (d1, d2) = self.coupling_slopes();
        Some(self.exact_couplings(theta).map(|(k1, k2)| {
            let d_ratio = (d1 * k2 - k1 * d2) / (k2 * k2);
            Operator::from_real_diag(&[0.0, d_ratio])
        }))
    }

    fn counterpart_derivative(&self, theta: f64) -> Option<Result<Operator>> {
        let (d1, d2) = self.coupling_slopes();
        Some(self.exact_couplings(theta).map(|(k1, k2)| {
            let d_off = k1.signum() * (d1 * k2 + k1 * d2) / (2.0 * (k1 * k2).sqrt());
            Operator::from_real([[0.0, d_off], [d_off, 0.0]])
        }))
    }

    fn exceptional_points(&self) -> Vec<f64> {
        let d = self.delta;
        match self.coupling {
            Coupling::Multiplicative => vec![0.0],
            Coupling::Additive => {
                let mut eps = vec![-d, -1.0 / d];
                eps.sort_by(f64::total_cmp);
                eps
            }
            Coupling::Raw { .. } => Vec::new(),
        }
    }

    fn name(&self) -> &'static str {
        "nonreciprocal"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudoherm::{check_pseudo_hermiticity, GaugeTag};
    use crate::system::system_metric;

    #[test]
    fn raw_couplings_example() {
        let m = NonreciprocalModel::new(0.0, 1.0, Coupling::Raw { k1: 4.0, k2: 1.0 }).unwrap();
        let cf = m.closed_form(0.0).unwrap().unwrap();
        assert_eq!(cf.hamiltonian, Operator::from_real([[0.0, 4.0], [1.0, 0.0]]));
        assert_eq!(cf.s, Operator::from_real_diag(&[1.0, 2.0]));
        assert_eq!(cf.counterpart, Operator::from_real([[0.0, 2.0], [2.0, 0.0]]));
        assert_eq!(cf.eta, Operator::from_real_diag(&[1.0, 4.0]));
        assert!(check_pseudo_hermiticity(&cf.hamiltonian, &cf.eta) <= 1e-14);
    }

    #[test]
    fn additive_at_ep() {
        let m = NonreciprocalModel::new(0.0, 0.5, Coupling::Additive).unwrap();
        assert!(matches!(
            m.closed_form(-0.5).unwrap(),
            Err(Error::AtExceptionalPoint(_))
        ));
        assert_eq!(m.exceptional_points(), vec![-2.0, -0.5]);
    }

    #[test]
    fn additive_between_eps_is_broken() {
        let m = NonreciprocalModel::new(0.0, 0.5, Coupling::Additive).unwrap();
        assert!(matches!(m.closed_form(-1.0).unwrap(), Err(Error::BrokenPhase(_))));
    }

    #[test]
    fn equal_couplings_rejected() {
        assert!(NonreciprocalModel::new(0.0, 1.0, Coupling::Multiplicative).is_err());
        assert!(NonreciprocalModel::new(0.0, -1.0, Coupling::Additive).is_err());
        assert!(NonreciprocalModel::new(0.0, 0.5, Coupling::Raw { k1: 2.0, k2: 2.0 }).is_err());
        assert!(NonreciprocalModel::new(0.0, 0.0, Coupling::Additive).is_err());
    }

    #[test]
    fn multiplicative_needs_positive_theta() {
        let m = NonreciprocalModel::new(0.3, 0.5, Coupling::Multiplicative).unwrap();
        assert!(m.hamiltonian(-0.1).is_err());
        assert!(m.hamiltonian(0.1).is_ok());
    }

    #[test]
    fn negative_pair_keeps_sign() {
        let m = NonreciprocalModel::new(0.2, 1.0, Coupling::Raw { k1: -4.0, k2: -1.0 }).unwrap();
        let cf = m.closed_form(0.0).unwrap().unwrap();
        assert_eq!(cf.counterpart[(0, 1)].re, -2.0);
        let direct = cf.hamiltonian.conjugate_by(&cf.s, &cf.s.inverse().unwrap());
        assert!((&direct - &cf.counterpart).fro_norm() < 1e-15);
    }

    #[test]
    fn closed_form_matches_generic_entry11() {
        for coupling in [Coupling::Additive, Coupling::Multiplicative] {
            let m = NonreciprocalModel::new(0.0, 0.5, coupling).unwrap();
            for theta in [0.2, 0.7, 1.5] {
                let cf = m.closed_form(theta).unwrap().unwrap();
                let generic = system_metric(&m, theta, GaugeTag::Entry11).unwrap();
                assert!((&generic.eta - &cf.eta).fro_norm() < 1e-9);
                let direct = cf.hamiltonian.conjugate_by(&cf.s, &cf.s.inverse().unwrap());
                assert!((&direct - &cf.counterpart).fro_norm() < 1e-12);
                assert!(cf.counterpart.hermiticity_residual() <= 1e-12);
                let s2 = cf.s.adjoint().matmul(&cf.s);
                assert!((&s2 - &cf.eta).fro_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn detuned_generic_metric_is_another_valid_metric() {
        // with ω ≠ 0 the unit-right-vector metric is not diagonal, yet both
        // satisfy H†η = ηH
        let m = NonreciprocalModel::new(0.4, 0.5, Coupling::Additive).unwrap();
        let cf = m.closed_form(0.3).unwrap().unwrap();
        let generic = system_metric(&m, 0.3, GaugeTag::Entry11).unwrap();
        assert!(check_pseudo_hermiticity(&cf.hamiltonian, &generic.eta) < 1e-12);
        assert!(check_pseudo_hermiticity(&cf.hamiltonian, &cf.eta) < 1e-14);
        assert!((&generic.eta - &cf.eta).fro_norm() > 1e-3);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let m = NonreciprocalModel::new(0.1, 0.5, Coupling::Additive).unwrap();
        let (th, h) = (0.3, 1e-6);
        let cf = |x: f64| m.closed_form(x).unwrap().unwrap();
        let fd_eta = (&cf(th + h).eta - &cf(th - h).eta).scale_real(0.5 / h);
        let fd_hh = (&cf(th + h).counterpart - &cf(th - h).counterpart).scale_real(0.5 / h);
        let d_eta = m.closed_form_metric_derivative(th).unwrap().unwrap();
        let d_hh = m.counterpart_derivative(th).unwrap().unwrap();
        assert!((&fd_eta - &d_eta).fro_norm() < 1e-8);
        assert!((&fd_hh - &d_hh).fro_norm() < 1e-8);
    }
}
