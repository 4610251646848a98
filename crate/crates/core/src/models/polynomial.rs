use crate::densela::Operator;
use crate::error::{Error, Result};
use crate::system::ParameterizedSystem;

/// H(θ) = Σ_n θⁿ·C_n
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialModel {
    coefficients: Vec<Operator>,
}

impl PolynomialModel {
    pub fn new(coefficients: Vec<Operator>) -> Result<Self> {
        let first = coefficients
            .first()
            .ok_or_else(|| Error::InvalidModel("at least one coefficient is required".into()))?;
        let dim = first.dim();
        if let Some(bad) = coefficients.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[Operator] {
        &self.coefficients
    }
}

impl ParameterizedSystem for PolynomialModel {
    fn dim(&self) -> usize {
        self.coefficients[0].dim()
    }

    fn hamiltonian(&self, theta: f64) -> Result<Operator> {
        // Horner
        let mut acc = Operator::zeros(self.dim());
        for c in self.coefficients.iter().rev() {
            acc = &acc.scale_real(theta) + c;
        }
        Ok(acc)
    }

    fn hamiltonian_derivative(&self, theta: f64) -> Option<Result<Operator>> {
        let mut acc = Operator::zeros(self.dim());
        for (n, c) in self.coefficients.iter().enumerate().skip(1).rev() {
            acc = &acc.scale_real(theta) + &c.scale_real(n as f64);
        }
        Some(Ok(acc))
    }

    fn name(&self) -> &'static str {
        "polynomial"
    }
}
