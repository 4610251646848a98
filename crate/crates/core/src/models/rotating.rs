use crate::densela::{pauli, Operator};
use crate::error::{Error, Result};
use crate::system::{ClosedForm, ParameterizedSystem};

/// A family whose metric eigenbasis rotates with θ:
/// η = R(θ)·diag[λ₁, λ₂]·R(θ)†, S = √diag[λ₁, λ₂]·R(θ)†, H = S⁻¹·H₀(θ)·S
/// with H₀(θ) = σ_z + (c + θ)·σ_x Hermitian.
///
/// The eigenvector phase convention changes branch at |θ| = π/4, so tracked
/// quantities are continuous on (−π/4, π/4).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotatingMetricModel {
    pub lambda: [f64; 2],
    pub offset: f64,
}

impl Default for RotatingMetricModel {
    fn default() -> Self {
        Self {
            lambda: [1.0, 2.0],
            offset: 0.5,
        }
    }
}

fn rotation(theta: f64) -> Operator {
    let (s, c) = theta.sin_cos();
    Operator::from_real([[c, -s], [s, c]])
}

fn rotation_derivative(theta: f64) -> Operator {
    let (s, c) = theta.sin_cos();
    Operator::from_real([[-s, -c], [c, -s]])
}

impl RotatingMetricModel {
    pub fn new(lambda: [f64; 2], offset: f64) -> Result<Self> {
        if !(lambda[0] > 0.0 && lambda[1] > lambda[0] && lambda[1].is_finite() && offset.is_finite()) {
            return Err(Error::InvalidModel("need 0 < lambda1 < lambda2 and finite offset".into()));
        }
        Ok(Self { lambda, offset })
    }

    fn root(&self) -> Operator {
        Operator::from_real_diag(&[self.lambda[0].sqrt(), self.lambda[1].sqrt()])
    }

    fn hermitian_side(&self, theta: f64) -> Operator {
        &pauli::z() + &pauli::x().scale_real(self.offset + theta)
    }

    fn s(&self, theta: f64) -> Operator {
        self.root().matmul(&rotation(theta).adjoint())
    }
}

impl ParameterizedSystem for RotatingMetricModel {
    fn dim(&self) -> usize {
        2
    }

    fn hamiltonian(&self, theta: f64) -> Result<Operator> {
        let s = self.s(theta);
        Ok(s.inverse()?.matmul(&self.hermitian_side(theta)).matmul(&s))
    }

    fn hamiltonian_derivative(&self, theta: f64) -> Option<Result<Operator>> {
        let run = || -> Result<Operator> {
            let s = self.s(theta);
            let s_inv = s.inverse()?;
            let ds = self.root().matmul(&rotation_derivative(theta).adjoint());
            let ds_inv = s_inv.matmul(&ds).matmul(&s_inv).scale_real(-1.0);
            let h0 = self.hermitian_side(theta);
            let a = ds_inv.matmul(&h0).matmul(&s);
            let b = s_inv.matmul(&pauli::x()).matmul(&s);
            let c = s_inv.matmul(&h0).matmul(&ds);
            Ok(&(&a + &b) + &c)
        };
        Some(run())
    }

    fn has_closed_form(&self) -> bool {
        true
    }

    fn closed_form(&self, theta: f64) -> Option<Result<ClosedForm>> {
        let r = rotation(theta);
        let d = Operator::from_real_diag(&self.lambda);
        let eta = r.matmul(&d).matmul(&r.adjoint());
        let swap = Operator::from_real([[0.0, 1.0], [1.0, 0.0]]);
        let s = self.s(theta);
        Some(self.hamiltonian(theta).map(|h| ClosedForm {
            hamiltonian: h,
            eta,
            lambda: vec![self.lambda[1], self.lambda[0]],
            basis: r.matmul(&swap),
            s,
            counterpart: self.hermitian_side(theta),
        }))
    }

    fn closed_form_metric_derivative(&self, theta: f64) -> Option<Result<Operator>> {
        let r = rotation(theta);
        let dr = rotation_derivative(theta);
        let d = Operator::from_real_diag(&self.lambda);
        let a = dr.matmul(&d).matmul(&r.adjoint());
        Some(Ok(&a + &a.adjoint()))
    }

    fn counterpart_derivative(&self, _theta: f64) -> Option<Result<Operator>> {
        Some(Ok(pauli::x()))
    }

    fn name(&self) -> &'static str {
        "rotating"
    }
}
