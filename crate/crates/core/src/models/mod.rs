//! Built-in Hamiltonian families.
//!
//! | family | H(θ) | metric |
//! |---|---|---|
//! | [`NonreciprocalModel`] | `[[ω, k₁], [k₂, −ω]]` | `diag[1, k₁/k₂]` |
//! | [`PtModel`] | `[[r e^{iφ}, s+θ], [s+θ, r e^{−iφ}]]` | `(1/cos α)[[1, −i sin α], [i sin α, 1]]` |
//! | [`RotatingMetricModel`] | `S(θ)⁻¹·H₀(θ)·S(θ)` | `R(θ)·diag[λ₁, λ₂]·R(θ)†` |
//! | [`PolynomialModel`] | `Σ θⁿ C_n` | generic only |

mod nonreciprocal;
mod polynomial;
mod pt;
mod rotating;

pub use nonreciprocal::{Coupling, NonreciprocalModel};
pub use polynomial::PolynomialModel;
pub use pt::PtModel;
pub use rotating::RotatingMetricModel;

use num_complex::Complex64;

use crate::densela::{expm, vector};
use crate::error::{Error, Result};
use crate::pseudoherm::GaugeTag;
use crate::system::{system_metric, ParameterizedSystem};

/// Unnormalized evolved probe with its flat and η norms.
#[derive(Clone, Debug)]
pub struct ProbeEvolution {
    pub state: Vec<Complex64>,
    pub flat_norm: f64,
    pub eta_norm: f64,
}

/// expm(−iH(θ)t)·probe, with ⟨ψ|ψ⟩ and ⟨ψ|η|ψ⟩ in the given gauge.
pub fn evolve_probe(
    system: &dyn ParameterizedSystem,
    theta: f64,
    t: f64,
    probe: &[Complex64],
    gauge: GaugeTag,
) -> Result<ProbeEvolution> {
    if probe.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: probe.len(),
        });
    }
    let metric = system_metric(system, theta, gauge)?;
    let h = system.hamiltonian(theta)?;
    let state = expm(&h.scale(Complex64::new(0.0, -t))).matvec(probe);
    Ok(ProbeEvolution {
        flat_norm: vector::norm_sqr(&state),
        eta_norm: vector::eta_norm_sqr(&state, &metric.eta),
        state,
    })
}
