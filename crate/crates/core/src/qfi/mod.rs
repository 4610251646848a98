//! Fisher information on the flat and curved Hilbert spaces.
//!
//! For a state curve ψ(θ) normalized under a metric η(θ):
//!
//! - SQFI: `F^H = 4‖(∂_θψ)_⊥‖²` with the flat projector;
//! - CQFI: `F_c = 4‖(D_θψ)_⊥‖²_η` with `P_ψ v = ψ⟨ψ|η|v⟩`;
//! - the Hermitian-side SQFI of `Sψ` splits as
//!   `F^H = F_c + 4‖(Aψ)_⊥‖²_η + 8 Re⟨(Aψ)_⊥|(D_θψ)_⊥⟩_η`, where
//!   `A = ½U∂_θU† + ½η⁻¹U∂_θU†η` vanishes when the metric eigenbasis is
//!   θ-independent;
//! - both are bounded by the squared spectral width of the generator
//!   `h = i·V†∂_θV`, `V = exp(−iH^H t)`.

mod bound;
mod decompose;
mod fisher;
mod pipeline;

pub use bound::{generator_h, optimal_probe, qfi_bound, Bound, Generator, SMALL_T};
pub use decompose::{
    antiparallel, antiparallel_diagnostic, decompose_fh, identity_residual, operator_a, Antiparallel,
    Decomposition, IdentityCheck,
};
pub use fisher::{cqfi, hermitian_side_sqfi, sqfi, sqfi_raw, CqfiValue, NEAR_EP_CONDITION};
pub use pipeline::{analyze_point, PointOptions, ProbeFrame, SystemCurves};

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::densela::{expm, vector, Operator};
use crate::error::{Error, Result};

/// Validity markers attached to a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Flag {
    #[serde(rename = "NearEP")]
    NearEp,
    TrackingDegenerate,
    BoundSmallT,
    Failed,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::NearEp => "NearEP",
            Flag::TrackingDegenerate => "TrackingDegenerate",
            Flag::BoundSmallT => "BoundSmallT",
            Flag::Failed => "Failed",
        })
    }
}

/// One evaluated parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfiSample {
    pub theta: f64,
    pub time: f64,
    /// SQFI of the mapped state S·ψ.
    pub sqfi: f64,
    /// SQFI of ψ itself, flat-normalized.
    pub sqfi_flat: f64,
    pub cqfi: f64,
    pub bound: Option<f64>,
    pub term_metric_rotation: Option<f64>,
    pub term_cross: Option<f64>,
    pub k_diag: Option<f64>,
    pub flags: BTreeSet<Flag>,
    /// |sqfi − (cqfi + rotation + cross)|
    pub closure_residual: Option<f64>,
    pub metric_condition: f64,
    /// ‖h − h†‖_F before symmetrization.
    pub generator_asymmetry: Option<f64>,
}

impl QfiSample {
    /// |sqfi − cqfi|
    pub fn duality_deviation(&self) -> f64 {
        (self.sqfi - self.cqfi).abs()
    }

    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// Inner product under which a probe is normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Flat,
    Eta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeState {
    pub amplitudes: Vec<Complex64>,
    pub normalization: Normalization,
}

impl ProbeState {
    /// Checks the declared norm equals 1 to 1e-10.
    pub fn new(amplitudes: Vec<Complex64>, normalization: Normalization, eta: Option<&Operator>) -> Result<Self> {
        let n = match (normalization, eta) {
            (Normalization::Eta, Some(e)) => vector::eta_norm_sqr(&amplitudes, e),
            (Normalization::Eta, None) => {
                return Err(Error::InvalidOperator("eta normalization needs a metric".into()))
            }
            (Normalization::Flat, _) => vector::norm_sqr(&amplitudes),
        };
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self {
            amplitudes,
            normalization,
        })
    }
}

/// (I − P_ψ)v with P_ψ v = ψ⟨ψ|η|v⟩; `None` means the flat product.
pub fn project_perp(v: &[Complex64], psi: &[Complex64], eta: Option<&Operator>) -> Vec<Complex64> {
    let overlap = vector::product(psi, eta, v);
    vector::axpy(v, -overlap, psi)
}

/// exp(−iHt)·ψ₀
pub fn evolve(h: &Operator, psi0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    if psi0.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi0.len(),
        });
    }
    if !t.is_finite() || !h.is_finite() || psi0.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidOperator("non-finite evolution input".into()));
    }
    Ok(expm(&h.scale(Complex64::new(0.0, -t))).matvec(psi0))
}
