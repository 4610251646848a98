//! Metric construction and the map to a Hermitian counterpart.
//!
//! For a diagonalizable H with real spectrum, the left eigenvectors {φ_i},
//! normalized so ⟨φ_i|ψ_j⟩ = δ_ij against the right eigenvectors {ψ_i},
//! assemble a positive metric η = Σ_i |φ_i⟩⟨φ_i| with H†η = ηH. Writing
//! η = U·Λ·U† gives the factor S = √Λ·U† and the Hermitian counterpart
//! S·H·S⁻¹.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::densela::{eig_general, eig_hermitian, vector, Operator};
use crate::error::{Error, Result};

/// |Im λ| above this fraction of ‖H‖ marks the broken phase.
pub const REAL_SPECTRUM_TOL: f64 = 1e-8;
/// Eigenvalues closer than this (relative to ‖H‖) form one cluster.
pub const CLUSTER_GAP: f64 = 1e-8;

/// Normalization convention for the overall positive scale of η.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeTag {
    /// η₁₁ = 1
    Entry11,
    /// the model's published metric, used verbatim
    ClosedForm,
    /// Σ|φ_i⟩⟨φ_i| with unit right eigenvectors, no rescaling
    Raw,
}

impl std::fmt::Display for GaugeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GaugeTag::Entry11 => "entry11",
            GaugeTag::ClosedForm => "closed-form",
            GaugeTag::Raw => "raw",
        })
    }
}

/// Gauge together with the data it needs.
#[derive(Clone, Debug)]
pub enum MetricGauge {
    Entry11,
    Raw,
    ClosedForm(Operator),
}

impl MetricGauge {
    pub fn tag(&self) -> GaugeTag {
        match self {
            MetricGauge::Entry11 => GaugeTag::Entry11,
            MetricGauge::Raw => GaugeTag::Raw,
            MetricGauge::ClosedForm(_) => GaugeTag::ClosedForm,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BiorthogonalSystem {
    pub values: Vec<f64>,
    /// Columns |ψ_i⟩, unit flat norm.
    pub right: Operator,
    /// Columns |φ_i⟩ with ⟨φ_i|ψ_j⟩ = δ_ij.
    pub left: Operator,
    pub vector_condition: f64,
}

impl BiorthogonalSystem {
    /// max_ij |⟨φ_i|ψ_j⟩ − δ_ij|
    pub fn biorthonormality_defect(&self) -> f64 {
        let gram = self.left.adjoint().matmul(&self.right);
        (&gram - &Operator::identity(gram.dim())).max_abs()
    }
}

/// Eigen-decomposition into paired left and right eigenvectors.
pub fn biorthogonal_system(h: &Operator) -> Result<BiorthogonalSystem> {
    let norm = h.fro_norm().max(f64::MIN_POSITIVE);
    let eig = eig_general(h)?;
    if eig.near_defective() {
        return Err(Error::NearDefective(eig.vector_condition));
    }
    let max_im = eig.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if max_im > REAL_SPECTRUM_TOL * norm {
        return Err(Error::ComplexSpectrum(max_im));
    }
    let values: Vec<f64> = eig.values.iter().map(|v| v.re).collect();

    // Orthonormalize within degenerate clusters (modified Gram–Schmidt).
    let mut cols = eig.right_vectors.columns();
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && (values[end] - values[start]).abs() < CLUSTER_GAP * norm {
            end += 1;
        }
        if end - start > 1 {
            for i in start..end {
                for j in start..i {
                    let proj = vector::inner(&cols[j], &cols[i]);
                    cols[i] = vector::axpy(&cols[i], -proj, &cols[j]);
                }
                let n = vector::norm(&cols[i]);
                if n < 1e-12 {
                    return Err(Error::NearDefective(f64::INFINITY));
                }
                cols[i] = vector::scale_real(&cols[i], 1.0 / n);
            }
        }
        start = end;
    }
    let right = Operator::from_columns(&cols)?;
    // Rows of P⁻¹ are the left eigenvectors already scaled to ⟨φ_i|ψ_i⟩ = 1.
    let left = right.inverse().map_err(|_| Error::NearDefective(f64::INFINITY))?.adjoint();
    Ok(BiorthogonalSystem {
        values,
        right,
        left,
        vector_condition: eig.vector_condition,
    })
}

/// η together with its eigen-decomposition, factor and diagnostics.
#[derive(Clone, Debug)]
pub struct MetricBundle {
    pub eta: Operator,
    /// Columns are eigenvectors of η, ordered like `lambda`.
    pub basis: Operator,
    /// Eigenvalues of η, descending.
    pub lambda: Vec<f64>,
    /// η = S†S
    pub s: Operator,
    /// Normalized ‖H†η − ηH‖, when a Hamiltonian was supplied.
    pub residual_ph: Option<f64>,
    pub posdef: bool,
    pub gauge: GaugeTag,
    /// Positive scale relating the generic biorthogonal metric to the one
    /// kept here (closed-form gauge only).
    pub congruence_factor: Option<f64>,
}

impl MetricBundle {
    /// Decomposes a given metric. Fails unless η is Hermitian positive definite.
    pub fn from_eta(eta: Operator, hamiltonian: Option<&Operator>, gauge: GaugeTag) -> Result<Self> {
        let eig = eig_hermitian(&eta)?;
        let lmin = *eig.values.last().expect("non-empty spectrum");
        let lmax = eig.values[0];
        let posdef = lmin > 1e-14 * lmax.abs().max(f64::MIN_POSITIVE) && lmin > 0.0;
        if !posdef {
            return Err(Error::NotPositiveDefinite(lmin));
        }
        let s = sqrt_factor(&eig.values, &eig.basis);
        let residual_ph = hamiltonian.map(|h| check_pseudo_hermiticity(h, &eta));
        Ok(Self {
            eta: eta.hermitian_part(),
            basis: eig.basis,
            lambda: eig.values,
            s,
            residual_ph,
            posdef,
            gauge,
            congruence_factor: None,
        })
    }

    /// Λ_max / Λ_min
    pub fn condition(&self) -> f64 {
        self.lambda[0] / self.lambda[self.lambda.len() - 1]
    }
}

/// Assembles η = Σ|φ_i⟩⟨φ_i| and rescales it per the gauge.
pub fn metric_from_biorthogonal(b: &BiorthogonalSystem, gauge: &MetricGauge) -> Result<MetricBundle> {
    let raw = b.left.matmul(&b.left.adjoint()).hermitian_part();
    let h = reconstruct_hamiltonian(b);
    match gauge {
        MetricGauge::Raw => MetricBundle::from_eta(raw, Some(&h), GaugeTag::Raw),
        MetricGauge::Entry11 => {
            let e11 = raw[(0, 0)].re;
            if e11 <= 0.0 {
                return Err(Error::NotPositiveDefinite(e11));
            }
            MetricBundle::from_eta(raw.scale_real(1.0 / e11), Some(&h), GaugeTag::Entry11)
        }
        MetricGauge::ClosedForm(reference) => {
            let factor = reference.trace().re / raw.trace().re;
            let mut bundle = MetricBundle::from_eta(reference.clone(), Some(&h), GaugeTag::ClosedForm)?;
            bundle.congruence_factor = Some(factor);
            Ok(bundle)
        }
    }
}

fn reconstruct_hamiltonian(b: &BiorthogonalSystem) -> Operator {
    let d = Operator::from_real_diag(&b.values);
    b.right.matmul(&d).matmul(&b.left.adjoint())
}

/// S = √Λ·U† with rows ordered by the index of each eigenvector's dominant
/// component (ties keep the descending-Λ order). This reproduces S = diag(…)
/// for diagonal metrics.
fn sqrt_factor(lambda: &[f64], basis: &Operator) -> Operator {
    let n = lambda.len();
    let dominant: Vec<usize> = (0..n)
        .map(|j| {
            let col = basis.column(j);
            let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            (0..n)
                .rev()
                .find(|&i| col[i].norm() >= max * (1.0 - 1e-9))
                .unwrap_or(0)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| dominant[j]);
    let mut s = Operator::zeros(n);
    for (row, &j) in order.iter().enumerate() {
        let root = lambda[j].sqrt();
        for c in 0..n {
            s[(row, c)] = basis[(c, j)].conj() * root;
        }
    }
    s
}

/// Returns the factor S of a positive-definite metric, η = S†S.
pub fn factor_metric(bundle: &MetricBundle) -> Result<Operator> {
    if !bundle.posdef {
        return Err(Error::NotPositiveDefinite(*bundle.lambda.last().unwrap_or(&0.0)));
    }
    Ok(sqrt_factor(&bundle.lambda, &bundle.basis))
}

#[derive(Clone, Debug)]
pub struct Counterpart {
    /// Hermitian part of S·H·S⁻¹.
    pub hamiltonian: Operator,
    /// ‖S·H·S⁻¹ − (S·H·S⁻¹)†‖_F before symmetrization.
    pub hermiticity_residual: f64,
}

/// H^H = S·H·S⁻¹.
pub fn hermitian_counterpart(h: &Operator, s: &Operator) -> Result<Counterpart> {
    let s_inv = s.inverse()?;
    let raw = h.conjugate_by(s, &s_inv);
    let residual = raw.hermiticity_residual();
    if residual > 1e-6 * h.fro_norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitianResult(residual));
    }
    Ok(Counterpart {
        hamiltonian: raw.hermitian_part(),
        hermiticity_residual: residual,
    })
}

/// ‖H†η − ηH‖_F / (‖η‖_F·‖H‖_F)
pub fn check_pseudo_hermiticity(h: &Operator, eta: &Operator) -> f64 {
    let lhs = h.adjoint().matmul(eta);
    let rhs = eta.matmul(h);
    let denom = eta.fro_norm() * h.fro_norm();
    if denom == 0.0 {
        return 0.0;
    }
    (&lhs - &rhs).fro_norm() / denom
}

/// S·ψ
pub fn map_state(psi: &[Complex64], s: &Operator) -> Result<Vec<Complex64>> {
    if psi.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: psi.len(),
        });
    }
    Ok(s.matvec(psi))
}
