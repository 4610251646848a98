//! Helpers for state vectors stored as plain `Vec<Complex64>`.

use num_complex::Complex64;

use super::Operator;

/// ⟨a|b⟩
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// ⟨a|η|b⟩
pub fn eta_inner(a: &[Complex64], eta: &Operator, b: &[Complex64]) -> Complex64 {
    inner(a, &eta.matvec(b))
}

pub fn eta_norm_sqr(a: &[Complex64], eta: &Operator) -> f64 {
    eta_inner(a, eta, a).re
}

/// ⟨a|η|b⟩ with η = I when `eta` is `None`.
pub fn product(a: &[Complex64], eta: Option<&Operator>, b: &[Complex64]) -> Complex64 {
    match eta {
        Some(eta) => eta_inner(a, eta, b),
        None => inner(a, b),
    }
}

pub fn scale(a: &[Complex64], c: Complex64) -> Vec<Complex64> {
    a.iter().map(|&x| x * c).collect()
}

pub fn scale_real(a: &[Complex64], c: f64) -> Vec<Complex64> {
    a.iter().map(|&x| x * c).collect()
}

pub fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// a + c·b
pub fn axpy(a: &[Complex64], c: Complex64, b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

/// Rescales to unit norm under ⟨·|η|·⟩ (flat when `eta` is `None`).
pub fn normalized(a: &[Complex64], eta: Option<&Operator>) -> Vec<Complex64> {
    let n = product(a, eta, a).re.sqrt();
    scale_real(a, 1.0 / n)
}

pub fn basis(dim: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[k] = Complex64::new(1.0, 0.0);
    v
}
