use num_complex::Complex64;

use crate::densela::{eig_hermitian, expm, fix_phase_first, vector, Operator};
use crate::error::{Error, Result};
use crate::geometry::{d_theta, d_theta_fd, FdScheme, OperatorCurve, ParamCurve};

use super::{Normalization, ProbeState};

/// At or below this evolution time the generator is taken as t·∂_θH^H.
pub const SMALL_T: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct Generator {
    /// Hermitian part of i·V†∂_θV.
    pub h: Operator,
    /// ‖h − h†‖_F before symmetrization.
    pub asymmetry: f64,
    pub small_t: bool,
}

/// h(θ) = i·V†∂_θV with V = exp(−iH^H t), in the frame of the initial state.
/// For t ≤ [`SMALL_T`] returns t·∂_θH^H.
pub fn generator_h(hh_curve: &OperatorCurve<'_>, theta: f64, t: f64, scheme: &FdScheme) -> Result<Generator> {
    if t.abs() <= SMALL_T {
        let d = d_theta(hh_curve, theta, scheme)?.scale_real(t);
        return Ok(Generator {
            asymmetry: d.hermiticity_residual(),
            h: d.hermitian_part(),
            small_t: true,
        });
    }
    let propagator = ParamCurve::new(|th| {
        let hh = hh_curve.eval(th)?;
        Ok(expm(&hh.scale(Complex64::new(0.0, -t))))
    });
    let v = propagator.eval(theta)?;
    let dv = d_theta_fd(&propagator, theta, scheme)?;
    let raw = v.adjoint().matmul(&dv).scale(Complex64::i());
    Ok(Generator {
        asymmetry: raw.hermiticity_residual(),
        h: raw.hermitian_part(),
        small_t: false,
    })
}

#[derive(Clone, Debug)]
pub struct Bound {
    /// (λ_max − λ_min)² of h
    pub value: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub generator: Generator,
}

pub fn qfi_bound(hh_curve: &OperatorCurve<'_>, theta: f64, t: f64, scheme: &FdScheme) -> Result<Bound> {
    let generator = generator_h(hh_curve, theta, t, scheme)?;
    let e = eig_hermitian(&generator.h)?;
    let lambda_max = e.values[0];
    let lambda_min = *e.values.last().expect("non-empty");
    Ok(Bound {
        value: (lambda_max - lambda_min).powi(2),
        lambda_max,
        lambda_min,
        generator,
    })
}

/// S⁻¹(|λ_max⟩ + e^{iφ}|λ_min⟩)/√2, η-normalized for η = S†S.
///
/// Each extremal eigenvector is phased so its first significant component
/// is real positive.
pub fn optimal_probe(h: &Operator, s: &Operator, phi: f64) -> Result<ProbeState> {
    let e = eig_hermitian(h)?;
    let n = h.dim();
    let width = e.values[0] - e.values[n - 1];
    if width < 1e-10 {
        return Err(Error::DegenerateExtremes(width));
    }
    let mut top = e.basis.column(0);
    let mut bottom = e.basis.column(n - 1);
    fix_phase_first(&mut top, 1e-9);
    fix_phase_first(&mut bottom, 1e-9);
    let mix = vector::axpy(&top, Complex64::from_polar(1.0, phi), &bottom);
    let hermitian_side = vector::scale_real(&mix, std::f64::consts::FRAC_1_SQRT_2);
    let amplitudes = s.solve_vec(&hermitian_side)?;
    let eta = s.adjoint().matmul(s);
    let amplitudes = vector::normalized(&amplitudes, Some(&eta));
    ProbeState::new(amplitudes, Normalization::Eta, Some(&eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densela::pauli;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_counterpart_gives_zero_generator() {
        let curve = ParamCurve::new(|_| Ok(pauli::z()));
        for t in [1e-3, 2.0] {
            let g = generator_h(&curve, 0.4, t, &FdScheme::default()).unwrap();
            assert!(g.h.fro_norm() < 1e-12);
        }
    }

    #[test]
    fn commuting_family_generator() {
        let curve = ParamCurve::new(|th| Ok(pauli::x().scale_real(th)));
        for t in [0.5, 2.0, 7.0] {
            let g = generator_h(&curve, 0.3, t, &FdScheme::default()).unwrap();
            assert!((&g.h - &pauli::x().scale_real(t)).fro_norm() < 1e-8 * t);
            assert!(!g.small_t);
        }
    }

    #[test]
    fn small_t_generator() {
        // √(k₁k₂) for the additive family at δ = 0.5
        let curve = ParamCurve::new(|th: f64| Ok(pauli::x().scale_real(((2.0 + th) * (0.5 + th)).sqrt())));
        let g = generator_h(&curve, 0.0, 1e-3, &FdScheme::default()).unwrap();
        assert!(g.small_t);
        assert!((&g.h - &pauli::x().scale_real(1e-3 * 1.25)).fro_norm() < 1e-12);
        let b = qfi_bound(&curve, 0.0, 1e-3, &FdScheme::default()).unwrap();
        assert!((b.value - 6.25e-6).abs() < 1e-8 * 6.25e-6);
    }

    #[test]
    fn probe_from_sigma_z() {
        let p = optimal_probe(&pauli::z(), &Operator::identity(2), 0.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.amplitudes[0] - c(r, 0.0)).norm() < 1e-14);
        assert!((p.amplitudes[1] - c(r, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn probe_from_sigma_x_is_ground() {
        let s = Operator::from_real_diag(&[1.0, 2.0]);
        let p = optimal_probe(&pauli::x().scale_real(1.25e-3), &s, 0.0).unwrap();
        assert!((p.amplitudes[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(p.amplitudes[1].norm() < 1e-12);
        assert_eq!(p.normalization, Normalization::Eta);
    }

    #[test]
    fn degenerate_extremes_rejected() {
        assert!(matches!(
            optimal_probe(&Operator::identity(2), &Operator::identity(2), 0.0),
            Err(Error::DegenerateExtremes(_))
        ));
    }
}
