mod common;

use common::*;
use etaqfi_core::densela::{eig_general, vector};
use etaqfi_core::geometry::{FdScheme, ParamCurve, TrackedBasis};
use etaqfi_core::models::{Coupling, NonreciprocalModel, PtModel, RotatingMetricModel};
use etaqfi_core::pseudoherm::{biorthogonal_system, metric_from_biorthogonal, GaugeTag, MetricGauge};
use etaqfi_core::qfi::{analyze_point, cqfi, identity_residual, sqfi, PointOptions, ProbeFrame, SystemCurves};
use etaqfi_core::system::ParameterizedSystem;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn additive() -> NonreciprocalModel {
    NonreciprocalModel::new(0.0, 0.5, Coupling::Additive).unwrap()
}

fn pt() -> PtModel {
    PtModel::new(1.0, FRAC_PI_2, 2.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn duality_for_worked_models(theta in -0.8f64..1.0, t in 0.1f64..4.0, use_pt in any::<bool>()) {
        let nr = additive();
        let system: &dyn ParameterizedSystem = if use_pt { &pt() } else { &nr };
        let th = if use_pt { theta } else { theta.max(-0.4) };
        let s = analyze_point(system, th, t, &ground(2), &PointOptions::default()).unwrap();
        prop_assume!(!s.flags.contains(&etaqfi_core::qfi::Flag::NearEp));
        prop_assert!(s.duality_deviation() <= 1e-6 * s.sqfi.max(1.0), "{:?}", s);
    }

    #[test]
    fn bound_holds_for_fixed_metric_basis(
        theta in -0.8f64..1.0,
        t in 1e-3f64..3.0,
        seed in any::<u64>(),
        use_pt in any::<bool>(),
    ) {
        let nr = additive();
        let system: &dyn ParameterizedSystem = if use_pt { &pt() } else { &nr };
        let th = if use_pt { theta } else { theta.max(-0.4) };
        let opts = PointOptions { frame: ProbeFrame::Hermitian, ..PointOptions::default() };
        let probe = random_state(&mut rng(seed), 2);
        let s = analyze_point(system, th, t, &probe, &opts).unwrap();
        let bound = s.bound.unwrap();
        prop_assert!(s.cqfi <= bound * (1.0 + 1e-6) + 1e-9, "cqfi {} bound {}", s.cqfi, bound);
    }

    #[test]
    fn fisher_information_is_phase_invariant(theta in -0.4f64..1.0, t in 0.1f64..4.0, alpha in -3.0f64..3.0, seed in any::<u64>()) {
        let m = NonreciprocalModel::new(0.2, 0.5, Coupling::Additive).unwrap();
        let c = SystemCurves::new(&m, t, random_state(&mut rng(seed), 2), GaugeTag::ClosedForm, ProbeFrame::PseudoHermitian).unwrap();
        let psi = c.psi_curve();
        let phase = num_complex::Complex64::from_polar(1.0, alpha);
        let rotated = ParamCurve::new(|th| Ok(vector::scale(&psi.eval(th)?, phase)));
        let eta = c.eta_curve();
        // at step 1e-6 the rounding noise alone is ~1e-10 relative
        let scheme = FdScheme::new(4, 1e-3, false).unwrap();
        prop_assert!((sqfi(&psi, theta, &scheme).unwrap() - sqfi(&rotated, theta, &scheme).unwrap()).abs() <= 1e-9);
        let a = cqfi(&psi, &eta, theta, &scheme).unwrap().value;
        let b = cqfi(&rotated, &eta, theta, &scheme).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn dual_path_identity_on_all_families(theta in -0.6f64..0.6, t in 0.2f64..3.0, seed in any::<u64>(), which in 0usize..3) {
        let nr = additive();
        let pt = pt();
        let rot = RotatingMetricModel::default();
        let system: &dyn ParameterizedSystem = match which {
            0 => &nr,
            1 => &pt,
            _ => &rot,
        };
        let theta = if which == 0 { theta.max(-0.4) } else { theta };
        let c = SystemCurves::new(system, t, random_state(&mut rng(seed), 2), GaugeTag::ClosedForm, ProbeFrame::PseudoHermitian).unwrap();
        let scheme = FdScheme::default();
        let eta = c.eta_curve();
        let tracked = TrackedBasis::around(&eta, theta, &scheme).unwrap();
        let check = identity_residual(&c.psi_curve(), &eta, &tracked, theta, &scheme).unwrap();
        prop_assert!(check.residual <= 1e-5 * check.lhs.max(1.0), "{:?}", check);
    }

    #[test]
    fn nonreciprocal_generic_metric_matches_closed_form(theta in -0.45f64..3.0) {
        let m = additive();
        let cf = m.closed_form(theta).unwrap().unwrap();
        let b = biorthogonal_system(&cf.hamiltonian).unwrap();
        let generic = metric_from_biorthogonal(&b, &MetricGauge::Entry11).unwrap();
        prop_assert!((&generic.eta - &cf.eta).fro_norm() <= 1e-9 * cf.eta.fro_norm());
    }

    #[test]
    fn pt_generic_metric_is_a_positive_multiple(theta in -0.95f64..3.0) {
        let m = pt();
        let cf = m.closed_form(theta).unwrap().unwrap();
        let b = biorthogonal_system(&cf.hamiltonian).unwrap();
        let generic = metric_from_biorthogonal(&b, &MetricGauge::Raw).unwrap();
        let f = cf.eta.trace().re / generic.eta.trace().re;
        prop_assert!(f > 0.0);
        prop_assert!((&generic.eta.scale_real(f) - &cf.eta).fro_norm() <= 1e-9 * cf.eta.fro_norm());
    }

    #[test]
    fn exact_phase_has_real_spectrum_and_hermitian_counterpart(theta in -0.95f64..3.0, use_pt in any::<bool>()) {
        let nr = additive();
        let system: &dyn ParameterizedSystem = if use_pt { &pt() } else { &nr };
        let th = if use_pt { theta } else { theta.max(-0.45) };
        let cf = system.closed_form(th).unwrap().unwrap();
        let e = eig_general(&cf.hamiltonian).unwrap();
        prop_assert!(e.values.iter().all(|z| z.im.abs() <= 1e-10));
        prop_assert!(cf.counterpart.hermiticity_residual() <= 1e-12);
    }
}

#[test]
fn broken_phase_is_reported_past_the_ep() {
    use etaqfi_core::Error;
    assert!(matches!(pt().closed_form(-1.2).unwrap(), Err(Error::BrokenPhase(_))));
    assert!(matches!(additive().closed_form(-1.0).unwrap(), Err(Error::BrokenPhase(_))));
    let h = pt().hamiltonian(-1.5).unwrap();
    let e = eig_general(&h).unwrap();
    assert!(e.values.iter().any(|z| z.im.abs() > 0.1));
}
