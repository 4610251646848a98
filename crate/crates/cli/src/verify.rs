//! Self-checks run by `etaqfi verify`.
//!
//! Every check is deterministic for a given seed. The fast level skips the
//! checks that need sweeps of more than 50 points.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::Instant;

use etaqfi_core::densela::{eig_general, eig_hermitian, expm, vector, Operator};
use etaqfi_core::geometry::{connection, covariant_derivative, d_theta_fd, metric_compatibility_residual};
use etaqfi_core::geometry::{track_eigenbasis, FdScheme, ParamCurve, TrackedBasis};
use etaqfi_core::models::{evolve_probe, Coupling, NonreciprocalModel, PolynomialModel, PtModel, RotatingMetricModel};
use etaqfi_core::pseudoherm::{
    biorthogonal_system, check_pseudo_hermiticity, hermitian_counterpart, metric_from_biorthogonal, GaugeTag,
    MetricGauge,
};
use etaqfi_core::qfi::{
    analyze_point, cqfi, identity_residual, optimal_probe, qfi_bound, sqfi, sqfi_raw, Flag, PointOptions,
    ProbeFrame, SystemCurves,
};
use etaqfi_core::system::{system_metric, ParameterizedSystem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{JobConfig, SqfiMode};
use crate::presets;
use crate::sweep::{run_sweep, write_csv, Row};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

/// Deliberate defects, used to confirm that the matching checks catch them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Fixture {
    pub flip_connection_sign: bool,
    pub skip_sqfi_renormalization: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub seed: u64,
    pub results: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.status != Status::Fail)
    }

    pub fn result(&self, name: &str) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.name == name)
    }
}

type Outcome = Result<String, String>;

struct Ctx {
    seed: u64,
    fixture: Fixture,
}

impl Ctx {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

struct Check {
    name: &'static str,
    full_only: bool,
    run: fn(&Ctx) -> Outcome,
}

const CHECKS: &[Check] = &[
    Check { name: "eig_reconstruction", full_only: false, run: eig_reconstruction },
    Check { name: "hermitian_basis_unitarity", full_only: false, run: hermitian_unitarity },
    Check { name: "expm_group_property", full_only: false, run: expm_group },
    Check { name: "expm_closed_form_evolution", full_only: false, run: expm_closed_form },
    Check { name: "generator_hermiticity", full_only: false, run: generator_hermiticity },
    Check { name: "gauge_congruence", full_only: false, run: gauge_congruence },
    Check { name: "counterpart_spectrum_and_round_trip", full_only: false, run: counterpart_checks },
    Check { name: "closed_form_vs_generic_metric", full_only: false, run: closed_form_vs_generic },
    Check { name: "exact_phase_spectrum", full_only: false, run: exact_phase_spectrum },
    Check { name: "metric_compatibility", full_only: false, run: metric_compatibility },
    Check { name: "norm_invariance", full_only: false, run: norm_invariance },
    Check { name: "fd_convergence", full_only: false, run: fd_convergence },
    Check { name: "gauge_stability", full_only: false, run: gauge_stability },
    Check { name: "phase_invariance", full_only: false, run: phase_invariance },
    Check { name: "unitary_reduction", full_only: false, run: unitary_reduction },
    Check { name: "dual_path_identity", full_only: false, run: dual_path_identity },
    Check { name: "identity_closure", full_only: false, run: identity_closure },
    Check { name: "conservation", full_only: false, run: conservation },
    Check { name: "bound_small_t_formulas", full_only: false, run: bound_formulas },
    Check { name: "bound_invariant", full_only: false, run: bound_invariant },
    Check { name: "bound_saturation", full_only: false, run: bound_saturation },
    Check { name: "preset_multiplicative", full_only: false, run: preset_multiplicative },
    Check { name: "preset_pt_bound", full_only: false, run: preset_pt_bound },
    Check { name: "csv_determinism", full_only: false, run: csv_determinism },
    Check { name: "config_round_trip", full_only: false, run: config_round_trip },
    Check { name: "duality_nonreciprocal", full_only: true, run: duality_nonreciprocal },
    Check { name: "duality_pt", full_only: true, run: duality_pt },
    Check { name: "preset_figure1a", full_only: true, run: preset_figure1a },
    Check { name: "preset_figure1b", full_only: true, run: preset_figure1b },
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}

pub fn run_verify(level: Level, seed: u64, fixture: Fixture) -> VerifyReport {
    let ctx = Ctx { seed, fixture };
    let results = CHECKS
        .iter()
        .map(|check| {
            if check.full_only && level == Level::Fast {
                return CheckResult {
                    name: check.name,
                    status: Status::Skip,
                    detail: "sweep longer than 50 points; run with --full".into(),
                    seconds: 0.0,
                };
            }
            let start = Instant::now();
            let outcome = (check.run)(&ctx);
            let seconds = start.elapsed().as_secs_f64();
            let (status, detail) = match outcome {
                Ok(d) => (Status::Pass, d),
                Err(d) => (Status::Fail, d),
            };
            CheckResult {
                name: check.name,
                status,
                detail,
                seconds,
            }
        })
        .collect();
    VerifyReport { level, seed, results }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Operator {
    Operator::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Operator {
    random_matrix(rng, n).hermitian_part()
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    vector::normalized(&v, None)
}

fn random_pseudo_hermitian(rng: &mut ChaCha8Rng, n: usize) -> (Operator, Vec<f64>) {
    let mut values: Vec<f64> = (0..n).map(|k| k as f64 * 1.3 - 1.0 + rng.gen_range(0.0..0.5)).collect();
    let s = &Operator::identity(n).scale_real(2.0) + &random_matrix(rng, n).scale_real(0.5);
    let h = s
        .inverse()
        .expect("2I plus a small perturbation is invertible")
        .matmul(&Operator::from_real_diag(&values))
        .matmul(&s);
    values.sort_by(|a, b| b.total_cmp(a));
    (h, values)
}

fn ground() -> Vec<Complex64> {
    vec![c(1.0, 0.0), c(0.0, 0.0)]
}

fn additive(delta: f64) -> NonreciprocalModel {
    NonreciprocalModel::new(0.0, delta, Coupling::Additive).expect("valid model")
}

fn pt() -> PtModel {
    PtModel::new(1.0, FRAC_PI_2, 2.0).expect("valid model")
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn eig_reconstruction(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(1);
    let (mut tested, mut worst) = (0, 0.0f64);
    while tested < 200 {
        let n = rng.gen_range(1..=8);
        let m = random_matrix(&mut rng, n);
        let e = eig_general(&m).map_err(err)?;
        if e.vector_condition >= 1e6 {
            continue;
        }
        let p = &e.right_vectors;
        let rebuilt = p.matmul(&Operator::from_diag(&e.values)).matmul(&p.inverse().map_err(err)?);
        let rel = (&rebuilt - &m).fro_norm() / m.fro_norm();
        worst = worst.max(rel);
        tested += 1;
    }
    ensure(worst <= 1e-9, || format!("worst relative residual {worst:.3e}"))?;
    Ok(format!("{tested} matrices, worst relative residual {worst:.3e}"))
}

fn hermitian_unitarity(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let e = eig_hermitian(&random_hermitian(&mut rng, n)).map_err(err)?;
        worst = worst.max((&e.basis.adjoint().matmul(&e.basis) - &Operator::identity(n)).fro_norm());
    }
    ensure(worst <= 1e-12, || format!("‖U†U − I‖ = {worst:.3e}"))?;
    Ok(format!("worst ‖U†U − I‖ {worst:.3e}"))
}

fn expm_group(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let m = random_matrix(&mut rng, n);
        let m = m.scale_real(rng.gen_range(0.1..5.0) / m.spectral_norm());
        let (t1, t2) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let lhs = expm(&m.scale_real(t1 + t2));
        let rhs = expm(&m.scale_real(t1)).matmul(&expm(&m.scale_real(t2)));
        worst = worst.max((&lhs - &rhs).fro_norm() / lhs.fro_norm().max(1.0));
    }
    ensure(worst <= 1e-10, || format!("worst deviation {worst:.3e}"))?;
    Ok(format!("worst deviation {worst:.3e}"))
}

fn expm_closed_form(_: &Ctx) -> Outcome {
    let mut worst = 0.0f64;
    for (delta, theta) in [(0.5, 0.0), (0.5, 0.7), (0.2, -0.1)] {
        let m = additive(delta);
        let (k1, k2) = (1.0 / delta + theta, delta + theta);
        let w = (k1 * k2).sqrt();
        for t in linspace(0.0, TAU, 20) {
            let state = evolve_probe(&m, theta, t, &ground(), GaugeTag::ClosedForm).map_err(err)?.state;
            let exact = [c((w * t).cos(), 0.0), c(0.0, -(k2 / k1).sqrt() * (w * t).sin())];
            worst = worst.max((state[0] - exact[0]).norm().max((state[1] - exact[1]).norm()));
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:.3e}"))?;
    Ok(format!("max deviation {worst:.3e}"))
}

fn generator_hermiticity(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(5);
    let scheme = FdScheme::new(2, 1e-5, false).map_err(err)?;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(2..=4);
        let (a, b) = (random_hermitian(&mut rng, n), random_hermitian(&mut rng, n));
        let family = ParamCurve::new(|th: f64| Ok(expm(&(&a + &b.scale_real(th)).scale(c(0.0, -1.0)))));
        let th = rng.gen_range(-1.0..1.0);
        let v = family.eval(th).map_err(err)?;
        let dv = d_theta_fd(&family, th, &scheme).map_err(err)?;
        let h = v.matmul(&dv.adjoint()).scale(c(0.0, 1.0));
        worst = worst.max(h.hermiticity_residual());
    }
    ensure(worst <= 1e-6, || format!("‖h − h†‖ = {worst:.3e}"))?;
    Ok(format!("worst ‖h − h†‖ {worst:.3e}"))
}

fn gauge_congruence(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(6);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let n = rng.gen_range(2..=5);
        let (h, _) = random_pseudo_hermitian(&mut rng, n);
        let b = biorthogonal_system(&h).map_err(err)?;
        for g in [MetricGauge::Raw, MetricGauge::Entry11] {
            let m = metric_from_biorthogonal(&b, &g).map_err(err)?;
            worst = worst.max(check_pseudo_hermiticity(&h, &m.eta));
            let gram = b.right.adjoint().matmul(&m.eta).matmul(&b.right);
            ensure(gram.is_diagonal(1e-9 * gram.fro_norm()), || "metric not diagonal in the eigenbasis".into())?;
            ensure(gram.diagonal().iter().all(|z| z.re > 0.0), || "non-positive mode weight".into())?;
        }
    }
    ensure(worst <= 1e-10, || format!("pseudo-Hermiticity residual {worst:.3e}"))?;
    Ok(format!("worst pseudo-Hermiticity residual {worst:.3e}"))
}

fn counterpart_checks(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(7);
    let (mut spec, mut trip, mut foot, mut rot) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..30 {
        let n = rng.gen_range(2..=5);
        let (h, values) = random_pseudo_hermitian(&mut rng, n);
        let b = biorthogonal_system(&h).map_err(err)?;
        let m = metric_from_biorthogonal(&b, &MetricGauge::Entry11).map_err(err)?;
        let hh = hermitian_counterpart(&h, &m.s).map_err(err)?.hamiltonian;
        let got = eig_hermitian(&hh.hermitian_part()).map_err(err)?.values;
        for (x, y) in got.iter().zip(&values) {
            spec = spec.max((x - y).abs());
        }
        let back = m.s.solve(&hh.matmul(&m.s)).map_err(err)?;
        trip = trip.max((&back - &h).fro_norm() / h.fro_norm());
        let t = expm(&random_hermitian(&mut rng, n).scale(c(0.0, 2.0)));
        let ts = t.matmul(&m.s);
        foot = foot.max((&ts.adjoint().matmul(&ts) - &m.eta).fro_norm() / m.eta.fro_norm());
        let rotated = hermitian_counterpart(&h, &ts).map_err(err)?.hamiltonian;
        let expected = t.matmul(&hh).matmul(&t.adjoint());
        rot = rot.max((&rotated - &expected).fro_norm() / h.fro_norm());
    }
    ensure(spec <= 1e-9, || format!("spectrum deviation {spec:.3e}"))?;
    ensure(trip <= 1e-10, || format!("round trip {trip:.3e}"))?;
    ensure(foot <= 1e-12, || format!("η changed under S → T·S by {foot:.3e}"))?;
    ensure(rot <= 1e-9, || format!("H^H not rotated by T: {rot:.3e}"))?;
    Ok(format!("spectrum {spec:.1e}, round trip {trip:.1e}, η under S → T·S {foot:.1e}"))
}

fn closed_form_vs_generic(_: &Ctx) -> Outcome {
    let (mut nr, mut ptw, mut factor) = (0.0f64, 0.0f64, 0.0);
    let m = additive(0.5);
    for th in linspace(-0.45, 2.0, 25) {
        let cf = m.closed_form(th).expect("closed form").map_err(err)?;
        let g = metric_from_biorthogonal(&biorthogonal_system(&cf.hamiltonian).map_err(err)?, &MetricGauge::Entry11)
            .map_err(err)?;
        nr = nr.max((&g.eta - &cf.eta).fro_norm() / cf.eta.fro_norm());
    }
    let p = pt();
    for th in linspace(-0.9, 2.0, 25) {
        let bundle = system_metric(&p, th, GaugeTag::ClosedForm).map_err(err)?;
        let f = bundle.congruence_factor.ok_or("no congruence factor reported")?;
        let g = metric_from_biorthogonal(&biorthogonal_system(&p.hamiltonian(th).map_err(err)?).map_err(err)?, &MetricGauge::Raw)
            .map_err(err)?;
        ensure(f > 0.0, || format!("congruence factor {f} at θ = {th}"))?;
        ptw = ptw.max((&g.eta.scale_real(f) - &bundle.eta).fro_norm() / bundle.eta.fro_norm());
        factor = f;
    }
    ensure(nr <= 1e-9, || format!("nonreciprocal deviation {nr:.3e}"))?;
    ensure(ptw <= 1e-9, || format!("PT deviation after rescaling {ptw:.3e}"))?;
    Ok(format!("nonreciprocal {nr:.1e}, PT {ptw:.1e} (last factor {factor:.6})"))
}

fn exact_phase_spectrum(_: &Ctx) -> Outcome {
    let nr = additive(0.5);
    let p = pt();
    let cases: [(&dyn ParameterizedSystem, Vec<f64>, f64); 2] =
        [(&nr, linspace(-0.45, 2.0, 25), -1.0), (&p, linspace(-0.95, 2.0, 25), -1.5)];
    let (mut im, mut herm) = (0.0f64, 0.0f64);
    for (system, grid, broken) in cases {
        for th in grid {
            let cf = system.closed_form(th).expect("closed form").map_err(err)?;
            let e = eig_general(&cf.hamiltonian).map_err(err)?;
            im = e.values.iter().fold(im, |a, z| a.max(z.im.abs()));
            herm = herm.max(cf.counterpart.hermiticity_residual());
        }
        ensure(
            matches!(system.closed_form(broken), Some(Err(etaqfi_core::Error::BrokenPhase(_)))),
            || format!("{} not reported broken at θ = {broken}", system.name()),
        )?;
    }
    ensure(im <= 1e-10, || format!("imaginary part {im:.3e}"))?;
    ensure(herm <= 1e-12, || format!("counterpart non-Hermiticity {herm:.3e}"))?;
    Ok(format!("max |Im λ| {im:.1e}, counterpart residual {herm:.1e}"))
}

fn metric_compatibility(ctx: &Ctx) -> Outcome {
    let nr = additive(0.5);
    let p = pt();
    let rot = RotatingMetricModel::default();
    let cases: [(&dyn ParameterizedSystem, Vec<f64>); 3] = [
        (&nr, linspace(-0.4, 1.0, 8)),
        (&p, linspace(-0.8, 1.0, 8)),
        (&rot, linspace(-0.7, 0.7, 8)),
    ];
    let mut worst = 0.0f64;
    for (system, grid) in cases {
        for gauge in [GaugeTag::ClosedForm, GaugeTag::Raw] {
            let curves = SystemCurves::new(system, 1.0, ground(), gauge, ProbeFrame::PseudoHermitian).map_err(err)?;
            for &th in &grid {
                let conn = connection(&curves.eta_curve(), th, &FdScheme::default()).map_err(err)?;
                let gamma = if ctx.fixture.flip_connection_sign {
                    conn.gamma.scale_real(-1.0)
                } else {
                    conn.gamma
                };
                let r = metric_compatibility_residual(&conn.eta, &conn.d_eta, &gamma);
                let rel = r / (1e-6 * conn.d_eta.fro_norm() + 1e-10);
                worst = worst.max(rel);
                ensure(rel <= 1.0, || format!("{} θ = {th}: residual {r:.3e}", system.name()))?;
            }
        }
    }
    Ok(format!("worst residual {worst:.3} of tolerance"))
}

fn norm_invariance(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(11);
    let nr = NonreciprocalModel::new(0.3, 0.5, Coupling::Additive).map_err(err)?;
    let p = pt();
    let mut worst = 0.0f64;
    for k in 0..20 {
        let (system, th): (&dyn ParameterizedSystem, f64) = if k % 2 == 0 {
            (&nr, rng.gen_range(-0.4..1.0))
        } else {
            (&p, rng.gen_range(-0.8..1.0))
        };
        let t = rng.gen_range(0.1..5.0);
        let curves = SystemCurves::new(system, t, random_state(&mut rng, 2), GaugeTag::ClosedForm, ProbeFrame::PseudoHermitian)
            .map_err(err)?;
        let cov = covariant_derivative(&curves.psi_curve(), &curves.eta_curve(), th, &FdScheme::default()).map_err(err)?;
        let pairing = 2.0 * vector::eta_inner(&cov.value, &cov.connection.eta, &cov.psi).re;
        worst = worst.max(pairing.abs());
    }
    ensure(worst <= 1e-6, || format!("|2Re⟨Dψ|ψ⟩_η| = {worst:.3e}"))?;
    Ok(format!("max |2Re⟨Dψ|ψ⟩_η| {worst:.3e}"))
}

fn fd_convergence(_: &Ctx) -> Outcome {
    let curve = ParamCurve::new(|th: f64| Ok((2.0 * th).sin() + th.powi(3)));
    let exact = |th: f64| 2.0 * (2.0 * th).cos() + 3.0 * th * th;
    let mut ratios = Vec::new();
    for th in [-0.7, 0.3, 1.1] {
        let e = |h: f64| -> Result<f64, String> {
            let s = FdScheme::new(2, h, false).map_err(err)?;
            Ok((d_theta_fd(&curve, th, &s).map_err(err)? - exact(th)).abs())
        };
        let r = e(1e-2)? / e(1e-3)?;
        ensure((r - 100.0).abs() < 5.0, || format!("θ = {th}: error ratio {r:.2} over a decade"))?;
        ratios.push(r);
    }
    Ok(format!("error ratios per decade {ratios:.1?}"))
}

fn gauge_stability(_: &Ctx) -> Outcome {
    let m = RotatingMetricModel::default();
    let curves = SystemCurves::new(&m, 1.0, ground(), GaugeTag::ClosedForm, ProbeFrame::PseudoHermitian).map_err(err)?;
    let eta = curves.eta_curve();
    let coarse = linspace(-0.6, 0.6, 13);
    let fine = linspace(-0.6, 0.6, 25);
    let a = track_eigenbasis(&eta, &coarse).map_err(err)?;
    let b = track_eigenbasis(&eta, &fine).map_err(err)?;
    let worst = a
        .bases
        .iter()
        .enumerate()
        .map(|(i, u)| (u - &b.bases[2 * i]).fro_norm())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-8, || format!("basis moved by {worst:.3e}"))?;
    Ok(format!("max basis change {worst:.3e}"))
}

fn phase_invariance(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(14);
    let m = NonreciprocalModel::new(0.2, 0.5, Coupling::Additive).map_err(err)?;
    let scheme = FdScheme::new(4, 1e-3, false).map_err(err)?;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let th = rng.gen_range(-0.4..1.0);
        let curves = SystemCurves::new(&m, rng.gen_range(0.1..4.0), random_state(&mut rng, 2), GaugeTag::ClosedForm, ProbeFrame::PseudoHermitian)
            .map_err(err)?;
        let psi = curves.psi_curve();
        let eta = curves.eta_curve();
        // a unit phase, then a phase with a rescaling the estimator must undo
        for z in [Complex64::from_polar(1.0, rng.gen_range(-PI..PI)), Complex64::from_polar(1.7, 0.4)] {
            let moved = ParamCurve::new(|th| Ok(vector::scale(&psi.eval(th)?, z)));
            let base = sqfi(&psi, th, &scheme).map_err(err)?;
            let shifted = if ctx.fixture.skip_sqfi_renormalization {
                sqfi_raw(&moved, th, &scheme).map_err(err)?
            } else {
                sqfi(&moved, th, &scheme).map_err(err)?
            };
            worst = worst.max((base - shifted).abs());
            if z.norm() == 1.0 {
                let a = cqfi(&psi, &eta, th, &scheme).map_err(err)?.value;
                let b = cqfi(&moved, &eta, th, &scheme).map_err(err)?.value;
                worst = worst.max((a - b).abs());
            }
        }
    }
    ensure(worst <= 1e-9, || format!("Fisher information changed by {worst:.3e}"))?;
    Ok(format!("max change {worst:.3e}"))
}

/// ∂_θ exp(X(θ)) from the upper-right block of exp([[X, ∂X], [0, X]]).
fn block_exp_derivative(x: &Operator, dx: &Operator) -> Operator {
    let n = x.dim();
    let big = Operator::from_fn(2 * n, |i, j| match (i < n, j < n) {
        (true, true) => x[(i, j)],
        (true, false) => dx[(i, j - n)],
        (false, false) => x[(i - n, j - n)],
        (false, true) => c(0.0, 0.0),
    });
    let e = expm(&big);
    Operator::from_fn(n, |i, j| e[(i, j + n)])
}

fn unitary_reduction(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(15);
    let opts = PointOptions {
        gauge: GaugeTag::Entry11,
        ..PointOptions::default()
    };
    let (mut dual, mut oracle) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.gen_range(2..=4);
        let (a, b) = (random_hermitian(&mut rng, n), random_hermitian(&mut rng, n));
        let (th, t) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.2..2.0));
        let psi0 = random_state(&mut rng, n);
        let model = PolynomialModel::new(vec![a.clone(), b.clone()]).map_err(err)?;
        let s = analyze_point(&model, th, t, &psi0, &opts).map_err(err)?;
        dual = dual.max((s.cqfi - s.sqfi).abs());
        let x = (&a + &b.scale_real(th)).scale(c(0.0, -t));
        let u = expm(&x);
        let du = block_exp_derivative(&x, &b.scale(c(0.0, -t)));
        let g = u.adjoint().matmul(&du).matvec(&psi0);
        let overlap = vector::inner(&psi0, &g);
        let perp = vector::axpy(&g, -overlap, &psi0);
        let expected = 4.0 * vector::norm_sqr(&perp);
        oracle = oracle.max((s.cqfi - expected).abs() / expected.max(1.0));
    }
    ensure(dual <= 1e-10, || format!("|cqfi − sqfi| = {dual:.3e}"))?;
    ensure(oracle <= 1e-8, || format!("oracle deviation {oracle:.3e}"))?;
    Ok(format!("|cqfi − sqfi| {dual:.1e}, oracle {oracle:.1e}"))
}

fn families() -> Vec<(Box<dyn ParameterizedSystem>, Vec<f64>)> {
    vec![
        (Box::new(additive(0.5)), linspace(-0.4, 1.0, 50)),
        (Box::new(pt()), linspace(-0.8, 1.0, 50)),
        (Box::new(RotatingMetricModel::default()), linspace(-0.7, 0.7, 50)),
    ]
}

fn dual_path_identity(_: &Ctx) -> Outcome {
    let scheme = FdScheme::default();
    let mut worst = 0.0f64;
    for (system, grid) in families() {
        let curves = SystemCurves::new(system.as_ref(), 1.3, ground(), GaugeTag::ClosedForm, ProbeFrame::PseudoHermitian)
            .map_err(err)?;
        let (psi, eta) = (curves.psi_curve(), curves.eta_curve());
        for th in grid {
            let tracked = TrackedBasis::around(&eta, th, &scheme).map_err(err)?;
            let check = identity_residual(&psi, &eta, &tracked, th, &scheme).map_err(err)?;
            let rel = check.residual / check.lhs.abs().max(1e-12);
            worst = worst.max(rel);
            ensure(rel <= 1e-5, || format!("{} θ = {th}: relative residual {rel:.3e}", system.name()))?;
        }
    }
    Ok(format!("150 points, worst relative residual {worst:.3e}"))
}

fn identity_closure(_: &Ctx) -> Outcome {
    let mut worst = 0.0f64;
    for (system, grid) in families() {
        for th in grid.into_iter().step_by(5) {
            let s = analyze_point(system.as_ref(), th, 1.3, &ground(), &PointOptions::default()).map_err(err)?;
            if s.flags.iter().any(|f| *f != Flag::BoundSmallT) {
                continue;
            }
            let r = s.closure_residual.ok_or("closure missing on an unflagged sample")?;
            let rel = r / s.sqfi.max(1.0);
            worst = worst.max(rel);
            ensure(rel <= 1e-6, || format!("{} θ = {th}: closure {r:.3e}", system.name()))?;
            ensure(s.sqfi >= 0.0 && s.cqfi >= 0.0 && s.bound.unwrap_or(0.0) >= 0.0, || "negative information".into())?;
        }
    }
    Ok(format!("worst closure {worst:.3e}"))
}

fn conservation(_: &Ctx) -> Outcome {
    let (mut drift, mut flat) = (0.0f64, 0.0f64);
    let nr = additive(0.5);
    let p = pt();
    for (system, th) in [(&nr as &dyn ParameterizedSystem, 0.3), (&p as &dyn ParameterizedSystem, 0.2)] {
        let initial = evolve_probe(system, th, 0.0, &ground(), GaugeTag::ClosedForm).map_err(err)?.eta_norm;
        for t in linspace(0.0, TAU, 20) {
            let e = evolve_probe(system, th, t, &ground(), GaugeTag::ClosedForm).map_err(err)?;
            drift = drift.max((e.eta_norm - initial).abs());
            if system.name() == "nonreciprocal" {
                let (k1, k2) = (2.0 + th, 0.5 + th);
                let w = (k1 * k2).sqrt();
                let expected = (w * t).cos().powi(2) + (w * t).sin().powi(2) * k2 / k1;
                flat = flat.max((e.flat_norm - expected).abs());
            }
        }
    }
    ensure(drift <= 1e-10, || format!("η-norm drift {drift:.3e}"))?;
    ensure(flat <= 1e-12, || format!("flat norm deviation {flat:.3e}"))?;
    Ok(format!("η-norm drift {drift:.1e}, flat norm {flat:.1e}"))
}

fn small_t_bound(system: &dyn ParameterizedSystem, th: f64, t: f64) -> Result<f64, String> {
    let curves = SystemCurves::new(system, t, ground(), GaugeTag::ClosedForm, ProbeFrame::PseudoHermitian).map_err(err)?;
    let bound = qfi_bound(&curves.counterpart_curve(), th, t, &FdScheme::default()).map_err(err)?;
    Ok(bound.value)
}

fn bound_formulas(_: &Ctx) -> Outcome {
    let t: f64 = 1e-3;
    let mut worst = 0.0f64;
    let nr = additive(0.5);
    for th in [0.0, 0.25, 0.5] {
        let (k1, k2): (f64, f64) = (2.0 + th, 0.5 + th);
        let expected = (t * (k1 + k2) / (k1 * k2).sqrt()).powi(2);
        let got = small_t_bound(&nr, th, t)?;
        worst = worst.max((got - expected).abs() / expected);
    }
    let p = pt();
    for th in [0.0, 0.5, 1.0] {
        let sv: f64 = 2.0 + th;
        let expected = 4.0 * t * t * sv * sv / (sv * sv - 1.0);
        let got = small_t_bound(&p, th, t)?;
        worst = worst.max((got - expected).abs() / expected);
    }
    ensure(worst <= 1e-8, || format!("relative deviation {worst:.3e}"))?;
    let a = small_t_bound(&nr, 0.0, t)? / (t * t);
    let b = small_t_bound(&p, 0.0, t)? / (t * t);
    ensure((a - 6.25).abs() <= 1e-8 * 6.25, || format!("nonreciprocal bound/t² = {a}"))?;
    ensure((b - 16.0 / 3.0).abs() <= 1e-8 * 16.0 / 3.0, || format!("PT bound/t² = {b}"))?;
    Ok(format!("worst relative deviation {worst:.1e}; bound/t² = {a:.10}, {b:.10}"))
}

fn bound_invariant(ctx: &Ctx) -> Outcome {
    let mut rng = ctx.rng(20);
    let opts = PointOptions {
        frame: ProbeFrame::Hermitian,
        ..PointOptions::default()
    };
    let nr = additive(0.5);
    let p = pt();
    let mut worst = 0.0f64;
    for k in 0..40 {
        let (system, th): (&dyn ParameterizedSystem, f64) = if k % 2 == 0 {
            (&nr, rng.gen_range(-0.4..1.0))
        } else {
            (&p, rng.gen_range(-0.8..1.0))
        };
        let t = [1e-3, 0.3, 1.0, 2.5][k % 4];
        let s = analyze_point(system, th, t, &random_state(&mut rng, 2), &opts).map_err(err)?;
        let b = s.bound.ok_or("missing bound")?;
        worst = worst.max(s.cqfi / b);
        ensure(s.cqfi <= b * (1.0 + 1e-6) + 1e-9, || {
            format!("{} θ = {th} t = {t}: cqfi {} > bound {b}", system.name(), s.cqfi)
        })?;
    }
    Ok(format!("40 points, max cqfi/bound {worst:.6}"))
}

fn saturation_ratio(system: &dyn ParameterizedSystem, t: f64) -> Result<f64, String> {
    let bundle = system_metric(system, 0.0, GaugeTag::ClosedForm).map_err(err)?;
    let curves = SystemCurves::new(system, t, ground(), GaugeTag::ClosedForm, ProbeFrame::Hermitian).map_err(err)?;
    let bound = qfi_bound(&curves.counterpart_curve(), 0.0, t, &FdScheme::default()).map_err(err)?;
    let probe = optimal_probe(&bound.generator.h, &bundle.s, 0.0).map_err(err)?;
    // the Hermitian frame takes the Hermitian-side vector S·ψ
    let hermitian_side = bundle.s.matvec(&probe.amplitudes);
    let opts = PointOptions {
        frame: ProbeFrame::Hermitian,
        ..PointOptions::default()
    };
    let s = analyze_point(system, 0.0, t, &hermitian_side, &opts).map_err(err)?;
    Ok(s.cqfi / bound.value)
}

fn bound_saturation(_: &Ctx) -> Outcome {
    let a = saturation_ratio(&additive(0.5), 1e-3)?;
    let b = saturation_ratio(&pt(), 1e-3)?;
    ensure(a >= 0.99 && b >= 0.99, || format!("cqfi/bound = {a:.6}, {b:.6}"))?;
    Ok(format!("cqfi/bound = {a:.6} (nonreciprocal), {b:.6} (PT)"))
}

fn preset_rows(name: &str) -> Result<(JobConfig, Vec<Row>), String> {
    let cfg = presets::load(name).map_err(err)?;
    let job = cfg.into_job().map_err(err)?;
    let out = run_sweep(&job, 1).map_err(err)?;
    Ok((job.config, out.rows))
}

fn preset_multiplicative(_: &Ctx) -> Outcome {
    let (cfg, rows) = preset_rows("multiplicative")?;
    let expected = 4.0 * cfg.time * cfg.time;
    let mut worst = 0.0f64;
    for r in &rows {
        let s = r.sample.as_ref().ok_or_else(|| format!("θ = {} failed: {:?}", r.theta, r.error))?;
        worst = worst.max((s.bound.ok_or("missing bound")? - expected).abs() / expected);
    }
    ensure(worst <= 1e-8, || format!("bound deviates from 4t² by {worst:.3e}"))?;
    Ok(format!("{} rows, bound = 4t² to {worst:.1e}", rows.len()))
}

fn preset_pt_bound(_: &Ctx) -> Outcome {
    let (_, rows) = preset_rows("pt-bound")?;
    let mut violations = 0;
    for r in &rows {
        let s = r.sample.as_ref().ok_or_else(|| format!("θ = {} failed: {:?}", r.theta, r.error))?;
        if s.cqfi > s.bound.unwrap_or(0.0) * (1.0 + 1e-6) + 1e-9 {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} bound violations"))?;
    Ok(format!("{} rows within the bound", rows.len()))
}

fn csv_determinism(_: &Ctx) -> Outcome {
    let render = |workers: usize| -> Result<Vec<u8>, String> {
        let job = presets::load("pt-bound").map_err(err)?.into_job().map_err(err)?;
        let out = run_sweep(&job, workers).map_err(err)?;
        let mut buf = Vec::new();
        write_csv(&mut buf, &out.rows, job.config.time, job.config.sqfi_mode).map_err(err)?;
        Ok(buf)
    };
    let one = render(1)?;
    ensure(one == render(1)?, || "two runs differ".into())?;
    ensure(one == render(4)?, || "1 and 4 workers differ".into())?;
    Ok(format!("{} bytes identical across runs and worker counts", one.len()))
}

fn config_round_trip(_: &Ctx) -> Outcome {
    for name in presets::NAMES {
        let job = presets::load(name).map_err(err)?.into_job().map_err(err)?;
        let echoed = JobConfig::from_json(&job.config.to_json()).map_err(err)?;
        ensure(echoed == job.config, || format!("preset {name} does not round-trip"))?;
        let again = echoed.into_job().map_err(err)?;
        ensure(again.scheme == job.scheme && again.probe == job.probe, || format!("preset {name} resolves differently"))?;
    }
    Ok(format!("{} presets round-trip", presets::NAMES.len()))
}

fn duality_sweep(system: &dyn ParameterizedSystem, grid: Vec<f64>, t: f64) -> Outcome {
    let (mut worst, mut used) = (0.0f64, 0);
    for th in grid {
        let s = analyze_point(system, th, t, &ground(), &PointOptions::default()).map_err(err)?;
        if s.is_flagged() && !s.flags.iter().all(|f| *f == Flag::BoundSmallT) {
            continue;
        }
        used += 1;
        let rel = s.duality_deviation() / s.sqfi.max(1.0);
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("θ = {th}: |sqfi − cqfi| = {:.3e}", s.duality_deviation()))?;
    }
    Ok(format!("{used} unflagged points, worst {worst:.3e}"))
}

fn duality_nonreciprocal(_: &Ctx) -> Outcome {
    duality_sweep(&additive(0.5), linspace(-0.4, 1.0, 100), PI)
}

fn duality_pt(_: &Ctx) -> Outcome {
    duality_sweep(&pt(), linspace(-0.8, 1.0, 100), 1.0)
}

/// CQFI diverges and the flat SQFI stays bounded on the 20 points nearest
/// the exceptional point.
pub fn figure1_properties(cfg: &JobConfig, rows: &[Row], theta_ep: f64) -> Outcome {
    let samples: Vec<_> = rows.iter().filter_map(|r| r.sample.as_ref()).collect();
    ensure(samples.len() == rows.len(), || "sweep has failed points".into())?;
    ensure(samples.len() >= 20, || "fewer than 20 points".into())?;
    let target = theta_ep + 1e-3;
    let nearest = samples
        .iter()
        .min_by(|a, b| (a.theta - target).abs().total_cmp(&(b.theta - target).abs()))
        .expect("non-empty");
    ensure(nearest.cqfi > 1e3, || format!("cqfi {} at θ = {}", nearest.cqfi, nearest.theta))?;
    let near: Vec<_> = samples.iter().take(20).collect();
    for w in near.windows(2) {
        ensure(w[0].cqfi > w[1].cqfi, || format!("cqfi not increasing towards the EP at θ = {}", w[0].theta))?;
    }
    let sqfi_col = |s: &etaqfi_core::qfi::QfiSample| match cfg.sqfi_mode {
        SqfiMode::Flat => s.sqfi_flat,
        SqfiMode::Hermitian => s.sqfi,
    };
    let max_sqfi = near.iter().map(|s| sqfi_col(s)).fold(0.0, f64::max);
    ensure(max_sqfi < 1e2, || format!("sqfi reaches {max_sqfi}"))?;
    Ok(format!(
        "cqfi {:.3e} at θ = {:.6}, max sqfi {max_sqfi:.3} on the last 20 points",
        nearest.cqfi, nearest.theta
    ))
}

fn preset_figure1a(_: &Ctx) -> Outcome {
    let (cfg, rows) = preset_rows("figure1a")?;
    figure1_properties(&cfg, &rows, -0.5)
}

fn preset_figure1b(_: &Ctx) -> Outcome {
    let (cfg, rows) = preset_rows("figure1b")?;
    figure1_properties(&cfg, &rows, -0.2)
}
