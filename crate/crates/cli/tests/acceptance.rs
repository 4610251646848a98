//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Reference values come from closed forms or from computations that
//! share no code path with the quantity under test.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use etaqfi_cli::config::SqfiMode;
use etaqfi_cli::presets;
use etaqfi_cli::sweep::run_sweep;
use etaqfi_core::densela::{eig_general, eig_hermitian, expm, vector, Operator};
use etaqfi_core::geometry::{FdScheme, TrackedBasis};
use etaqfi_core::models::{evolve_probe, Coupling, NonreciprocalModel, PolynomialModel, PtModel, RotatingMetricModel};
use etaqfi_core::pseudoherm::GaugeTag;
use etaqfi_core::qfi::{
    analyze_point, identity_residual, optimal_probe, qfi_bound, Flag, PointOptions, ProbeFrame, QfiSample,
    SystemCurves,
};
use etaqfi_core::system::{system_metric, ParameterizedSystem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ground() -> Vec<Complex64> {
    vec![c(1.0, 0.0), c(0.0, 0.0)]
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn additive(delta: f64) -> NonreciprocalModel {
    NonreciprocalModel::new(0.0, delta, Coupling::Additive).unwrap()
}

fn pt() -> PtModel {
    PtModel::new(1.0, FRAC_PI_2, 2.0).unwrap()
}

fn fail_unless(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn s(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    fail_unless(elapsed.as_secs_f64() < limit, || {
        format!("took {:.1} s, limit {limit} s", elapsed.as_secs_f64())
    })
}

/// Pure-state Fisher information 4(⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²) of a flat-normalized
/// curve, by a five-point stencil.
fn fisher_of_curve(psi: impl Fn(f64) -> Vec<Complex64>, theta: f64) -> f64 {
    let h = 1e-3;
    let p = psi(theta);
    let (m2, m1, p1, p2) = (psi(theta - 2.0 * h), psi(theta - h), psi(theta + h), psi(theta + 2.0 * h));
    let d: Vec<Complex64> = (0..p.len())
        .map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h))
        .collect();
    4.0 * (vector::norm_sqr(&d) - vector::inner(&p, &d).norm_sqr())
}

fn duality_row(s: &QfiSample, oracle: f64) -> Result<Option<f64>, String> {
    if s.flags.iter().any(|f| *f != Flag::BoundSmallT) {
        return Ok(None);
    }
    let tol = 1e-6 * oracle.max(1.0);
    fail_unless((oracle - s.cqfi).abs() <= tol, || {
        format!("θ = {}: SQFI(Sψ) = {oracle}, CQFI = {}", s.theta, s.cqfi)
    })?;
    fail_unless((s.sqfi - s.cqfi).abs() <= tol, || {
        format!("θ = {}: pipeline SQFI {} vs CQFI {}", s.theta, s.sqfi, s.cqfi)
    })?;
    Ok(Some((oracle - s.cqfi).abs() / oracle.max(1.0)))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let m = additive(0.5);
    let t = PI;
    let (mut worst, mut used) = (0.0f64, 0);
    for th in linspace(-0.4, 1.0, 100) {
        let sample = analyze_point(&m, th, t, &ground(), &PointOptions::default()).map_err(s)?;
        // S·ψ = cos(wt)|0⟩ − i sin(wt)|1⟩ with w = √(k₁k₂)
        let (k1, k2) = (2.0 + th, 0.5 + th);
        let oracle = (t * (k1 + k2)).powi(2) / (k1 * k2);
        if let Some(d) = duality_row(&sample, oracle)? {
            worst = worst.max(d);
            used += 1;
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("{used} unflagged points, worst relative deviation {worst:.2e}"))
}

fn criterion_2() -> Outcome {
    let m = pt();
    let t = 1.0;
    // S(θ)|0⟩ = (i√λ₊, −i√λ₋)/√2 with λ± = sec α ± tan α; H^H = −w σ_y
    let mapped = |th: f64| {
        let sv: f64 = 2.0 + th;
        let w = (sv * sv - 1.0).sqrt();
        let (sec, tan) = (sv / w, 1.0 / w);
        let a = [c(0.0, (sec + tan).sqrt()), c(0.0, -(sec - tan).sqrt())];
        let (co, si) = ((w * t).cos(), (w * t).sin());
        // exp(i w t σ_y) = cos·I + i sin·σ_y, σ_y = [[0, −i], [i, 0]]
        let v = vec![co * a[0] + si * a[1], -si * a[0] + co * a[1]];
        vector::normalized(&v, None)
    };
    let (mut worst, mut used) = (0.0f64, 0);
    for th in linspace(-0.8, 1.0, 100) {
        let sample = analyze_point(&m, th, t, &ground(), &PointOptions::default()).map_err(s)?;
        if let Some(d) = duality_row(&sample, fisher_of_curve(mapped, th))? {
            worst = worst.max(d);
            used += 1;
        }
    }
    Ok(format!("{used} unflagged points, worst relative deviation {worst:.2e}"))
}

fn small_t_bound(system: &dyn ParameterizedSystem, th: f64, t: f64) -> Result<f64, String> {
    let curves = SystemCurves::new(system, t, ground(), GaugeTag::ClosedForm, ProbeFrame::PseudoHermitian).map_err(s)?;
    let b = qfi_bound(&curves.counterpart_curve(), th, t, &FdScheme::default()).map_err(s)?;
    Ok(b.value)
}

fn criterion_3() -> Outcome {
    let t: f64 = 1e-3;
    let mut worst = 0.0f64;
    let delta: f64 = 0.5;
    for th in [0.0, 0.25, 0.5] {
        let num = (delta * delta + 2.0 * th * delta + 1.0).powi(2);
        let den = delta * (delta + th) * (delta * th + 1.0);
        let expected = num / den * t * t;
        let got = small_t_bound(&additive(delta), th, t)?;
        worst = worst.max((got - expected).abs() / expected);
        fail_unless((got - expected).abs() <= 1e-8 * expected, || format!("nonreciprocal θ = {th}: {got} vs {expected}"))?;
    }
    let (r, phi, s0) = (1.0f64, FRAC_PI_2, 2.0f64);
    for th in [0.0, 0.5, 1.0] {
        let sv = s0 + th;
        let expected = 4.0 * sv * sv / (sv * sv - (r * phi.sin()).powi(2)) * t * t;
        let got = small_t_bound(&pt(), th, t)?;
        worst = worst.max((got - expected).abs() / expected);
        fail_unless((got - expected).abs() <= 1e-8 * expected, || format!("PT θ = {th}: {got} vs {expected}"))?;
    }
    let a = small_t_bound(&additive(0.5), 0.0, t)?;
    let b = small_t_bound(&pt(), 0.0, t)?;
    fail_unless((a - 6.25 * t * t).abs() <= 1e-8 * 6.25 * t * t, || format!("6.25t² vs {a}"))?;
    fail_unless((b - 16.0 / 3.0 * t * t).abs() <= 1e-8 * 16.0 / 3.0 * t * t, || format!("(16/3)t² vs {b}"))?;
    Ok(format!("worst relative deviation {worst:.2e}; θ = 0 gives {:.10}t², {:.10}t²", a / (t * t), b / (t * t)))
}

fn saturation(system: &dyn ParameterizedSystem, t: f64) -> Result<f64, String> {
    let bundle = system_metric(system, 0.0, GaugeTag::ClosedForm).map_err(s)?;
    let curves = SystemCurves::new(system, t, ground(), GaugeTag::ClosedForm, ProbeFrame::Hermitian).map_err(s)?;
    let bound = qfi_bound(&curves.counterpart_curve(), 0.0, t, &FdScheme::default()).map_err(s)?;
    let probe = optimal_probe(&bound.generator.h, &bundle.s, 0.0).map_err(s)?;
    let opts = PointOptions {
        frame: ProbeFrame::Hermitian,
        ..PointOptions::default()
    };
    let sample = analyze_point(system, 0.0, t, &bundle.s.matvec(&probe.amplitudes), &opts).map_err(s)?;
    Ok(sample.cqfi / bound.value)
}

fn criterion_4() -> Outcome {
    let a = saturation(&additive(0.5), 1e-3)?;
    let b = saturation(&pt(), 1e-3)?;
    fail_unless(a >= 0.99 && b >= 0.99, || format!("CQFI/bound = {a:.6}, {b:.6}"))?;
    Ok(format!("CQFI/bound = {a:.6} (nonreciprocal), {b:.6} (PT)"))
}

fn figure1(name: &str, theta_ep: f64) -> Outcome {
    let job = presets::load(name).map_err(s)?.into_job().map_err(s)?;
    let out = run_sweep(&job, 1).map_err(s)?;
    let samples: Vec<&QfiSample> = out.rows.iter().map(|r| r.sample.as_ref().ok_or("failed row")).collect::<Result<_, _>>()?;
    let target = theta_ep + 1e-3;
    let nearest = samples
        .iter()
        .min_by(|a, b| (a.theta - target).abs().total_cmp(&(b.theta - target).abs()))
        .ok_or("empty sweep")?;
    fail_unless(nearest.cqfi > 1e3, || format!("{name}: CQFI {} at θ = {}", nearest.cqfi, nearest.theta))?;
    let last20: Vec<&&QfiSample> = samples.iter().take(20).collect();
    fail_unless(last20.windows(2).all(|w| w[0].cqfi > w[1].cqfi), || {
        format!("{name}: CQFI not monotone approaching the EP")
    })?;
    let sqfi = |x: &QfiSample| match job.config.sqfi_mode {
        SqfiMode::Flat => x.sqfi_flat,
        SqfiMode::Hermitian => x.sqfi,
    };
    let max_sqfi = last20.iter().map(|x| sqfi(x)).fold(0.0, f64::max);
    fail_unless(max_sqfi < 1e2, || format!("{name}: SQFI reaches {max_sqfi}"))?;
    Ok(format!("{name}: CQFI {:.3e} at θ = {}, SQFI ≤ {max_sqfi:.2}", nearest.cqfi, nearest.theta))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let a = figure1("figure1a", -0.5)?;
    let b = figure1("figure1b", -0.2)?;
    within(start.elapsed(), 60.0)?;
    Ok(format!("{a}; {b}"))
}

fn criterion_6() -> Outcome {
    let scheme = FdScheme::default();
    let families: [(Box<dyn ParameterizedSystem>, Vec<f64>); 3] = [
        (Box::new(additive(0.5)), linspace(-0.4, 1.0, 50)),
        (Box::new(pt()), linspace(-0.8, 1.0, 50)),
        (Box::new(RotatingMetricModel::default()), linspace(-0.7, 0.7, 50)),
    ];
    let mut worst = 0.0f64;
    for (system, grid) in &families {
        let curves = SystemCurves::new(system.as_ref(), 1.3, ground(), GaugeTag::ClosedForm, ProbeFrame::PseudoHermitian).map_err(s)?;
        let (psi, eta) = (curves.psi_curve(), curves.eta_curve());
        for &th in grid {
            let tracked = TrackedBasis::around(&eta, th, &scheme).map_err(s)?;
            let chk = identity_residual(&psi, &eta, &tracked, th, &scheme).map_err(s)?;
            let rel = chk.residual / chk.lhs.abs().max(1e-300);
            worst = worst.max(rel);
            fail_unless(rel <= 1e-5, || format!("{} θ = {th}: relative residual {rel:.3e}", system.name()))?;
        }
    }
    Ok(format!("150 points, worst relative residual {worst:.2e}"))
}

/// ∂_θ exp(X(θ)) for anti-Hermitian X through the spectral divided-difference
/// formula.
fn exp_derivative(h: &Operator, dh: &Operator, t: f64) -> Operator {
    let e = eig_hermitian(h).unwrap();
    let w = &e.basis;
    let x: Vec<Complex64> = e.values.iter().map(|&v| c(0.0, -v * t)).collect();
    let dx = w.adjoint().matmul(&dh.scale(c(0.0, -t))).matmul(w);
    let n = h.dim();
    let inner = Operator::from_fn(n, |j, k| {
        let g = if (x[j] - x[k]).norm() < 1e-12 {
            x[j].exp()
        } else {
            (x[j].exp() - x[k].exp()) / (x[j] - x[k])
        };
        g * dx[(j, k)]
    });
    w.matmul(&inner).matmul(&w.adjoint())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let opts = PointOptions {
        gauge: GaugeTag::Entry11,
        ..PointOptions::default()
    };
    let (mut dual, mut oracle_dev) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.gen_range(2..=4);
        let mut herm = || Operator::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).hermitian_part();
        let (a, b) = (herm(), herm());
        let th: f64 = rng.gen_range(-1.0..1.0);
        let t: f64 = rng.gen_range(0.2..2.0);
        let raw: Vec<Complex64> = (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let psi0 = vector::normalized(&raw, None);
        let model = PolynomialModel::new(vec![a.clone(), b.clone()]).map_err(s)?;
        let sample = analyze_point(&model, th, t, &psi0, &opts).map_err(s)?;
        dual = dual.max((sample.cqfi - sample.sqfi).abs());
        let h = &a + &b.scale_real(th);
        let u = expm(&h.scale(c(0.0, -t)));
        let g = u.adjoint().matmul(&exp_derivative(&h, &b, t)).matvec(&psi0);
        let perp = vector::axpy(&g, -vector::inner(&psi0, &g), &psi0);
        let expected = 4.0 * vector::norm_sqr(&perp);
        oracle_dev = oracle_dev.max((sample.cqfi - expected).abs() / expected.max(1.0));
    }
    fail_unless(dual <= 1e-10, || format!("|CQFI − SQFI| = {dual:.3e}"))?;
    fail_unless(oracle_dev <= 1e-8, || format!("oracle deviation {oracle_dev:.3e}"))?;
    Ok(format!("20 cases, |CQFI − SQFI| ≤ {dual:.1e}, oracle deviation {oracle_dev:.1e}"))
}

fn criterion_8() -> Outcome {
    let (mut drift, mut flat) = (0.0f64, 0.0f64);
    let nr = additive(0.5);
    let p = pt();
    for (system, th) in [(&nr as &dyn ParameterizedSystem, 0.3), (&p as &dyn ParameterizedSystem, 0.2)] {
        let norm0 = evolve_probe(system, th, 0.0, &ground(), GaugeTag::ClosedForm).map_err(s)?.eta_norm;
        for t in linspace(0.0, TAU, 20) {
            let e = evolve_probe(system, th, t, &ground(), GaugeTag::ClosedForm).map_err(s)?;
            drift = drift.max((e.eta_norm - norm0).abs());
            if system.name() == "nonreciprocal" {
                let (k1, k2): (f64, f64) = (2.0 + th, 0.5 + th);
                let w = (k1 * k2).sqrt();
                let n_flat = (w * t).cos().powi(2) + (w * t).sin().powi(2) * k2 / k1;
                flat = flat.max((e.flat_norm - n_flat).abs());
            }
        }
    }
    fail_unless(drift <= 1e-10, || format!("η-norm drift {drift:.3e}"))?;
    fail_unless(flat <= 1e-12, || format!("flat norm deviation {flat:.3e}"))?;
    Ok(format!("η-norm drift {drift:.1e}, flat-norm deviation {flat:.1e}"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut tested, mut worst) = (0, 0.0f64);
    while tested < 200 {
        let n = rng.gen_range(1..=8);
        let m = Operator::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let e = eig_general(&m).map_err(s)?;
        if e.vector_condition >= 1e6 {
            continue;
        }
        let p = &e.right_vectors;
        let rebuilt = p.matmul(&Operator::from_diag(&e.values)).matmul(&p.inverse().map_err(s)?);
        worst = worst.max((&rebuilt - &m).fro_norm() / m.fro_norm());
        tested += 1;
    }
    fail_unless(worst <= 1e-9, || format!("reconstruction residual {worst:.3e}"))?;
    let mut expm_dev = 0.0f64;
    for (delta, th) in [(0.5, 0.0), (0.5, 0.6), (0.2, 0.3)] {
        let h = additive(delta).hamiltonian(th).map_err(s)?;
        let (k1, k2): (f64, f64) = (1.0 / delta + th, delta + th);
        let w = (k1 * k2).sqrt();
        for t in linspace(0.0, TAU, 20) {
            let v = expm(&h.scale(c(0.0, -t))).matvec(&ground());
            let exact = [c((w * t).cos(), 0.0), c(0.0, -(k2 / k1).sqrt() * (w * t).sin())];
            expm_dev = expm_dev.max((v[0] - exact[0]).norm().max((v[1] - exact[1]).norm()));
        }
    }
    fail_unless(expm_dev <= 1e-12, || format!("expm deviation {expm_dev:.3e}"))?;
    Ok(format!("{tested} matrices, residual ≤ {worst:.1e}; expm deviation {expm_dev:.1e}"))
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_etaqfi"))
        .args(["verify", "--full"])
        .output()
        .map_err(s)?;
    let elapsed = start.elapsed();
    let failing: Vec<String> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| l.starts_with("FAIL"))
        .map(str::to_owned)
        .collect();
    fail_unless(out.status.success(), || format!("exit {:?}; {}", out.status.code(), failing.join("; ")))?;
    within(elapsed, 300.0)?;
    Ok(format!("exit 0 in {:.1} s", elapsed.as_secs_f64()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("duality, nonreciprocal model", criterion_1),
        ("duality, PT model", criterion_2),
        ("small-t bound formulas", criterion_3),
        ("bound saturation", criterion_4),
        ("divergence at the exceptional point", criterion_5),
        ("dual-path identity", criterion_6),
        ("unitary reduction", criterion_7),
        ("norm conservation", criterion_8),
        ("kernel quality", criterion_9),
        ("verify --full", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}) [{secs:.2} s]: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {} ({name}) [{secs:.2} s]: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
