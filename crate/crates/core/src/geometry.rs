//! Differential geometry along a single real parameter θ.
//!
//! The connection Γ = ½η⁻¹∂η is the metric-compatible one
//! (∂η = ηΓ + Γ†η), so the covariant derivative D = ∂ + Γ preserves the
//! η-norm of normalized curves.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::densela::{eig_hermitian, vector, Operator};
use crate::error::{Error, Result};

/// Values that finite differences can combine linearly.
pub trait FdValue: Clone + Send + Sync {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self;
}

impl FdValue for f64 {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(c, v)| c * **v).sum()
    }
}

impl FdValue for Vec<Complex64> {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        let n = terms[0].1.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (c, v) in terms {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += x * *c;
            }
        }
        out
    }
}

impl FdValue for Operator {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        let mut out = Operator::zeros(terms[0].1.dim());
        for (c, v) in terms {
            out = &out + &v.scale_real(*c);
        }
        out
    }
}

type Eval<'a, T> = Box<dyn Fn(f64) -> Result<T> + Send + Sync + 'a>;

/// θ ↦ T with an optional analytic derivative.
pub struct ParamCurve<'a, T> {
    eval: Eval<'a, T>,
    derivative: Option<Eval<'a, T>>,
}

pub type OperatorCurve<'a> = ParamCurve<'a, Operator>;
pub type StateCurve<'a> = ParamCurve<'a, Vec<Complex64>>;

impl<'a, T: FdValue> ParamCurve<'a, T> {
    pub fn new(eval: impl Fn(f64) -> Result<T> + Send + Sync + 'a) -> Self {
        Self {
            eval: Box::new(eval),
            derivative: None,
        }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> Result<T> + Send + Sync + 'a) -> Self {
        self.derivative = Some(Box::new(d));
        self
    }

    pub fn eval(&self, theta: f64) -> Result<T> {
        (self.eval)(theta)
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn analytic_derivative(&self, theta: f64) -> Option<Result<T>> {
        self.derivative.as_ref().map(|d| d(theta))
    }

    /// Same curve with the analytic derivative dropped.
    pub fn numeric_only(&self) -> ParamCurve<'_, T> {
        ParamCurve::new(move |th| self.eval(th))
    }
}

impl<T> std::fmt::Debug for ParamCurve<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParamCurve")
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

/// Central finite-difference scheme. The effective step at θ is
/// `step·max(1, |θ|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdScheme {
    pub order: u8,
    pub step: f64,
    #[serde(default)]
    pub richardson: bool,
}

impl Default for FdScheme {
    fn default() -> Self {
        Self {
            order: 2,
            step: 1e-6,
            richardson: false,
        }
    }
}

impl FdScheme {
    pub fn new(order: u8, step: f64, richardson: bool) -> Result<Self> {
        let s = Self {
            order,
            step,
            richardson,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order != 2 && self.order != 4 {
            return Err(Error::InvalidScheme(format!("order must be 2 or 4, got {}", self.order)));
        }
        if !(self.step > 1e-12) || !self.step.is_finite() {
            return Err(Error::InvalidScheme(format!("step must exceed 1e-12, got {}", self.step)));
        }
        Ok(())
    }

    pub fn effective_step(&self, theta: f64) -> f64 {
        self.step * theta.abs().max(1.0)
    }

    /// Offsets (in units of the step) and weights of the central stencil.
    fn weights(&self) -> &'static [(f64, f64)] {
        match self.order {
            4 => &[(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)],
            _ => &[(-1.0, -0.5), (1.0, 0.5)],
        }
    }

    /// Stencil abscissae around θ, ascending, centre included.
    pub fn stencil(&self, theta: f64) -> Vec<f64> {
        let h = self.effective_step(theta);
        let reach = if self.order == 4 { 2 } else { 1 };
        (-reach..=reach).map(|k| theta + k as f64 * h).collect()
    }

    /// Combines values sampled on `stencil(θ)` into a derivative.
    pub fn combine<T: FdValue>(&self, theta: f64, samples: &[T]) -> T {
        let h = self.effective_step(theta);
        let reach = if self.order == 4 { 2 } else { 1 };
        let terms: Vec<(f64, &T)> = self
            .weights()
            .iter()
            .map(|&(off, w)| (w / h, &samples[(off as i32 + reach) as usize]))
            .collect();
        T::lin_comb(&terms)
    }
}

fn fd_at_step<T: FdValue>(curve: &ParamCurve<'_, T>, theta: f64, h: f64, order: u8) -> Result<T> {
    let scheme = FdScheme {
        order,
        step: 1.0,
        richardson: false,
    };
    let mut vals = Vec::new();
    let mut stash = Vec::new();
    for &(off, w) in scheme.weights() {
        let at = theta + off * h;
        let v = curve.eval(at).map_err(|e| Error::EvalFailure {
            theta: at,
            reason: e.to_string(),
        })?;
        stash.push((w / h, v));
    }
    for (w, v) in &stash {
        vals.push((*w, v));
    }
    Ok(T::lin_comb(&vals))
}

/// Finite-difference derivative, ignoring any analytic derivative.
pub fn d_theta_fd<T: FdValue>(curve: &ParamCurve<'_, T>, theta: f64, scheme: &FdScheme) -> Result<T> {
    scheme.validate()?;
    let h = scheme.effective_step(theta);
    let coarse = fd_at_step(curve, theta, h, scheme.order)?;
    if !scheme.richardson {
        return Ok(coarse);
    }
    let fine = fd_at_step(curve, theta, 0.5 * h, scheme.order)?;
    let p = 2f64.powi(scheme.order as i32);
    Ok(T::lin_comb(&[(p / (p - 1.0), &fine), (-1.0 / (p - 1.0), &coarse)]))
}

/// ∂_θ of the curve: analytic when available, finite differences otherwise.
pub fn d_theta<T: FdValue>(curve: &ParamCurve<'_, T>, theta: f64, scheme: &FdScheme) -> Result<T> {
    match curve.analytic_derivative(theta) {
        Some(d) => d,
        None => d_theta_fd(curve, theta, scheme),
    }
}

#[derive(Clone, Debug)]
pub struct Connection {
    pub gamma: Operator,
    pub eta: Operator,
    pub d_eta: Operator,
    /// ‖∂η − ηΓ − Γ†η‖_F
    pub compatibility_residual: f64,
}

/// ‖∂η − ηΓ − Γ†η‖_F
pub fn metric_compatibility_residual(eta: &Operator, d_eta: &Operator, gamma: &Operator) -> f64 {
    let rhs = &eta.matmul(gamma) + &gamma.adjoint().matmul(eta);
    (d_eta - &rhs).fro_norm()
}

fn require_posdef(eta: &Operator) -> Result<()> {
    let e = eig_hermitian(eta)?;
    let lmin = *e.values.last().expect("non-empty");
    if lmin <= 0.0 {
        return Err(Error::NotPositiveDefinite(lmin));
    }
    Ok(())
}

/// Γ_θ = ½η⁻¹∂_θη.
pub fn connection(eta_curve: &OperatorCurve<'_>, theta: f64, scheme: &FdScheme) -> Result<Connection> {
    let eta = eta_curve.eval(theta)?;
    require_posdef(&eta)?;
    let d_eta = d_theta(eta_curve, theta, scheme)?;
    let gamma = eta.solve(&d_eta)?.scale_real(0.5);
    let compatibility_residual = metric_compatibility_residual(&eta, &d_eta, &gamma);
    Ok(Connection {
        gamma,
        eta,
        d_eta,
        compatibility_residual,
    })
}

#[derive(Clone, Debug)]
pub struct CovariantDerivative {
    pub psi: Vec<Complex64>,
    pub d_psi: Vec<Complex64>,
    /// D_θψ = ∂_θψ + Γψ
    pub value: Vec<Complex64>,
    pub connection: Connection,
    /// |∂_θ⟨ψ|ψ⟩_η − 2Re⟨D_θψ|ψ⟩_η|
    pub norm_identity_residual: f64,
}

/// Covariant derivative of an η-normalized state curve.
pub fn covariant_derivative(
    psi_curve: &StateCurve<'_>,
    eta_curve: &OperatorCurve<'_>,
    theta: f64,
    scheme: &FdScheme,
) -> Result<CovariantDerivative> {
    let conn = connection(eta_curve, theta, scheme)?;
    let psi = psi_curve.eval(theta)?;
    let n2 = vector::eta_norm_sqr(&psi, &conn.eta);
    if (n2 - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(n2));
    }
    let d_psi = d_theta(psi_curve, theta, scheme)?;
    let value = vector::add(&d_psi, &conn.gamma.matvec(&psi));

    let norm_curve = ParamCurve::new(|th| {
        let p = psi_curve.eval(th)?;
        let e = eta_curve.eval(th)?;
        Ok(vector::eta_norm_sqr(&p, &e))
    });
    let d_norm = d_theta_fd(&norm_curve, theta, scheme)?;
    let pairing = 2.0 * vector::eta_inner(&value, &conn.eta, &psi).re;
    Ok(CovariantDerivative {
        psi,
        d_psi,
        value,
        connection: conn,
        norm_identity_residual: (d_norm - pairing).abs(),
    })
}

/// Gauge-fixed eigenbases of η(θ) along an ascending grid.
#[derive(Clone, Debug)]
pub struct TrackedBasis {
    pub grid: Vec<f64>,
    pub bases: Vec<Operator>,
    pub lambdas: Vec<Vec<f64>>,
    /// ∂_θU at each grid point.
    pub derivative: Vec<Operator>,
}

impl TrackedBasis {
    /// Index of the grid point at θ (to 1e-12 relative).
    pub fn index_of(&self, theta: f64) -> Option<usize> {
        let tol = 1e-12 * theta.abs().max(1.0);
        self.grid.iter().position(|&g| (g - theta).abs() <= tol)
    }

    /// (U, ∂_θU) at a grid point.
    pub fn at(&self, theta: f64) -> Result<(&Operator, &Operator)> {
        let i = self.index_of(theta).ok_or(Error::TrackingLost(theta))?;
        Ok((&self.bases[i], &self.derivative[i]))
    }

    /// Tracks on the finite-difference stencil around θ and differentiates the
    /// centre with the scheme's own formula. The Richardson flag is not used
    /// here.
    pub fn around(eta_curve: &OperatorCurve<'_>, theta: f64, scheme: &FdScheme) -> Result<Self> {
        scheme.validate()?;
        let grid = scheme.stencil(theta);
        let mut tracked = track_eigenbasis(eta_curve, &grid)?;
        let centre = grid.len() / 2;
        tracked.derivative[centre] = scheme.combine(theta, &tracked.bases);
        Ok(tracked)
    }
}

/// Follows the eigenvectors of η(θ) across the grid by maximal overlap and
/// differentiates the gauge-fixed family.
pub fn track_eigenbasis(eta_curve: &OperatorCurve<'_>, grid: &[f64]) -> Result<TrackedBasis> {
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidScheme("grid must be ascending with at least two points".into()));
    }
    let mut bases: Vec<Operator> = Vec::with_capacity(grid.len());
    let mut lambdas: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    for (i, &th) in grid.iter().enumerate() {
        let eta = eta_curve.eval(th)?;
        let e = eig_hermitian(&eta)?;
        let lmin = *e.values.last().expect("non-empty");
        if lmin <= 0.0 {
            return Err(Error::NotPositiveDefinite(lmin));
        }
        if i == 0 {
            bases.push(e.basis);
            lambdas.push(e.values);
            continue;
        }
        let prev = &bases[i - 1];
        let n = prev.dim();
        let overlap = prev.adjoint().matmul(&e.basis);
        let mut perm = vec![usize::MAX; n];
        let mut taken = vec![false; n];
        for a in 0..n {
            let mut mags: Vec<(usize, f64)> = (0..n).map(|b| (b, overlap[(a, b)].norm())).collect();
            mags.sort_by(|x, y| y.1.total_cmp(&x.1));
            let (best, top) = mags[0];
            let second = mags.get(1).map(|m| m.1).unwrap_or(0.0);
            if top < 0.5 || top - second < 1e-3 || taken[best] {
                return Err(Error::TrackingLost(th));
            }
            taken[best] = true;
            perm[a] = best;
        }
        let mut u = Operator::zeros(n);
        let mut lam = vec![0.0; n];
        for (a, &b) in perm.iter().enumerate() {
            u.set_column(a, &e.basis.column(b));
            lam[a] = e.values[b];
        }
        if prev.adjoint().matmul(&u).trace().re <= 0.0 {
            return Err(Error::TrackingLost(th));
        }
        bases.push(u);
        lambdas.push(lam);
    }
    let derivative = grid_derivative(grid, &bases);
    Ok(TrackedBasis {
        grid: grid.to_vec(),
        bases,
        lambdas,
        derivative,
    })
}

/// Three-point Lagrange derivatives on a possibly non-uniform grid.
fn grid_derivative(grid: &[f64], values: &[Operator]) -> Vec<Operator> {
    let n = grid.len();
    if n == 2 {
        let d = (&values[1] - &values[0]).scale_real(1.0 / (grid[1] - grid[0]));
        return vec![d.clone(), d];
    }
    (0..n)
        .map(|i| {
            let (a, b, c) = if i == 0 {
                (0, 1, 2)
            } else if i == n - 1 {
                (n - 3, n - 2, n - 1)
            } else {
                (i - 1, i, i + 1)
            };
            let x = grid[i];
            let (xa, xb, xc) = (grid[a], grid[b], grid[c]);
            // derivative of the Lagrange basis polynomials at x
            let wa = ((x - xb) + (x - xc)) / ((xa - xb) * (xa - xc));
            let wb = ((x - xa) + (x - xc)) / ((xb - xa) * (xb - xc));
            let wc = ((x - xa) + (x - xb)) / ((xc - xa) * (xc - xb));
            Operator::lin_comb(&[(wa, &values[a]), (wb, &values[b]), (wc, &values[c])])
        })
        .collect()
}
