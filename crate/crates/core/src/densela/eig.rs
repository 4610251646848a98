//! General complex eigensolver: Householder reduction to Hessenberg form,
//! single-shift QR to complex Schur form, eigenvectors by back-substitution on
//! the triangular factor.

use num_complex::Complex64;

use super::{vector, Operator};
use crate::error::{Error, Result};

/// Eigenvector matrices with a condition number above this are flagged.
pub const NEAR_DEFECTIVE_CONDITION: f64 = 1e12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<Complex64>,
    /// Columns are unit-norm right eigenvectors, ordered like `values`.
    pub right_vectors: Operator,
    /// 1-norm condition number of `right_vectors`.
    pub vector_condition: f64,
}

impl EigenSystem {
    pub fn near_defective(&self) -> bool {
        self.vector_condition > NEAR_DEFECTIVE_CONDITION
    }

    /// max_i ‖M·v_i − λ_i·v_i‖
    pub fn max_residual(&self, m: &Operator) -> f64 {
        (0..self.values.len())
            .map(|i| {
                let v = self.right_vectors.column(i);
                let mv = m.matvec(&v);
                vector::norm(&vector::axpy(&mv, -self.values[i], &v))
            })
            .fold(0.0, f64::max)
    }
}

/// Eigen-decomposition of a general square matrix.
///
/// Values are sorted by descending real part; values whose real parts agree to
/// `1e-12·‖M‖` are ordered by descending imaginary part. Each eigenvector is
/// normalized and phased so its largest component is real positive.
pub fn eig_general(m: &Operator) -> Result<EigenSystem> {
    if !m.is_finite() {
        return Err(Error::InvalidOperator("non-finite entry".into()));
    }
    let n = m.dim();
    let (h, q) = hessenberg(m);
    let (t, z) = schur(h, q)?;
    let norm = t.fro_norm();
    let smin = (f64::EPSILON * norm).max(f64::MIN_POSITIVE);

    let mut pairs: Vec<(Complex64, Vec<Complex64>)> = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut x = vec![ZERO; n];
        x[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut sum = ZERO;
            for j in i + 1..=k {
                sum += t[(i, j)] * x[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < smin {
                denom = Complex64::new(smin, 0.0);
            }
            x[i] = -sum / denom;
            let big = x[i].norm();
            if big > 1e150 {
                for xj in x.iter_mut() {
                    *xj /= big;
                }
            }
        }
        let mut v = z.matvec(&x);
        let nv = vector::norm(&v);
        v.iter_mut().for_each(|c| *c /= nv);
        fix_phase_largest(&mut v);
        pairs.push((lambda, v));
    }

    let tie = 1e-12 * norm.max(f64::MIN_POSITIVE);
    sort_pairs(&mut pairs, tie);

    let values: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
    let cols: Vec<Vec<Complex64>> = pairs.into_iter().map(|p| p.1).collect();
    let right_vectors = Operator::from_columns(&cols)?;
    let vector_condition = right_vectors.condition();
    Ok(EigenSystem {
        values,
        right_vectors,
        vector_condition,
    })
}

/// `a` comes before `b`: larger real part first, imaginary part breaks ties.
fn precedes(a: Complex64, b: Complex64, tie: f64) -> bool {
    if (a.re - b.re).abs() > tie {
        a.re > b.re
    } else {
        a.im > b.im
    }
}

// Selection sort: the tolerance comparator is not a total order, so the
// standard library sorts are avoided.
fn sort_pairs(pairs: &mut [(Complex64, Vec<Complex64>)], tie: f64) {
    for i in 0..pairs.len() {
        let mut best = i;
        for j in i + 1..pairs.len() {
            if precedes(pairs[j].0, pairs[best].0, tie) {
                best = j;
            }
        }
        pairs.swap(i, best);
    }
}

/// Rotates the phase so the largest-magnitude component is real positive.
/// Components within a relative 1e-9 of the maximum count as ties, resolved to
/// the last such index.
pub fn fix_phase_largest(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let idx = (0..v.len())
        .rev()
        .find(|&i| v[i].norm() >= max * (1.0 - 1e-9))
        .unwrap_or(0);
    let phase = v[idx].conj() / v[idx].norm();
    v.iter_mut().for_each(|z| *z *= phase);
}

/// Rotates the phase so the first component above `rel_tol·max` is real positive.
pub fn fix_phase_first(v: &mut [Complex64], rel_tol: f64) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    if let Some(idx) = (0..v.len()).find(|&i| v[i].norm() > rel_tol * max) {
        let phase = v[idx].conj() / v[idx].norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

/// Returns (H, Q) with M = Q·H·Q†, H upper Hessenberg.
fn hessenberg(m: &Operator) -> (Operator, Operator) {
    let n = m.dim();
    let mut a = m.clone();
    let mut q = Operator::identity(n);
    if n < 3 {
        return (a, q);
    }
    for k in 0..n - 2 {
        let x: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let alpha = vector::norm(&x);
        if alpha == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut v = x;
        v[0] += phase * alpha;
        let nv = vector::norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);

        // A ← P·A on rows k+1..n
        for j in 0..n {
            let mut dot = ZERO;
            for (r, vr) in v.iter().enumerate() {
                dot += vr.conj() * a[(k + 1 + r, j)];
            }
            for (r, vr) in v.iter().enumerate() {
                a[(k + 1 + r, j)] -= 2.0 * vr * dot;
            }
        }
        // A ← A·P and Q ← Q·P on columns k+1..n
        for target in [&mut a, &mut q] {
            for i in 0..n {
                let mut dot = ZERO;
                for (r, vr) in v.iter().enumerate() {
                    dot += target[(i, k + 1 + r)] * vr;
                }
                for (r, vr) in v.iter().enumerate() {
                    target[(i, k + 1 + r)] -= 2.0 * dot * vr.conj();
                }
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
    (a, q)
}

/// Complex Givens rotation G = [[c, s], [−s̄, c]] with G·[a; b] = [r; 0].
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Reduces Hessenberg `h` to upper-triangular Schur form, accumulating the
/// unitary into `z`.
fn schur(mut t: Operator, mut z: Operator) -> Result<(Operator, Operator)> {
    let n = t.dim();
    if n == 1 {
        return Ok((t, z));
    }
    let norm = t.fro_norm();
    if norm == 0.0 {
        return Ok((t, z));
    }
    let eps = f64::EPSILON;
    let budget = 100 * n;
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = t[(l - 1, l - 1)].norm() + t[(l, l)].norm();
            if s == 0.0 {
                s = norm;
            }
            if t[(l, l - 1)].norm() <= eps * s {
                t[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > budget {
            return Err(Error::NoConvergence(budget));
        }

        let mu = if its % 10 == 0 {
            // exceptional shift to break cycles
            let extra = t[(hi, hi - 1)].re.abs()
                + if hi >= 2 {
                    t[(hi - 1, hi - 2)].re.abs()
                } else {
                    0.0
                };
            t[(hi, hi)] + Complex64::new(extra, 0.0)
        } else {
            wilkinson_shift(
                t[(hi - 1, hi - 1)],
                t[(hi - 1, hi)],
                t[(hi, hi - 1)],
                t[(hi, hi)],
            )
        };

        for k in l..=hi {
            t[(k, k)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(t[(k, k)], t[(k + 1, k)]);
            for j in k..n {
                let x = t[(k, j)];
                let y = t[(k + 1, j)];
                t[(k, j)] = c * x + s * y;
                t[(k + 1, j)] = -s.conj() * x + c * y;
            }
            t[(k + 1, k)] = ZERO;
            rots.push((k, c, s));
        }
        for &(k, c, s) in &rots {
            let rows = (k + 2).min(hi);
            for i in 0..=rows {
                let x = t[(i, k)];
                let y = t[(i, k + 1)];
                t[(i, k)] = x * c + y * s.conj();
                t[(i, k + 1)] = -x * s + y * c;
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = x * c + y * s.conj();
                z[(i, k + 1)] = -x * s + y * c;
            }
        }
        for k in l..=hi {
            t[(k, k)] += mu;
        }
    }
    // clean the strictly lower triangle
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
    Ok((t, z))
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}
