use num_complex::Complex64;

use super::Operator;
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, P·M = L·U.
pub(crate) struct Lu {
    lu: Operator,
    perm: Vec<usize>,
}

impl Lu {
    pub(crate) fn factor(m: &Operator) -> Result<Self> {
        let n = m.dim();
        let scale = m.fro_norm();
        let tiny = 1e-14 * scale;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= tiny || pmax == 0.0 {
                return Err(Error::Singular);
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f.norm() == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub(crate) fn solve_vec(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.lu.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[(i, k)];
                x[i] = x[i] - u * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    pub(crate) fn solve(&self, b: &Operator) -> Result<Operator> {
        let n = self.lu.dim();
        if b.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.dim(),
            });
        }
        let mut out = Operator::zeros(n);
        for j in 0..n {
            let col = self.solve_vec(&b.column(j))?;
            out.set_column(j, &col);
        }
        Ok(out)
    }

    pub(crate) fn inverse(&self) -> Result<Operator> {
        self.solve(&Operator::identity(self.lu.dim()))
    }
}
