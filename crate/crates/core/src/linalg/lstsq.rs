//! Householder QR and least squares.

use super::{norm2, Matrix};
use crate::error::Error;
use crate::Result;

/// Relative tolerance on the R diagonal below which the factored matrix
/// is treated as column-rank-deficient.
const QR_RANK_TOL: f64 = 1e-10;

/// Thin QR factorization `A = Q R` of a matrix with rows >= cols, with
/// `Q` (rows x cols) orthonormal and `R` (cols x cols) upper triangular.
#[derive(Debug, Clone)]
pub struct QrFactor {
    q: Matrix,
    r: Matrix,
}

impl QrFactor {
    /// Factor `a`; requires rows >= cols.
    pub fn new(a: &Matrix) -> Result<Self> {
        let p = a.rows();
        let q = a.cols();
        if p < q {
            return Err(Error::DimensionMismatch {
                context: "QrFactor::new (rows >= cols required)",
                expected: (q, q),
                got: (p, q),
            });
        }
        let mut work = a.clone();
        // Householder vectors, stored per column with the v[0] = 1
        // convention, plus their beta coefficients.
        let mut vs: Vec<Vec<f64>> = Vec::with_capacity(q);
        let mut betas: Vec<f64> = Vec::with_capacity(q);
        for k in 0..q {
            let mut v: Vec<f64> = (k..p).map(|i| work[(i, k)]).collect();
            let alpha = norm2(&v);
            if alpha == 0.0 {
                vs.push(vec![0.0; p - k]);
                betas.push(0.0);
                continue;
            }
            let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            v[0] += sign * alpha;
            let vnorm2 = super::dot(&v, &v);
            let beta = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
            // apply H = I - beta v v^T to the trailing block
            for col in k..q {
                let mut s = 0.0;
                for i in k..p {
                    s += v[i - k] * work[(i, col)];
                }
                s *= beta;
                for i in k..p {
                    work[(i, col)] -= s * v[i - k];
                }
            }
            vs.push(v);
            betas.push(beta);
        }

        let mut r = Matrix::zeros(q, q);
        for i in 0..q {
            for j in i..q {
                r[(i, j)] = work[(i, j)];
            }
        }

        // Explicit thin Q: apply reflectors in reverse to the first q
        // columns of the identity.
        let mut qmat = Matrix::zeros(p, q);
        for j in 0..q {
            qmat[(j, j)] = 1.0;
        }
        for k in (0..q).rev() {
            let beta = betas[k];
            if beta == 0.0 {
                continue;
            }
            let v = &vs[k];
            for col in 0..q {
                let mut s = 0.0;
                for i in k..p {
                    s += v[i - k] * qmat[(i, col)];
                }
                s *= beta;
                for i in k..p {
                    qmat[(i, col)] -= s * v[i - k];
                }
            }
        }

        Ok(QrFactor { q: qmat, r })
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// Smallest and largest absolute R diagonal; a cheap surrogate for
    /// the extreme singular values when judging rank.
    pub fn diag_extrema(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..self.r.rows() {
            let d = self.r[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    /// True when the factored matrix has full column rank at tolerance.
    pub fn full_column_rank(&self) -> bool {
        let (lo, hi) = self.diag_extrema();
        hi > 0.0 && lo > QR_RANK_TOL * hi
    }

    /// Least-squares solution of `A x = b` through this factorization.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.q.rows() {
            return Err(Error::DimensionMismatch {
                context: "QrFactor::solve",
                expected: (self.q.rows(), 1),
                got: (b.len(), 1),
            });
        }
        if !self.full_column_rank() {
            return Err(Error::RankDeficient {
                context: "least squares",
            });
        }
        let qtb = self.q.matvec_t(b);
        Ok(self.solve_upper(&qtb))
    }

    /// Back substitution `R x = c`.
    pub fn solve_upper(&self, c: &[f64]) -> Vec<f64> {
        let n = self.r.rows();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = c[i];
            for j in (i + 1)..n {
                s -= self.r[(i, j)] * x[j];
            }
            x[i] = s / self.r[(i, i)];
        }
        x
    }

    /// Forward substitution `R^T w = c`.
    pub fn solve_upper_transposed(&self, c: &[f64]) -> Vec<f64> {
        let n = self.r.rows();
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut s = c[i];
            for j in 0..i {
                s -= self.r[(j, i)] * w[j];
            }
            w[i] = s / self.r[(i, i)];
        }
        w
    }
}

/// Minimizer of `|a x - b|_2` for a matrix with full column rank.
///
/// Rank-deficient (or underdetermined) input is an error so that callers
/// driving randomized restarts can retry with a fresh start.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            context: "least_squares",
            expected: (a.rows(), 1),
            got: (b.len(), 1),
        });
    }
    if a.rows() < a.cols() {
        return Err(Error::RankDeficient {
            context: "least squares (underdetermined system)",
        });
    }
    QrFactor::new(a)?.solve(b)
}

/// Minimum-norm solution of the underdetermined consistent problem
/// `a x = b` with rows <= cols and full row rank, via QR of `a^T`.
pub(crate) fn min_norm_solution(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let qr = QrFactor::new(&a.transpose())?;
    if !qr.full_column_rank() {
        return Err(Error::RankDeficient {
            context: "minimum-norm solve",
        });
    }
    let w = qr.solve_upper_transposed(b);
    Ok(qr.q().matvec(&w))
}
