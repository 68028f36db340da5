//! One-sided Jacobi singular value decomposition.
//!
//! Cyclic sweeps of plane rotations orthogonalize the columns of the
//! input; converged column norms are the singular values. Chosen over
//! bidiagonalization for its simplicity and high relative accuracy at
//! the small sizes this crate targets.

use super::Matrix;
use crate::error::Error;
use crate::Result;

/// A pair of columns counts as orthogonal once their Gram off-diagonal
/// drops below this multiple of the scale `sigma_i * sigma_j`.
const JACOBI_TOL: f64 = 1e-14;

/// Hard cap on cyclic sweeps; never reached for well-scaled inputs at
/// the supported sizes.
const MAX_SWEEPS: usize = 64;

/// Thin SVD `X = U * diag(sigma) * V^T` with `k = min(rows, cols)`.
///
/// Both `u` (rows x k) and `v` (cols x k) have orthonormal columns even
/// when `X` is rank-deficient; `sigma` is nonnegative and nonincreasing.
/// Each `u` column has its largest-magnitude entry nonnegative so that
/// repeated factorizations are reproducible.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdResult {
    /// Reassemble `U * diag(sigma) * V^T`.
    pub fn reconstruct(&self) -> Matrix {
        let k = self.sigma.len();
        let mut scaled = self.u.clone();
        for j in 0..k {
            for i in 0..scaled.rows() {
                scaled[(i, j)] *= self.sigma[j];
            }
        }
        scaled.matmul(&self.v.transpose())
    }
}

/// Compute the thin SVD of `x`.
pub fn svd(x: &Matrix) -> Result<SvdResult> {
    let mut out = if x.rows() >= x.cols() {
        svd_tall(x)?
    } else {
        let t = svd_tall(&x.transpose())?;
        SvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        }
    };
    fix_signs(&mut out);
    Ok(out)
}

/// One-sided Jacobi on a matrix with rows >= cols.
fn svd_tall(x: &Matrix) -> Result<SvdResult> {
    let p = x.rows();
    let q = x.cols();
    let mut g = x.clone();
    let mut v = Matrix::identity(q);

    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for i in 0..q.saturating_sub(1) {
            for j in (i + 1)..q {
                let (a, b, c) = column_gram(&g, i, j);
                let scale = a.sqrt() * b.sqrt();
                if c.abs() <= JACOBI_TOL * scale || scale == 0.0 {
                    continue;
                }
                rotated = true;
                // Rotation angle zeroing the 2x2 Gram off-diagonal.
                let zeta = (b - a) / (2.0 * c);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_columns(&mut g, i, j, cs, sn);
                rotate_columns(&mut v, i, j, cs, sn);
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(Error::NoConvergence {
                context: "jacobi svd",
                iterations: sweeps,
            });
        }
    }

    // Column norms are the singular values; sort nonincreasing.
    let mut order: Vec<usize> = (0..q).collect();
    let norms: Vec<f64> = (0..q)
        .map(|j| {
            let mut s = 0.0;
            for i in 0..p {
                s += g[(i, j)] * g[(i, j)];
            }
            s.sqrt()
        })
        .collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    // Below this, a column carries no reliable direction; replace it by
    // an orthonormal completion instead of normalizing noise.
    let zero_cut = smax * (p as f64) * f64::EPSILON;

    let mut u = Matrix::zeros(p, q);
    let mut v_sorted = Matrix::zeros(q, q);
    let mut needs_fill = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        for i in 0..q {
            v_sorted[(i, slot)] = v[(i, j)];
        }
        if sigma[slot] > zero_cut && sigma[slot] > 0.0 {
            for i in 0..p {
                u[(i, slot)] = g[(i, j)] / sigma[slot];
            }
        } else {
            needs_fill.push(slot);
        }
    }
    if !needs_fill.is_empty() {
        complete_orthonormal(&mut u, &needs_fill);
    }

    Ok(SvdResult {
        u,
        sigma,
        v: v_sorted,
    })
}

fn column_gram(g: &Matrix, i: usize, j: usize) -> (f64, f64, f64) {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for row in 0..g.rows() {
        let gi = g[(row, i)];
        let gj = g[(row, j)];
        a += gi * gi;
        b += gj * gj;
        c += gi * gj;
    }
    (a, b, c)
}

fn rotate_columns(m: &mut Matrix, i: usize, j: usize, cs: f64, sn: f64) {
    for row in 0..m.rows() {
        let mi = m[(row, i)];
        let mj = m[(row, j)];
        m[(row, i)] = cs * mi - sn * mj;
        m[(row, j)] = sn * mi + cs * mj;
    }
}

/// Fill the listed columns of `u` with unit vectors orthogonal to every
/// other column. For each slot, the standard basis vector with the
/// largest component outside the current span is orthogonalized in;
/// that component is at least sqrt((p - k) / p), so a candidate always
/// exists. Deterministic.
fn complete_orthonormal(u: &mut Matrix, slots: &[usize]) {
    let p = u.rows();
    let q = u.cols();
    let mut filled: Vec<usize> = (0..q).filter(|s| !slots.contains(s)).collect();
    let mut basis_used = vec![false; p];
    for &slot in slots {
        let mut best: Option<(f64, Vec<f64>, usize)> = None;
        for b in 0..p {
            if basis_used[b] {
                continue;
            }
            let mut cand = vec![0.0; p];
            cand[b] = 1.0;
            // two orthogonalization passes for numerical safety
            for _ in 0..2 {
                for &f in &filled {
                    let mut proj = 0.0;
                    for i in 0..p {
                        proj += cand[i] * u[(i, f)];
                    }
                    for i in 0..p {
                        cand[i] -= proj * u[(i, f)];
                    }
                }
            }
            let norm = super::norm2(&cand);
            if best.as_ref().map_or(true, |(n, _, _)| norm > *n) {
                best = Some((norm, cand, b));
            }
        }
        let (norm, cand, b) = best.expect("fewer slots than ambient dimension");
        assert!(norm > 0.0, "orthonormal completion found no direction");
        basis_used[b] = true;
        for i in 0..p {
            u[(i, slot)] = cand[i] / norm;
        }
        filled.push(slot);
    }
}

/// Force the largest-magnitude entry of each left singular column to be
/// nonnegative, flipping the matching right column to preserve the
/// product.
fn fix_signs(res: &mut SvdResult) {
    let k = res.sigma.len();
    for j in 0..k {
        let mut best = 0.0f64;
        let mut arg = 0;
        for i in 0..res.u.rows() {
            let a = res.u[(i, j)].abs();
            if a > best {
                best = a;
                arg = i;
            }
        }
        if res.u[(arg, j)] < 0.0 {
            for i in 0..res.u.rows() {
                res.u[(i, j)] = -res.u[(i, j)];
            }
            for i in 0..res.v.rows() {
                res.v[(i, j)] = -res.v[(i, j)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, norm2, Rng};

    fn orthonormality_defect(m: &Matrix) -> f64 {
        let gram = m.transpose().matmul(m);
        let mut defect = 0.0;
        for i in 0..gram.rows() {
            for j in 0..gram.cols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                defect += (gram[(i, j)] - expect) * (gram[(i, j)] - expect);
            }
        }
        defect.sqrt()
    }

    fn assert_valid(x: &Matrix, res: &SvdResult) {
        let k = res.sigma.len();
        assert_eq!(k, x.rows().min(x.cols()));
        assert!(orthonormality_defect(&res.u) <= 1e-10 * k as f64);
        assert!(orthonormality_defect(&res.v) <= 1e-10 * k as f64);
        for w in res.sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(res.sigma.iter().all(|&s| s >= 0.0));
        let err = res.reconstruct().sub(x).frobenius_norm();
        assert!(err <= 1e-10 * x.frobenius_norm().max(1e-300));
    }

    #[test]
    fn diagonal_case() {
        let x = Matrix::diag(&[3.0, 1.0]);
        let res = svd(&x).unwrap();
        assert!((res.sigma[0] - 3.0).abs() < 1e-14);
        assert!((res.sigma[1] - 1.0).abs() < 1e-14);
        assert_valid(&x, &res);
        // U and V equal identity up to column signs; signs are fixed, so exactly I
        assert!(res.u.sub(&Matrix::identity(2)).frobenius_norm() < 1e-14);
        assert!(res.v.sub(&Matrix::identity(2)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let x = Matrix::zeros(4, 4);
        let res = svd(&x).unwrap();
        assert_eq!(res.sigma, vec![0.0; 4]);
        assert_valid(&x, &res);
    }

    #[test]
    fn reconstruction_random_5x5() {
        let x = gaussian_matrix(5, 5, &mut Rng::new(11));
        let res = svd(&x).unwrap();
        let err = res.reconstruct().sub(&x).frobenius_norm();
        assert!(err <= 1e-10 * x.frobenius_norm());
        assert_valid(&x, &res);
    }

    #[test]
    fn rank_one_sum_has_rank_two() {
        let mut rng = Rng::new(21);
        let a = gaussian_matrix(5, 1, &mut rng);
        let b = gaussian_matrix(5, 1, &mut rng);
        let c = gaussian_matrix(5, 1, &mut rng);
        let d = gaussian_matrix(5, 1, &mut rng);
        let x = a.matmul(&b.transpose()).add(&c.matmul(&d.transpose()));
        let res = svd(&x).unwrap();
        assert!(res.sigma[2] / res.sigma[0] < 1e-10);
        assert!(res.sigma[1] / res.sigma[0] > 1e-6);
        assert_eq!(x.rank(crate::linalg::RANK_REL_TOL), 2);
    }

    #[test]
    fn rectangular_and_rank_deficient_shapes() {
        let mut rng = Rng::new(5);
        for &(r, c) in &[(7, 3), (3, 7), (6, 6), (1, 4), (4, 1), (1, 1)] {
            let x = gaussian_matrix(r, c, &mut rng);
            assert_valid(&x, &svd(&x).unwrap());
            // rank-deficient variant: duplicate a column direction
            if c >= 2 {
                let mut y = x.clone();
                for i in 0..r {
                    let v = y[(i, 0)];
                    y[(i, c - 1)] = 2.0 * v;
                }
                assert_valid(&y, &svd(&y).unwrap());
            }
        }
    }

    #[test]
    fn frobenius_equals_sigma_sum_of_squares() {
        let mut rng = Rng::new(31);
        for _ in 0..100 {
            let x = gaussian_matrix(6, 4, &mut rng);
            let res = svd(&x).unwrap();
            let fro2 = x.frobenius_norm() * x.frobenius_norm();
            let sig2: f64 = res.sigma.iter().map(|s| s * s).sum();
            assert!((fro2 - sig2).abs() <= 1e-12 * fro2);
            assert!(x.nuclear_norm() >= x.frobenius_norm() - 1e-12 * fro2.sqrt());
        }
    }

    #[test]
    fn deterministic_factorization() {
        let x = gaussian_matrix(6, 6, &mut Rng::new(77));
        let a = svd(&x).unwrap();
        let b = svd(&x).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn norm2_helper() {
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
    }
}
