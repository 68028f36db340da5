//! Exact enumeration of rank <= 1 feasible matrices for 2x2 problems
//! with three measurements.
//!
//! With n = 2 and m = 3 the feasible set `{X : A(X) = y}` is an affine
//! line `X(t) = X_p + t N`, and `det(X(t))` is a quadratic in `t` whose
//! real roots enumerate every rank <= 1 feasible matrix in closed form.
//! This gives an independent ground truth for the heuristic searches.

use crate::error::Error;
use crate::linalg::Matrix;
use crate::measurement::{project_affine, MeasurementOperator, MeasurementVector};
use crate::Result;

/// All rank <= 1 matrices satisfying `A(X) = y`, for an n = 2, m = 3
/// operator with full row rank (so the feasible line is unique). The
/// list holds 0, 1, or 2 matrices; it includes the zero matrix when
/// `y = 0` makes it feasible.
pub fn det_oracle_2x2(
    op: &MeasurementOperator,
    y: &MeasurementVector,
) -> Result<Vec<Matrix>> {
    if op.n() != 2 || op.m() != 3 {
        return Err(Error::InvalidArgument {
            context: "det_oracle_2x2",
            message: format!("requires n = 2 and m = 3, got n = {}, m = {}", op.n(), op.m()),
        });
    }
    if op.flat_rank() != 3 {
        return Err(Error::RankDeficient {
            context: "det_oracle_2x2 (null space dimension must be 1)",
        });
    }
    let particular = project_affine(op, &Matrix::zeros(2, 2), y)?;
    let null_dir = null_direction(op)?;

    // det(X_p + t N) = a2 t^2 + a1 t + a0
    let a2 = det2(&null_dir);
    let a1 = particular[(0, 0)] * null_dir[(1, 1)] + null_dir[(0, 0)] * particular[(1, 1)]
        - particular[(0, 1)] * null_dir[(1, 0)]
        - null_dir[(0, 1)] * particular[(1, 0)];
    let a0 = det2(&particular);

    let roots = real_quadratic_roots(a2, a1, a0)?;
    Ok(roots
        .into_iter()
        .map(|t| particular.add(&null_dir.scale(t)))
        .collect())
}

/// Minimal feasible rank together with the nonzero rank-1 solutions.
#[derive(Debug, Clone)]
pub struct OracleClassification {
    /// 0 when y = 0 (the zero matrix is feasible), 1 when a nonzero
    /// rank-1 solution exists, 2 otherwise.
    pub min_rank: usize,
    /// The nonzero rank <= 1 feasible matrices.
    pub rank_one_solutions: Vec<Matrix>,
}

/// Classify the minimal feasible rank of an n = 2, m = 3 instance.
pub fn classify_min_rank_2x2(
    op: &MeasurementOperator,
    y: &MeasurementVector,
) -> Result<OracleClassification> {
    let roots = det_oracle_2x2(op, y)?;
    let rank_one_solutions: Vec<Matrix> = roots
        .into_iter()
        .filter(|x| x.frobenius_norm() > 1e-10)
        .collect();
    let min_rank = if y.norm() <= 1e-12 {
        0
    } else if !rank_one_solutions.is_empty() {
        1
    } else {
        2
    };
    Ok(OracleClassification {
        min_rank,
        rank_one_solutions,
    })
}

fn det2(x: &Matrix) -> f64 {
    x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)]
}

/// Deterministic unit spanning vector of the 1-dimensional null space:
/// project each standard basis vector onto the complement of the row
/// space and keep the largest residual (at least 1/2 in norm when the
/// null space is one-dimensional).
fn null_direction(op: &MeasurementOperator) -> Result<Matrix> {
    let qr = op.gram().expect("m = 3 implies a cached factorization");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for b in 0..4 {
        let mut probe = vec![0.0; 4];
        probe[b] = 1.0;
        let coeffs = qr.q().matvec_t(&probe);
        let in_range = qr.q().matvec(&coeffs);
        let null: Vec<f64> = probe.iter().zip(&in_range).map(|(p, r)| p - r).collect();
        let norm = crate::linalg::norm2(&null);
        if best.as_ref().map_or(true, |(n, _)| norm > *n) {
            best = Some((norm, null));
        }
    }
    let (norm, null) = best.expect("four candidates examined");
    if norm < 1e-8 {
        return Err(Error::RankDeficient {
            context: "det_oracle_2x2 null direction",
        });
    }
    Matrix::from_vec(2, 2, null.iter().map(|v| v / norm).collect())
}

/// Real roots of `a2 t^2 + a1 t + a0`, ascending. Errors when all
/// coefficients vanish (the determinant is zero along the whole line,
/// a non-generic ensemble).
fn real_quadratic_roots(a2: f64, a1: f64, a0: f64) -> Result<Vec<f64>> {
    let scale = a2.abs().max(a1.abs()).max(a0.abs());
    if scale == 0.0 {
        return Err(Error::InvalidArgument {
            context: "det_oracle_2x2",
            message: "determinant vanishes identically along the feasible line".into(),
        });
    }
    if a2.abs() <= 1e-14 * scale {
        if a1.abs() <= 1e-14 * scale {
            return Ok(Vec::new()); // nonzero constant: no roots
        }
        return Ok(vec![-a0 / a1]);
    }
    let disc = a1 * a1 - 4.0 * a2 * a0;
    let disc_scale = a1 * a1 + 4.0 * (a2 * a0).abs();
    if disc < -1e-12 * disc_scale {
        return Ok(Vec::new());
    }
    if disc <= 1e-12 * disc_scale {
        return Ok(vec![-a1 / (2.0 * a2)]); // double root at tolerance
    }
    let sq = disc.sqrt();
    let q = -0.5 * (a1 + a1.signum() * sq);
    let (t1, t2) = (q / a2, a0 / q);
    Ok(if t1 <= t2 { vec![t1, t2] } else { vec![t2, t1] })
}
