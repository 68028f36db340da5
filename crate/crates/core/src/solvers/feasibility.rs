//! Rank-constrained feasibility by alternating least squares, and rank
//! minimization built on top of it.
//!
//! Deciding whether `{X : A(X) = y, rank(X) <= r}` is nonempty is
//! NP-hard in general, so the search is a heuristic: factor `X = U V^T`
//! with width-r factors and alternate exact least-squares solves in each
//! factor. The first restart starts from the top-r factors of the
//! back-projection `A*(y)/m` (which concentrates near the planted
//! matrix for Gaussian ensembles); the remaining restarts use fresh
//! Gaussian initializations. Near the measurement-count threshold the
//! alternating iteration crawls (the limiting contraction factor
//! approaches one), so once a restart stagnates within reach of
//! feasibility it is finished by a Levenberg-Marquardt pass on the
//! joint bilinear residual, which converges quadratically there. A
//! failure to find a feasible point never certifies emptiness; it only
//! inflates measured transition locations.

use super::{RecoveryResult, SolverParams};
use crate::linalg::{gaussian_matrix, least_squares, Matrix, Rng, RANK_REL_TOL};
use crate::linalg::{min_norm_solution, norm2, svd};
use crate::measurement::{adjoint, apply, MeasurementOperator, MeasurementVector};
use crate::Result;

/// Stagnated restarts with a residual below this multiple of the
/// measurement scale are worth a Levenberg-Marquardt finish.
const POLISH_THRESHOLD: f64 = 1e-2;

/// Outcome of one rank-constrained feasibility search.
#[derive(Debug, Clone)]
pub struct FeasibilityResult {
    /// Best candidate found; has rank at most the requested r by
    /// construction as a product of width-r factors.
    pub x_best: Matrix,
    /// `|A(x_best) - y| / max(|y|, 1)`.
    pub residual: f64,
    pub restarts_used: usize,
    /// True when the residual met `constraint_tol`.
    pub feasible: bool,
}

/// Search for a rank <= r matrix satisfying `A(X) = y`.
///
/// Runs `p.restarts` descents (doubling the schedule once when the two
/// best restarts disagree in residual by more than a factor of 100),
/// keeps the best residual, and reports feasibility against
/// `constraint_tol`. Rank 0 is handled directly: the zero matrix is
/// feasible iff `y` vanishes at tolerance.
pub fn rank_feasibility(
    op: &MeasurementOperator,
    y: &MeasurementVector,
    r: usize,
    p: &SolverParams,
) -> FeasibilityResult {
    let n = op.n();
    assert!(r <= n, "rank bound exceeds matrix side");
    let y_scale = y.norm().max(1.0);
    let tol_abs = p.constraint_tol * y_scale;

    if r == 0 || op.m() == 0 {
        let x = Matrix::zeros(n, n);
        let res = if op.m() == 0 { 0.0 } else { y.norm() };
        return FeasibilityResult {
            x_best: x,
            residual: res / y_scale,
            restarts_used: 0,
            feasible: res <= tol_abs,
        };
    }

    let root = Rng::new(p.seed);
    let mut best: Option<(f64, Matrix)> = None;
    let mut second_best = f64::INFINITY;
    let mut schedule = p.restarts.max(1);
    let mut doubled = false;
    let mut used = 0;
    let mut index = 0u64;

    while used < schedule {
        let restart_index = index;
        let mut rng = root.child(index);
        index += 1;
        used += 1;
        let start = if restart_index == 0 {
            spectral_factors(&adjoint(op, y).scale(1.0 / op.m() as f64), r)
        } else {
            let init = 1.0 / (n as f64).sqrt();
            (
                gaussian_matrix(n, r, &mut rng).scale(init),
                gaussian_matrix(n, r, &mut rng).scale(init),
            )
        };
        // a degenerate least-squares subproblem just consumes the restart
        if let Ok((x, res)) = descend(op, y, start, p, tol_abs, y_scale) {
            match &mut best {
                Some((best_res, best_x)) => {
                    if res < *best_res {
                        second_best = *best_res;
                        *best_res = res;
                        *best_x = x;
                    } else if res < second_best {
                        second_best = res;
                    }
                }
                None => best = Some((res, x)),
            }
        }
        if let Some((best_res, _)) = &best {
            if *best_res <= tol_abs * 1e-2 {
                break; // clearly feasible; further restarts cannot change the verdict
            }
        }
        if used == schedule && !doubled {
            if let Some((best_res, _)) = &best {
                if second_best.is_finite() && second_best > *best_res * 1e2 {
                    schedule *= 2;
                    doubled = true;
                }
            }
        }
    }

    match best {
        None => FeasibilityResult {
            x_best: Matrix::zeros(n, n),
            residual: y.norm() / y_scale,
            restarts_used: used,
            feasible: y.norm() <= tol_abs,
        },
        Some((res, x)) => FeasibilityResult {
            feasible: res <= tol_abs,
            residual: res / y_scale,
            restarts_used: used,
            x_best: x,
        },
    }
}

/// One descent: ALS until stagnation or success, then an LM finish when
/// the iterate is near-feasible. Returns the candidate and its absolute
/// residual.
fn descend(
    op: &MeasurementOperator,
    y: &MeasurementVector,
    start: (Matrix, Matrix),
    p: &SolverParams,
    tol_abs: f64,
    y_scale: f64,
) -> Result<(Matrix, f64)> {
    let n = op.n();
    let (mut u, mut v) = start;
    let r = u.cols();
    let mut x = u.matmul(&v.transpose());
    let mut res = absolute_residual(op, &x, y);
    let mut prev = f64::INFINITY;

    for _ in 0..p.max_iters {
        u = solve_factor(op, y, &v, FactorSide::Left)?;
        v = solve_factor(op, y, &u, FactorSide::Right)?;
        x = u.matmul(&v.transpose());
        res = absolute_residual(op, &x, y);
        if res <= tol_abs * 1e-3 {
            break; // converged well past the feasibility threshold
        }
        // stagnation: absolute improvement at the measurement scale, or
        // relative improvement once the residual itself is the scale
        if prev - res <= (p.inner_tol * y_scale).max(1e-10 * res) {
            break;
        }
        prev = res;
    }

    if res > tol_abs * 1e-3 && res <= POLISH_THRESHOLD * y_scale {
        let polished = lm_polish(op, y, u, v, 80);
        x = polished.0.matmul(&polished.1.transpose());
        res = absolute_residual(op, &x, y);
        let _ = (polished.0, polished.1);
    }
    let _ = r;
    Ok((x, res))
}

/// Levenberg-Marquardt on the joint residual `F(U, V) = A(U V^T) - y`.
/// The Jacobian blocks are the two alternating-step design matrices side
/// by side; damping handles the scaling gauge `(U, V) -> (cU, V/c)`.
fn lm_polish(
    op: &MeasurementOperator,
    y: &MeasurementVector,
    mut u: Matrix,
    mut v: Matrix,
    max_steps: usize,
) -> (Matrix, Matrix) {
    let n = op.n();
    let r = u.cols();
    let m = op.m();
    let dim = 2 * n * r;
    let mut damping: f64 = 1e-6;
    let mut x = u.matmul(&v.transpose());
    let mut res = absolute_residual(op, &x, y);

    for _ in 0..max_steps {
        let du = factor_design(op, &v, FactorSide::Left);
        let dv = factor_design(op, &u, FactorSide::Right);
        let ax = apply(op, &x);
        let f: Vec<f64> = ax
            .values()
            .iter()
            .zip(y.values())
            .map(|(a, b)| a - b)
            .collect();

        let mut accepted = false;
        for _ in 0..10 {
            let mut aug = Matrix::zeros(m + dim, dim);
            for i in 0..m {
                for j in 0..n * r {
                    aug[(i, j)] = du[(i, j)];
                    aug[(i, n * r + j)] = dv[(i, j)];
                }
            }
            let sqrt_damping = damping.sqrt();
            for j in 0..dim {
                aug[(m + j, j)] = sqrt_damping;
            }
            let mut rhs = vec![0.0; m + dim];
            for i in 0..m {
                rhs[i] = -f[i];
            }
            let Ok(delta) = least_squares(&aug, &rhs) else {
                damping *= 10.0;
                continue;
            };
            let mut u_new = u.clone();
            let mut v_new = v.clone();
            for i in 0..n {
                for j in 0..r {
                    u_new[(i, j)] += delta[i * r + j];
                    v_new[(i, j)] += delta[n * r + i * r + j];
                }
            }
            let x_new = u_new.matmul(&v_new.transpose());
            let res_new = absolute_residual(op, &x_new, y);
            if res_new < res {
                u = u_new;
                v = v_new;
                x = x_new;
                res = res_new;
                damping = (damping / 5.0).max(1e-14);
                accepted = true;
                break;
            }
            damping *= 5.0;
        }
        if !accepted || res <= 1e-14 {
            break;
        }
    }
    (u, v)
}

/// Width-r factors of the top of the spectrum, singular values split
/// evenly between the sides.
fn spectral_factors(x: &Matrix, r: usize) -> (Matrix, Matrix) {
    let d = svd(x).expect("jacobi svd did not converge");
    let n = x.rows();
    let mut u = Matrix::zeros(n, r);
    let mut v = Matrix::zeros(n, r);
    for j in 0..r {
        let s = d.sigma[j].max(1e-12).sqrt();
        for i in 0..n {
            u[(i, j)] = d.u[(i, j)] * s;
            v[(i, j)] = d.v[(i, j)] * s;
        }
    }
    (u, v)
}

enum FactorSide {
    /// Solve for U with V fixed: `<A_i, U V^T> = <A_i V, U>`.
    Left,
    /// Solve for V with U fixed: `<A_i, U V^T> = <A_i^T U, V>`.
    Right,
}

fn factor_design(op: &MeasurementOperator, fixed: &Matrix, side: FactorSide) -> Matrix {
    let n = op.n();
    let m = op.m();
    let r = fixed.cols();
    let mut design = Matrix::zeros(m, n * r);
    for (i, a) in op.sensing().iter().enumerate() {
        let block = match side {
            FactorSide::Left => a.matmul(fixed),
            FactorSide::Right => a.transpose().matmul(fixed),
        };
        for (k, &val) in block.data().iter().enumerate() {
            design[(i, k)] = val;
        }
    }
    design
}

fn solve_factor(
    op: &MeasurementOperator,
    y: &MeasurementVector,
    fixed: &Matrix,
    side: FactorSide,
) -> Result<Matrix> {
    let n = op.n();
    let m = op.m();
    let r = fixed.cols();
    let design = factor_design(op, fixed, side);
    // Overdetermined designs go through plain least squares; when m is
    // below the factor dimension the subproblem is consistent and the
    // minimum-norm solution keeps iterates bounded.
    let solution = if m >= n * r {
        least_squares(&design, y.values())?
    } else {
        min_norm_solution(&design, y.values())?
    };
    Matrix::from_vec(n, r, solution)
}

fn absolute_residual(op: &MeasurementOperator, x: &Matrix, y: &MeasurementVector) -> f64 {
    let ax = apply(op, x);
    let diff: Vec<f64> = ax
        .values()
        .iter()
        .zip(y.values())
        .map(|(a, b)| a - b)
        .collect();
    norm2(&diff)
}

/// Rank minimization: return the smallest `r' <= r_max` for which the
/// feasibility search succeeds, together with its candidate. When no
/// rank is feasible the result carries the best candidate found at
/// `r_max` and `converged = false`. `iterations` counts the restarts
/// consumed across all ranks tried.
pub fn rank_minimize(
    op: &MeasurementOperator,
    y: &MeasurementVector,
    r_max: usize,
    p: &SolverParams,
) -> RecoveryResult {
    assert!(r_max <= op.n(), "rank bound exceeds matrix side");
    let root = Rng::new(p.seed);
    let mut restarts_total = 0;
    let mut last: Option<FeasibilityResult> = None;
    for r in 0..=r_max {
        let mut sub = p.clone();
        sub.seed = root.child(r as u64).seed();
        let f = rank_feasibility(op, y, r, &sub);
        restarts_total += f.restarts_used;
        if f.feasible {
            return RecoveryResult {
                rank_hat: f.x_best.rank(RANK_REL_TOL),
                residual: f.residual,
                iterations: restarts_total,
                converged: true,
                x_hat: f.x_best,
            };
        }
        last = Some(f);
    }
    let f = last.expect("at least rank 0 is always attempted");
    RecoveryResult {
        rank_hat: f.x_best.rank(RANK_REL_TOL),
        residual: f.residual,
        iterations: restarts_total,
        converged: false,
        x_hat: f.x_best,
    }
}
