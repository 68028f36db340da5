//! Closed-form measurement thresholds, rank-manifold dimensions, and
//! deterministic checks of the assumptions behind them.
//!
//! For n x n matrices, the set of rank-k matrices is a manifold of
//! dimension `2nk - k^2`. Uniform (strong) recovery of every rank-r
//! matrix by rank minimization needs the measurement null space to miss
//! every rank-2r matrix, which pins the threshold `4nr - 4r^2`; recovery
//! of one fixed rank-r matrix (weak recovery) needs one measurement more
//! than the rank-r manifold dimension, `2nr - r^2 + 1`. Reported
//! empirical behavior of nuclear-norm minimization sits near
//! `4nr - 2r^2`, which this crate's harness re-estimates.

use crate::error::Error;
use crate::linalg::{gaussian_matrix, svd, Matrix, Rng};
use crate::Result;

/// Relative smallest-singular-value threshold for the numerical kernel
/// test in [`subspace_counterexample`]; the generic gap is order one at
/// these sizes.
const KERNEL_REL_TOL: f64 = 1e-10;

/// Problem dimensions: matrix side `n` and target rank `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemDims {
    n: usize,
    r: usize,
}

impl ProblemDims {
    /// Requires `1 <= r <= n`.
    pub fn new(n: usize, r: usize) -> Result<Self> {
        if n == 0 || r == 0 || r > n {
            return Err(Error::InvalidArgument {
                context: "ProblemDims::new",
                message: format!("need 1 <= r <= n, got n={n}, r={r}"),
            });
        }
        Ok(ProblemDims { n, r })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }
}

/// Measurements sufficient for uniform recovery of every rank-r matrix
/// by rank minimization: `4nr - 4r^2`. Defined only for `r <= n/2`
/// (otherwise rank-2r differences exceed the ambient rank).
pub fn strong_threshold(d: ProblemDims) -> Result<usize> {
    if 2 * d.r > d.n {
        return Err(Error::InvalidArgument {
            context: "strong_threshold",
            message: format!("requires r <= n/2, got n={}, r={}", d.n, d.r),
        });
    }
    Ok(4 * d.n * d.r - 4 * d.r * d.r)
}

/// Measurements sufficient to recover one fixed rank-r matrix by rank
/// minimization: `2nr - r^2 + 1`, one more than the rank-r manifold
/// dimension.
pub fn weak_threshold(d: ProblemDims) -> usize {
    2 * d.n * d.r - d.r * d.r + 1
}

/// Empirical reference point for the nuclear-norm weak transition:
/// `4nr - 2r^2`.
pub fn nuclear_empirical_ref(d: ProblemDims) -> usize {
    4 * d.n * d.r - 2 * d.r * d.r
}

/// Dimension of the manifold of n x n rank-k matrices: `2nk - k^2`.
/// Requires `k <= n`; `k = 0` gives 0 (the zero matrix alone).
pub fn manifold_dim(n: usize, k: usize) -> usize {
    assert!(k <= n, "manifold_dim: k must not exceed n");
    2 * n * k - k * k
}

/// Dimension of the unit-Frobenius-sphere slice of the rank-k manifold:
/// `manifold_dim(n, k) - 1`. Errors for `k = 0` (no unit-norm rank-0
/// matrix exists).
pub fn unit_manifold_dim(n: usize, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidArgument {
            context: "unit_manifold_dim",
            message: "no unit-norm rank-0 matrix".into(),
        });
    }
    Ok(manifold_dim(n, k) - 1)
}

/// Upper bound `(3/eps)^d` on the number of eps-balls needed to cover
/// the d-dimensional Euclidean unit ball. Requires `0 < eps < 1`.
pub fn covering_bound(d: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument {
            context: "covering_bound",
            message: format!("eps must be in (0,1), got {eps}"),
        });
    }
    Ok((3.0 / eps).powi(d as i32))
}

/// Empirical probability that one Gaussian measurement of a fixed
/// unit-Frobenius-norm matrix lands within `eps` of zero.
///
/// Uses the normalized all-ones matrix as the probe; by rotation
/// invariance of the ensemble every unit probe gives the same
/// distribution, and `<A, X>` is standard normal, so the estimate
/// converges to `2 Phi(eps) - 1`. `trials` must be at least 1000 for the
/// estimate to carry meaningful precision.
pub fn small_ball_estimate(n: usize, eps: f64, trials: usize, rng: &mut Rng) -> f64 {
    assert!(eps > 0.0, "eps must be positive");
    assert!(trials >= 1000, "need at least 1000 trials");
    let probe = Matrix::from_fn(n, n, |_, _| 1.0).scale(1.0 / (n as f64));
    let mut hits = 0usize;
    for _ in 0..trials {
        let a = gaussian_matrix(n, n, rng);
        if a.dot(&probe).abs() < eps {
            hits += 1;
        }
    }
    hits as f64 / trials as f64
}

/// Whether a random (d+1)-dimensional subspace of n x n matrices meets
/// the null space of `m` Gaussian measurement functionals nontrivially.
///
/// The subspace is spanned by d+1 independent Gaussian matrices (full
/// dimensional with probability one). A nonzero intersection exists iff
/// the m x (d+1) matrix of functionals restricted to that basis has a
/// nontrivial kernel, decided by numerical rank. For `m <= d` the kernel
/// is forced by dimension count, so the result is always true there.
pub fn subspace_counterexample(n: usize, d: usize, m: usize, rng: &mut Rng) -> bool {
    assert!(d + 1 <= n * n, "subspace dimension exceeds ambient space");
    let basis: Vec<Matrix> = (0..d + 1).map(|_| gaussian_matrix(n, n, rng)).collect();
    if m == 0 {
        return true;
    }
    let functionals: Vec<Matrix> = (0..m).map(|_| gaussian_matrix(n, n, rng)).collect();
    let mut g = Matrix::zeros(m, d + 1);
    for (i, f) in functionals.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            g[(i, j)] = f.dot(b);
        }
    }
    if m < d + 1 {
        return true; // kernel dimension >= d+1-m >= 1
    }
    let sigma = svd(&g).expect("jacobi svd did not converge").sigma;
    let smax = sigma[0];
    if smax == 0.0 {
        return true;
    }
    let rank = sigma.iter().filter(|&&s| s > KERNEL_REL_TOL * smax).count();
    rank < d + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(n: usize, r: usize) -> ProblemDims {
        ProblemDims::new(n, r).unwrap()
    }

    #[test]
    fn strong_threshold_values() {
        assert_eq!(strong_threshold(dims(10, 1)).unwrap(), 36);
        assert_eq!(strong_threshold(dims(8, 1)).unwrap(), 28);
        // r = n/2 meets the ambient dimension exactly
        assert_eq!(strong_threshold(dims(8, 4)).unwrap(), 64);
        assert!(strong_threshold(dims(8, 5)).is_err());
    }

    #[test]
    fn weak_threshold_values() {
        assert_eq!(weak_threshold(dims(8, 1)), 16);
        assert_eq!(weak_threshold(dims(10, 2)), 37);
        // full rank: one more than the ambient dimension
        assert_eq!(weak_threshold(dims(6, 6)), 37);
    }

    #[test]
    fn manifold_dims() {
        assert_eq!(manifold_dim(10, 2), 36);
        assert_eq!(manifold_dim(10, 0), 0);
        assert_eq!(manifold_dim(10, 4), 64);
        assert_eq!(
            manifold_dim(10, 4),
            strong_threshold(dims(10, 2)).unwrap()
        );
    }

    #[test]
    fn unit_manifold_dims() {
        assert_eq!(unit_manifold_dim(10, 2).unwrap(), 35);
        assert_eq!(unit_manifold_dim(4, 4).unwrap(), 15);
        assert!(unit_manifold_dim(4, 0).is_err());
        for n in 1..10 {
            for k in 1..=n {
                assert_eq!(unit_manifold_dim(n, k).unwrap(), manifold_dim(n, k) - 1);
            }
        }
    }

    #[test]
    fn threshold_identities() {
        for n in 2..24 {
            for r in 1..=n / 2 {
                assert_eq!(
                    strong_threshold(dims(n, r)).unwrap(),
                    manifold_dim(n, 2 * r)
                );
            }
            for r in 1..=n {
                assert_eq!(weak_threshold(dims(n, r)), manifold_dim(n, r) + 1);
            }
        }
    }

    #[test]
    fn covering_bound_values_and_monotonicity() {
        assert_eq!(covering_bound(2, 0.5).unwrap(), 36.0);
        assert_eq!(covering_bound(1, 0.5).unwrap(), 6.0);
        assert!(covering_bound(3, 0.0).is_err());
        assert!(covering_bound(3, 1.0).is_err());
        let mut prev = covering_bound(4, 0.9).unwrap();
        for eps in [0.7, 0.5, 0.3, 0.1, 0.01] {
            let cur = covering_bound(4, eps).unwrap();
            assert!(cur > prev);
            prev = cur;
        }
    }

    #[test]
    fn small_ball_matches_normal_cdf() {
        // frozen normal-CDF references: 2*Phi(eps) - 1
        let cases = [(0.1, 0.07965567455405796), (1.0, 0.6826894921370859)];
        let trials = 100_000;
        for (i, (eps, expect)) in cases.iter().enumerate() {
            let mut rng = Rng::new(4500 + i as u64);
            let est = small_ball_estimate(4, *eps, trials, &mut rng);
            let se = (expect * (1.0 - expect) / trials as f64).sqrt();
            assert!(
                (est - expect).abs() <= 3.0 * se,
                "eps={eps}: est {est} vs {expect} (3se = {})",
                3.0 * se
            );
        }
    }

    #[test]
    fn small_ball_ratio_bounded() {
        for (i, eps) in [0.05, 0.1, 0.2, 0.5].iter().enumerate() {
            let mut rng = Rng::new(900 + i as u64);
            let est = small_ball_estimate(3, *eps, 100_000, &mut rng);
            assert!(est / eps <= 0.9, "eps={eps}: ratio {}", est / eps);
        }
    }

    #[test]
    fn subspace_intersection_forced_when_underdetermined() {
        for seed in 0..25 {
            let mut rng = Rng::new(seed);
            for d in 1..6 {
                for m in 0..=d {
                    assert!(subspace_counterexample(4, d, m, &mut rng));
                }
            }
        }
        assert!(subspace_counterexample(2, 0, 0, &mut Rng::new(0)));
    }

    #[test]
    fn subspace_intersection_vanishes_at_d_plus_one() {
        let mut failures = 0;
        for seed in 0..1000 {
            let mut rng = Rng::new(10_000 + seed);
            if subspace_counterexample(4, 5, 6, &mut rng) {
                failures += 1;
            }
        }
        assert_eq!(failures, 0);
    }
}
