//! The linear measurement operator `A : R^{n x n} -> R^m`, its adjoint,
//! Gaussian ensemble construction, and projection onto the affine set
//! `{X : A(X) = y}`.
//!
//! Measurement `i` is the entrywise inner product `<A_i, X>`. Sensing
//! matrices are kept both as a list and flattened into an m x n^2 row
//! matrix whose transposed QR factorization backs `project_affine`; at
//! the supported sizes the flattened form is at most a few thousand
//! columns and lives comfortably in memory.

use crate::error::Error;
use crate::linalg::{gaussian_matrix, norm2, svd, Matrix, QrFactor, Rng};
use crate::Result;
use std::io::{Read, Write};
use std::path::Path;

/// Relative smallest-singular-value threshold for a usable ensemble.
const ROW_RANK_REL_TOL: f64 = 1e-10;

/// Magic bytes opening the binary operator file format.
pub const OPERATOR_MAGIC: &[u8; 8] = b"ULAB0001";

/// The vector of measurement values `y = A(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    values: Vec<f64>,
}

impl MeasurementVector {
    pub fn new(values: Vec<f64>) -> Self {
        MeasurementVector { values }
    }

    pub fn zeros(m: usize) -> Self {
        MeasurementVector {
            values: vec![0.0; m],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        norm2(&self.values)
    }
}

/// `m` sensing matrices plus the cached factorization that realizes
/// affine projection. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    n: usize,
    sensing: Vec<Matrix>,
    /// m x n^2 matrix whose row i is sensing matrix i, flattened row-major.
    flat: Option<Matrix>,
    /// QR of flat^T; present whenever m >= 1.
    gram: Option<QrFactor>,
    /// Seed the ensemble was drawn from, when constructed from a fresh
    /// stream; lets serialization omit the body.
    seed: Option<u64>,
}

impl MeasurementOperator {
    /// Build from explicit sensing matrices (all n x n).
    pub fn from_sensing(n: usize, sensing: Vec<Matrix>) -> Result<Self> {
        Self::build(n, sensing, None)
    }

    fn build(n: usize, sensing: Vec<Matrix>, seed: Option<u64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument {
                context: "MeasurementOperator",
                message: "matrix side must be positive".into(),
            });
        }
        let m = sensing.len();
        if m > n * n {
            return Err(Error::InvalidArgument {
                context: "MeasurementOperator",
                message: format!("m = {m} exceeds ambient dimension n^2 = {}", n * n),
            });
        }
        for a in &sensing {
            if a.rows() != n || a.cols() != n {
                return Err(Error::DimensionMismatch {
                    context: "MeasurementOperator sensing matrix",
                    expected: (n, n),
                    got: (a.rows(), a.cols()),
                });
            }
        }
        let (flat, gram) = if m >= 1 {
            let mut flat = Matrix::zeros(m, n * n);
            for (i, a) in sensing.iter().enumerate() {
                for (k, &v) in a.data().iter().enumerate() {
                    flat[(i, k)] = v;
                }
            }
            let gram = QrFactor::new(&flat.transpose())?;
            (Some(flat), Some(gram))
        } else {
            (None, None)
        };
        Ok(MeasurementOperator {
            n,
            sensing,
            flat,
            gram,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.sensing.len()
    }

    pub fn sensing(&self) -> &[Matrix] {
        &self.sensing
    }

    /// Seed of the generating stream, when reproducible from one.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub(crate) fn gram(&self) -> Option<&QrFactor> {
        self.gram.as_ref()
    }

    /// Numerical rank of the flattened sensing matrix, judged on its
    /// singular values at relative tolerance 1e-10. The singular values
    /// of the m x n^2 flat matrix equal those of the (much smaller)
    /// m x m triangular factor of its transposed QR.
    pub fn flat_rank(&self) -> usize {
        match &self.gram {
            None => 0,
            Some(qr) => {
                let sigma = svd(qr.r()).expect("jacobi svd did not converge").sigma;
                let smax = sigma[0];
                if smax == 0.0 {
                    return 0;
                }
                sigma
                    .iter()
                    .filter(|&&s| s > ROW_RANK_REL_TOL * smax)
                    .count()
            }
        }
    }

    /// True when the ensemble has full row rank at tolerance (generic
    /// for Gaussian draws with m <= n^2).
    pub fn full_row_rank(&self) -> bool {
        self.m() == 0 || self.flat_rank() == self.m()
    }
}

/// Draw `m` independent sensing matrices with i.i.d. standard normal
/// entries. The factorization backing projection is precomputed when
/// `m >= 1`. Rejects `m > n^2`.
pub fn sample_gaussian_operator(n: usize, m: usize, mut rng: Rng) -> Result<MeasurementOperator> {
    let seed = rng.is_fresh().then(|| rng.seed());
    let sensing: Vec<Matrix> = (0..m).map(|_| gaussian_matrix(n, n, &mut rng)).collect();
    MeasurementOperator::build(n, sensing, seed)
}

/// Apply the operator: `values_i = <A_i, x>`.
pub fn apply(op: &MeasurementOperator, x: &Matrix) -> MeasurementVector {
    assert_eq!(
        (x.rows(), x.cols()),
        (op.n, op.n),
        "apply: operand must be n x n"
    );
    match &op.flat {
        None => MeasurementVector::zeros(0),
        Some(flat) => MeasurementVector::new(flat.matvec(x.data())),
    }
}

/// Adjoint of the operator: `A*(y) = sum_i y_i A_i`.
pub fn adjoint(op: &MeasurementOperator, y: &MeasurementVector) -> Matrix {
    assert_eq!(y.len(), op.m(), "adjoint: length mismatch");
    match &op.flat {
        None => Matrix::zeros(op.n, op.n),
        Some(flat) => {
            let data = flat.matvec_t(y.values());
            Matrix::from_vec(op.n, op.n, data).expect("adjoint produced non-finite entries")
        }
    }
}

/// Frobenius-nearest matrix to `x` satisfying `A(X') = y`.
///
/// Uses the cached factorization: with `flat^T = Q R`, the correction is
/// `Q R^{-T} (y - A(x))` reshaped. Errors when the ensemble is
/// rank-deficient at tolerance (resample in that case).
pub fn project_affine(
    op: &MeasurementOperator,
    x: &Matrix,
    y: &MeasurementVector,
) -> Result<Matrix> {
    assert_eq!(
        (x.rows(), x.cols()),
        (op.n, op.n),
        "project_affine: operand must be n x n"
    );
    if y.len() != op.m() {
        return Err(Error::DimensionMismatch {
            context: "project_affine",
            expected: (op.m(), 1),
            got: (y.len(), 1),
        });
    }
    if op.m() == 0 {
        return Ok(x.clone());
    }
    let gram = op.gram.as_ref().expect("gram factor present when m >= 1");
    if !gram.full_column_rank() {
        return Err(Error::RankDeficient {
            context: "measurement ensemble",
        });
    }
    let ax = apply(op, x);
    let residual: Vec<f64> = y
        .values()
        .iter()
        .zip(ax.values())
        .map(|(yi, ai)| yi - ai)
        .collect();
    let w = gram.solve_upper_transposed(&residual);
    let delta = gram.q().matvec(&w);
    let mut out = x.clone();
    for (k, d) in delta.iter().enumerate() {
        out[(k / op.n, k % op.n)] += d;
    }
    Ok(out)
}

/// Write an operator to a binary file: magic `ULAB0001`, then n, m, seed
/// as little-endian u64. When the operator is reproducible from its seed
/// the file ends there; otherwise the m * n^2 sensing entries follow as
/// little-endian f64, row-major per matrix.
pub fn save_operator(op: &MeasurementOperator, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(OPERATOR_MAGIC)?;
    f.write_all(&(op.n as u64).to_le_bytes())?;
    f.write_all(&(op.m() as u64).to_le_bytes())?;
    f.write_all(&op.seed.unwrap_or(0).to_le_bytes())?;
    if op.seed.is_none() {
        for a in &op.sensing {
            for v in a.data() {
                f.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Read an operator written by [`save_operator`], re-sampling from the
/// stored seed when the body was omitted.
pub fn load_operator(path: &Path) -> Result<MeasurementOperator> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != OPERATOR_MAGIC {
        return Err(Error::Parse {
            line: 0,
            message: "bad magic bytes (not an operator file)".into(),
        });
    }
    let mut word = [0u8; 8];
    f.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    f.read_exact(&mut word)?;
    let m = u64::from_le_bytes(word) as usize;
    f.read_exact(&mut word)?;
    let seed = u64::from_le_bytes(word);
    if n == 0 || n > 4096 || m > n * n {
        return Err(Error::Parse {
            line: 0,
            message: format!("implausible header: n={n}, m={m}"),
        });
    }
    let mut body = Vec::new();
    f.read_to_end(&mut body)?;
    if body.is_empty() {
        return sample_gaussian_operator(n, m, Rng::new(seed));
    }
    let expected = m * n * n * 8;
    if body.len() != expected {
        return Err(Error::Parse {
            line: 0,
            message: format!("body holds {} bytes, expected {expected}", body.len()),
        });
    }
    let mut sensing = Vec::with_capacity(m);
    for i in 0..m {
        let mut data = Vec::with_capacity(n * n);
        for k in 0..n * n {
            let at = (i * n * n + k) * 8;
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&body[at..at + 8]);
            data.push(f64::from_le_bytes(buf));
        }
        sensing.push(Matrix::from_vec(n, n, data)?);
    }
    MeasurementOperator::from_sensing(n, sensing)
}

/// Coordinate sensing: the full n^2 single-entry indicator matrices, in
/// row-major order. `apply` then returns the entries of its argument.
pub fn coordinate_operator(n: usize) -> MeasurementOperator {
    let sensing: Vec<Matrix> = (0..n * n)
        .map(|k| Matrix::from_fn(n, n, |i, j| if i * n + j == k { 1.0 } else { 0.0 }))
        .collect();
    MeasurementOperator::from_sensing(n, sensing).expect("coordinate operator is always valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RANK_REL_TOL;

    #[test]
    fn coordinate_sensing_reads_entries() {
        let op = coordinate_operator(3);
        let x = Matrix::from_fn(3, 3, |i, j| (3 * i + j) as f64);
        let y = apply(&op, &x);
        assert_eq!(y.values(), x.data());
        assert_eq!(apply(&op, &Matrix::zeros(3, 3)).norm(), 0.0);
    }

    #[test]
    fn apply_is_linear() {
        let mut rng = Rng::new(8);
        let op = sample_gaussian_operator(4, 7, Rng::new(99)).unwrap();
        for _ in 0..50 {
            let x = gaussian_matrix(4, 4, &mut rng);
            let z = gaussian_matrix(4, 4, &mut rng);
            let (a, b) = (rng.next_normal(), rng.next_normal());
            let lhs = apply(&op, &x.scale(a).add(&z.scale(b)));
            let scale = lhs.norm().max(1.0);
            for i in 0..7 {
                let rhs = a * apply(&op, &x).values()[i] + b * apply(&op, &z).values()[i];
                assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_gaussian_operator(5, 9, Rng::new(1)).unwrap();
        let b = sample_gaussian_operator(5, 9, Rng::new(1)).unwrap();
        for (x, y) in a.sensing().iter().zip(b.sensing()) {
            assert_eq!(x, y);
        }
        assert_eq!(a.seed(), Some(1));
    }

    #[test]
    fn rejects_too_many_measurements() {
        assert!(sample_gaussian_operator(3, 10, Rng::new(0)).is_err());
        assert!(sample_gaussian_operator(3, 9, Rng::new(0)).is_ok());
    }

    #[test]
    fn empty_operator() {
        let op = sample_gaussian_operator(3, 0, Rng::new(5)).unwrap();
        let x = Matrix::identity(3);
        assert!(apply(&op, &x).is_empty());
        let proj = project_affine(&op, &x, &MeasurementVector::zeros(0)).unwrap();
        assert_eq!(proj, x);
        assert_eq!(adjoint(&op, &MeasurementVector::zeros(0)), Matrix::zeros(3, 3));
    }

    #[test]
    fn full_ensemble_is_invertible_over_100_seeds() {
        for seed in 0..100 {
            let op = sample_gaussian_operator(4, 16, Rng::new(seed)).unwrap();
            assert_eq!(op.flat_rank(), 16, "seed {seed}");
        }
    }

    #[test]
    fn adjoint_examples_and_identity() {
        let op = sample_gaussian_operator(4, 6, Rng::new(17)).unwrap();
        let mut e1 = vec![0.0; 6];
        e1[0] = 1.0;
        assert_eq!(&adjoint(&op, &MeasurementVector::new(e1)), &op.sensing()[0]);

        let mut rng = Rng::new(18);
        for _ in 0..200 {
            let x = gaussian_matrix(4, 4, &mut rng);
            let y = MeasurementVector::new((0..6).map(|_| rng.next_normal()).collect());
            let lhs = crate::linalg::dot(apply(&op, &x).values(), y.values());
            let rhs = x.dot(&adjoint(&op, &y));
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
        }
    }

    #[test]
    fn projection_feasibility_and_idempotence() {
        let mut rng = Rng::new(23);
        let op = sample_gaussian_operator(5, 12, Rng::new(24)).unwrap();
        for _ in 0..50 {
            let x = gaussian_matrix(5, 5, &mut rng);
            let target = gaussian_matrix(5, 5, &mut rng);
            let y = apply(&op, &target);
            let proj = project_affine(&op, &x, &y).unwrap();
            let reach = apply(&op, &proj);
            let err: f64 = reach
                .values()
                .iter()
                .zip(y.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-10 * y.norm().max(1.0));
            let again = project_affine(&op, &proj, &y).unwrap();
            assert!(again.sub(&proj).frobenius_norm() <= 1e-12 * proj.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn projection_nonexpansive() {
        let mut rng = Rng::new(29);
        let op = sample_gaussian_operator(4, 9, Rng::new(30)).unwrap();
        let y = apply(&op, &gaussian_matrix(4, 4, &mut rng));
        for _ in 0..50 {
            let x = gaussian_matrix(4, 4, &mut rng);
            let z = gaussian_matrix(4, 4, &mut rng);
            let px = project_affine(&op, &x, &y).unwrap();
            let pz = project_affine(&op, &z, &y).unwrap();
            assert!(
                px.sub(&pz).frobenius_norm() <= x.sub(&z).frobenius_norm() * (1.0 + 1e-12)
            );
        }
    }

    #[test]
    fn fully_determined_projection_recovers_target() {
        for seed in 0..20 {
            let op = sample_gaussian_operator(3, 9, Rng::new(400 + seed)).unwrap();
            let mut rng = Rng::new(500 + seed);
            let target = gaussian_matrix(3, 3, &mut rng);
            let y = apply(&op, &target);
            let start = gaussian_matrix(3, 3, &mut rng);
            let proj = project_affine(&op, &start, &y).unwrap();
            assert!(
                proj.sub(&target).frobenius_norm() <= 1e-8 * target.frobenius_norm(),
                "seed {seed}"
            );
        }
        // coordinate case: projection is determined by y regardless of start
        let op = coordinate_operator(3);
        let target = Matrix::from_fn(3, 3, |i, j| (i + 2 * j) as f64);
        let y = apply(&op, &target);
        let proj = project_affine(&op, &Matrix::identity(3), &y).unwrap();
        assert!(proj.sub(&target).frobenius_norm() < 1e-12);
    }

    #[test]
    fn feasible_point_unchanged() {
        let op = sample_gaussian_operator(4, 8, Rng::new(31)).unwrap();
        let mut rng = Rng::new(32);
        let x = gaussian_matrix(4, 4, &mut rng);
        let y = apply(&op, &x);
        let proj = project_affine(&op, &x, &y).unwrap();
        assert!(proj.sub(&x).frobenius_norm() <= 1e-12 * x.frobenius_norm());
    }

    #[test]
    fn serialization_round_trips() {
        let dir = tempfile::tempdir().unwrap();

        // seed-reproducible: 32-byte file, body omitted
        let op = sample_gaussian_operator(4, 6, Rng::new(77)).unwrap();
        let p = dir.path().join("seeded.ulab");
        save_operator(&op, &p).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 32);
        let back = load_operator(&p).unwrap();
        for (a, b) in op.sensing().iter().zip(back.sensing()) {
            assert_eq!(a, b);
        }

        // explicit sensing: body present
        let coord = coordinate_operator(3);
        let p2 = dir.path().join("explicit.ulab");
        save_operator(&coord, &p2).unwrap();
        assert!(std::fs::metadata(&p2).unwrap().len() > 32);
        let back2 = load_operator(&p2).unwrap();
        for (a, b) in coord.sensing().iter().zip(back2.sensing()) {
            assert_eq!(a, b);
        }

        // corrupted magic rejected
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[0] = b'X';
        let p3 = dir.path().join("bad.ulab");
        std::fs::write(&p3, bytes).unwrap();
        assert!(matches!(load_operator(&p3), Err(Error::Parse { .. })));
    }

    #[test]
    fn rank_one_recovery_setup_sanity() {
        // with m = n^2, any target is pinned by its measurements
        let op = sample_gaussian_operator(3, 9, Rng::new(3)).unwrap();
        let mut rng = Rng::new(4);
        let u = gaussian_matrix(3, 1, &mut rng);
        let v = gaussian_matrix(3, 1, &mut rng);
        let target = u.matmul(&v.transpose());
        let y = apply(&op, &target);
        let rec = project_affine(&op, &Matrix::zeros(3, 3), &y).unwrap();
        assert!(rec.sub(&target).frobenius_norm() <= 1e-8 * target.frobenius_norm());
        assert_eq!(rec.rank(RANK_REL_TOL), 1);
    }
}
