//! Counter-based deterministic random numbers.
//!
//! The generator maps `(seed, counter)` through the splitmix64 finalizer,
//! so a stream is a pure function of its seed: identical seeds give
//! identical streams on every platform and thread. Child streams are
//! derived by hashing `(seed, index)`, which keeps parallel trial order
//! from ever changing results.

use super::Matrix;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const CHILD_SALT: u64 = 0x6A09_E667_F3BC_C909;

/// splitmix64 finalizer; bijective on u64.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic 64-bit-seeded generator with child-stream derivation.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    counter: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { seed, counter: 0 }
    }

    /// The seed this stream was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// True until the first draw; a fresh stream is reproducible from
    /// its seed alone.
    pub fn is_fresh(&self) -> bool {
        self.counter == 0
    }

    /// Derived stream for `index`. Distinct indices give distinct seeds
    /// (the derivation is a bijection of `index` for fixed parent seed),
    /// and the derivation ignores how much of the parent was consumed.
    pub fn child(&self, index: u64) -> Rng {
        Rng::new(mix(self.seed ^ mix(index.wrapping_add(CHILD_SALT))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform draw in the open interval (0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// One pair of independent standard normals via Box-Muller.
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        (radius * angle.cos(), radius * angle.sin())
    }

    /// One standard normal (drops the second half of a Box-Muller pair).
    pub fn next_normal(&mut self) -> f64 {
        self.next_normal_pair().0
    }
}

/// Matrix with independent standard normal entries, filled row-major.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    let total = rows * cols;
    let mut idx = 0;
    while idx + 1 < total {
        let (a, b) = rng.next_normal_pair();
        let (i0, j0) = (idx / cols, idx % cols);
        let (i1, j1) = ((idx + 1) / cols, (idx + 1) % cols);
        m[(i0, j0)] = a;
        m[(i1, j1)] = b;
        idx += 2;
    }
    if idx < total {
        m[(idx / cols, idx % cols)] = rng.next_normal();
    }
    m
}
