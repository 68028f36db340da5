//! Seeded Monte Carlo experiment driver.
//!
//! One trial plants a unit-Frobenius rank-r ground truth, draws a fresh
//! Gaussian operator, measures, runs the selected method, and scores
//! success. Sweeps run every `(n, r, m, method)` cell of a grid with
//! independently derived per-trial seeds, so results are bit-identical
//! for any worker count and adding cells never perturbs existing ones.

mod csv;

pub use csv::{read_csv, write_crossings_csv, write_csv, write_trials_csv};

use crate::linalg::{gaussian_matrix, Matrix, Rng};
use crate::measurement::{apply, sample_gaussian_operator};
use crate::solvers::{
    nuclear_min, nullspace_rank_search, rank_minimize, SearchVerdict, SolverParams,
};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::time::Instant;

/// Relative Frobenius error at or below which a recovery trial counts
/// as a success: well above solver feasibility noise (1e-8), well below
/// typical failure errors (order one).
pub const SUCCESS_REL_TOL: f64 = 1e-4;

/// Which experiment a trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Rank minimization via the feasibility search.
    RankMin,
    /// Nuclear-norm minimization via operator splitting.
    NuclearMin,
    /// Null-space search at rank 2r; success means no intersection found.
    UnicitySearch,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::RankMin => "rank_min",
            Method::NuclearMin => "nuclear_min",
            Method::UnicitySearch => "unicity_search",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "rank_min" => Some(Method::RankMin),
            "nuclear_min" => Some(Method::NuclearMin),
            "unicity_search" => Some(Method::UnicitySearch),
            _ => None,
        }
    }

    fn id(&self) -> u64 {
        match self {
            Method::RankMin => 1,
            Method::NuclearMin => 2,
            Method::UnicitySearch => 3,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One seeded Monte Carlo cell sample.
#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub method: Method,
    pub master_seed: u64,
    pub trial_index: u64,
    pub solver: SolverParams,
}

impl TrialSpec {
    /// Per-trial seed derived from (master seed, cell hash, trial
    /// index); adding cells to a sweep never perturbs the streams of
    /// existing cells.
    pub fn derived_seed(&self) -> u64 {
        let cell = Rng::new(self.master_seed)
            .child(self.method.id())
            .child(self.n as u64)
            .child(self.r as u64)
            .child(self.m as u64);
        cell.child(self.trial_index).seed()
    }
}

/// Result of one trial, echoing its spec.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub spec: TrialSpec,
    /// Recovery methods: relative error at most [`SUCCESS_REL_TOL`].
    /// Unicity search: verdict NOT FOUND.
    pub success: bool,
    /// Recovery methods: `|x_hat - M|_F / |M|_F`. Unicity search: the
    /// search objective.
    pub rel_error: f64,
    /// Recovery methods: relative constraint residual. Unicity search:
    /// `|A(witness)|_2`.
    pub residual: f64,
    /// Seconds spent in the solver; the only nondeterministic field.
    pub wall_time: f64,
}

/// Run one seeded trial. Solver failures are data (recorded as
/// unsuccessful outcomes), never panics or errors.
pub fn run_trial(spec: &TrialSpec) -> TrialOutcome {
    let start = Instant::now();
    let root = Rng::new(spec.derived_seed());
    let mut solver = spec.solver.clone();
    solver.seed = root.child(2).seed();

    let (success, rel_error, residual) = match spec.method {
        Method::RankMin | Method::NuclearMin => {
            let target = unit_rank_r(spec.n, spec.r, &mut root.child(0));
            let op = sample_gaussian_operator(spec.n, spec.m, root.child(1))
                .expect("grid validation keeps m <= n^2");
            let y = apply(&op, &target);
            let rec = match spec.method {
                Method::RankMin => rank_minimize(&op, &y, spec.r, &solver),
                Method::NuclearMin => match nuclear_min(&op, &y, &solver) {
                    Ok(rec) => rec,
                    Err(_) => {
                        // degenerate ensemble: record as failure
                        return TrialOutcome {
                            spec: spec.clone(),
                            success: false,
                            rel_error: f64::INFINITY,
                            residual: f64::INFINITY,
                            wall_time: start.elapsed().as_secs_f64(),
                        };
                    }
                },
                Method::UnicitySearch => unreachable!(),
            };
            let rel = rec.x_hat.sub(&target).frobenius_norm() / target.frobenius_norm();
            (rel <= SUCCESS_REL_TOL, rel, rec.residual)
        }
        Method::UnicitySearch => {
            let op = sample_gaussian_operator(spec.n, spec.m, root.child(1))
                .expect("grid validation keeps m <= n^2");
            let k = (2 * spec.r).min(spec.n);
            let search = nullspace_rank_search(&op, k, &solver);
            (
                search.verdict == SearchVerdict::NotFound,
                search.objective,
                search.objective.sqrt(),
            )
        }
    };

    TrialOutcome {
        spec: spec.clone(),
        success,
        rel_error,
        residual,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Ground truth: product of two Gaussian width-r factors, normalized to
/// unit Frobenius norm (a rotation-invariant draw from the rank-r
/// manifold).
fn unit_rank_r(n: usize, r: usize, rng: &mut Rng) -> Matrix {
    let x = gaussian_matrix(n, r, rng).matmul(&gaussian_matrix(n, r, rng).transpose());
    let norm = x.frobenius_norm();
    x.scale(1.0 / norm)
}

/// Cell coordinates of a phase table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub method: Method,
    pub n: usize,
    pub r: usize,
    pub m: usize,
}

/// Counts for one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellStats {
    pub trials: usize,
    pub successes: usize,
}

impl CellStats {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// Success counts over an `(n, r, m, method)` grid with estimated 50%
/// crossings per `(method, n, r)` curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    pub cells: BTreeMap<CellKey, CellStats>,
    /// Estimated m where the success rate first crosses 0.5 upward;
    /// present only when some rate pair brackets 0.5.
    pub crossings: BTreeMap<(Method, usize, usize), f64>,
}

impl PhaseTable {
    /// Assemble a table from cells, computing crossings.
    pub fn from_cells(cells: BTreeMap<CellKey, CellStats>) -> PhaseTable {
        let mut curves: BTreeMap<(Method, usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
        for (key, stats) in &cells {
            curves
                .entry((key.method, key.n, key.r))
                .or_default()
                .push((key.m as f64, stats.rate()));
        }
        let mut crossings = BTreeMap::new();
        for (curve, rates) in curves {
            // BTreeMap iteration already sorts by m within a curve
            if let Some(mstar) = estimate_crossing(&rates) {
                crossings.insert(curve, mstar);
            }
        }
        PhaseTable { cells, crossings }
    }

    /// Success rates of one curve, sorted by m.
    pub fn rates_for(&self, method: Method, n: usize, r: usize) -> Vec<(usize, f64)> {
        self.cells
            .iter()
            .filter(|(k, _)| k.method == method && k.n == n && k.r == r)
            .map(|(k, s)| (k.m, s.rate()))
            .collect()
    }
}

/// First upward 0.5 crossing of a rate curve sorted by m, by linear
/// interpolation between the bracketing pair; `None` when no pair
/// brackets 0.5 from below.
pub fn estimate_crossing(rates: &[(f64, f64)]) -> Option<f64> {
    for pair in rates.windows(2) {
        let (m0, r0) = pair[0];
        let (m1, r1) = pair[1];
        if r0 < 0.5 && r1 >= 0.5 {
            return Some(m0 + (m1 - m0) * (0.5 - r0) / (r1 - r0));
        }
    }
    None
}

/// Grid description for a sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub r_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub methods: Vec<Method>,
    pub trials_per_cell: usize,
    pub master_seed: u64,
    pub solver: SolverParams,
    /// Rayon worker count; 0 means the default parallelism. Output is
    /// bit-identical for every value.
    pub workers: usize,
}

/// Run every cell of the grid and aggregate a phase table. Cells with
/// `m > n^2` or `r > n` are skipped.
pub fn phase_sweep(cfg: &SweepConfig) -> PhaseTable {
    run_sweep(cfg).0
}

/// Like [`phase_sweep`] but also returns the per-trial outcomes, sorted
/// by (method, n, r, m, trial index).
pub fn run_sweep(cfg: &SweepConfig) -> (PhaseTable, Vec<TrialOutcome>) {
    assert!(cfg.trials_per_cell >= 1, "need at least one trial per cell");
    let mut jobs: Vec<TrialSpec> = Vec::new();
    for &method in &cfg.methods {
        for &n in &cfg.n_list {
            for &r in &cfg.r_list {
                if r == 0 || r > n {
                    continue;
                }
                for &m in &cfg.m_list {
                    if m > n * n {
                        continue;
                    }
                    for trial in 0..cfg.trials_per_cell {
                        jobs.push(TrialSpec {
                            n,
                            r,
                            m,
                            method,
                            master_seed: cfg.master_seed,
                            trial_index: trial as u64,
                            solver: cfg.solver.clone(),
                        });
                    }
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .expect("thread pool construction");
    // indexed map keeps the reduction order independent of scheduling
    let outcomes: Vec<TrialOutcome> = pool.install(|| jobs.par_iter().map(run_trial).collect());

    let mut cells: BTreeMap<CellKey, CellStats> = BTreeMap::new();
    for out in &outcomes {
        let key = CellKey {
            method: out.spec.method,
            n: out.spec.n,
            r: out.spec.r,
            m: out.spec.m,
        };
        let stats = cells.entry(key).or_insert(CellStats {
            trials: 0,
            successes: 0,
        });
        stats.trials += 1;
        if out.success {
            stats.successes += 1;
        }
    }
    (PhaseTable::from_cells(cells), outcomes)
}
