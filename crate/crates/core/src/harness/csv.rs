//! CSV persistence for trials, phase tables, and crossing summaries.
//!
//! Files are UTF-8 with LF line endings and need no quoting. Numeric
//! fields keep full double precision (Rust's shortest round-trip
//! formatting); readers are order-insensitive.

use super::{CellKey, CellStats, Method, PhaseTable, TrialOutcome};
use crate::error::Error;
use crate::theory::{self, ProblemDims};
use crate::Result;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

const TRIALS_HEADER: &str = "method,n,r,m,trial,seed,success,rel_error,residual,wall_time_s";
const SUMMARY_HEADER: &str = "method,n,r,m,trials,successes,rate";
const CROSSINGS_HEADER: &str =
    "method,n,r,m_star,weak_threshold,strong_threshold,nuclear_empirical_ref";

/// Write one row per trial.
pub fn write_trials_csv(outcomes: &[TrialOutcome], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(TRIALS_HEADER);
    out.push('\n');
    for o in outcomes {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            o.spec.method,
            o.spec.n,
            o.spec.r,
            o.spec.m,
            o.spec.trial_index,
            o.spec.derived_seed(),
            o.success,
            o.rel_error,
            o.residual,
            o.wall_time
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write a phase table as one summary row per cell.
pub fn write_csv(table: &PhaseTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for (key, stats) in &table.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            key.method,
            key.n,
            key.r,
            key.m,
            stats.trials,
            stats.successes,
            stats.rate()
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a summary file back into a phase table. Row order does not
/// matter; crossings are recomputed from the cells. Malformed content
/// reports the offending line number.
pub fn read_csv(path: &Path) -> Result<PhaseTable> {
    let text = std::fs::read_to_string(path)?;
    let mut cells: BTreeMap<CellKey, CellStats> = BTreeMap::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SUMMARY_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("unexpected header: {header}"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let method = Method::parse(fields[0]).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("unknown method: {}", fields[0]),
        })?;
        let parse_usize = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad {what}: {s}"),
            })
        };
        let key = CellKey {
            method,
            n: parse_usize(fields[1], "n")?,
            r: parse_usize(fields[2], "r")?,
            m: parse_usize(fields[3], "m")?,
        };
        let stats = CellStats {
            trials: parse_usize(fields[4], "trials")?,
            successes: parse_usize(fields[5], "successes")?,
        };
        if stats.successes > stats.trials {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "successes {} exceed trials {}",
                    stats.successes, stats.trials
                ),
            });
        }
        if cells.insert(key, stats).is_some() {
            return Err(Error::Parse {
                line: lineno,
                message: "duplicate cell".into(),
            });
        }
    }
    Ok(PhaseTable::from_cells(cells))
}

/// Write estimated crossings next to the theory reference columns. One
/// row per `(method, n, r)` curve in the table; empty m_star when no
/// bracket exists, empty strong threshold when r > n/2.
pub fn write_crossings_csv(table: &PhaseTable, path: &Path) -> Result<()> {
    let mut curves: Vec<(Method, usize, usize)> = table
        .cells
        .keys()
        .map(|k| (k.method, k.n, k.r))
        .collect();
    curves.dedup();
    let mut out = String::new();
    out.push_str(CROSSINGS_HEADER);
    out.push('\n');
    for (method, n, r) in curves {
        let m_star = table
            .crossings
            .get(&(method, n, r))
            .map(|v| v.to_string())
            .unwrap_or_default();
        let dims = ProblemDims::new(n, r).map_err(|_| Error::InvalidArgument {
            context: "write_crossings_csv",
            message: format!("invalid cell dims n={n}, r={r}"),
        })?;
        let weak = theory::weak_threshold(dims);
        let strong = theory::strong_threshold(dims)
            .map(|v| v.to_string())
            .unwrap_or_default();
        let nuclear = theory::nuclear_empirical_ref(dims);
        writeln!(out, "{method},{n},{r},{m_star},{weak},{strong},{nuclear}")
            .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::SolverParams;

    fn sample_table() -> PhaseTable {
        let mut cells = BTreeMap::new();
        for (m, successes) in [(8, 2), (12, 25), (16, 48)] {
            cells.insert(
                CellKey {
                    method: Method::RankMin,
                    n: 8,
                    r: 1,
                    m,
                },
                CellStats {
                    trials: 50,
                    successes,
                },
            );
        }
        PhaseTable::from_cells(cells)
    }

    #[test]
    fn summary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        let table = sample_table();
        write_csv(&table, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn empty_table_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let table = PhaseTable::from_cells(BTreeMap::new());
        write_csv(&table, &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            format!("{SUMMARY_HEADER}\n")
        );
        assert_eq!(read_csv(&path).unwrap(), table);
    }

    #[test]
    fn shuffled_rows_read_back_equal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("shuffled.csv");
        let table = sample_table();
        write_csv(&table, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1..].reverse();
        std::fs::write(&path, lines.join("\n")).unwrap();
        assert_eq!(read_csv(&path).unwrap(), table);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            format!("{SUMMARY_HEADER}\nrank_min,8,1,12,50,25,0.5\nrank_min,8,1,oops,50,25,0.5\n"),
        )
        .unwrap();
        match read_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "wrong,header\n").unwrap();
        assert!(matches!(
            read_csv(&path),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn successes_cannot_exceed_trials() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bogus.csv");
        std::fs::write(&path, format!("{SUMMARY_HEADER}\nrank_min,8,1,12,5,25,5\n")).unwrap();
        assert!(matches!(
            read_csv(&path),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn crossings_file_carries_theory_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("crossings.csv");
        write_crossings_csv(&sample_table(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CROSSINGS_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[0], "rank_min");
        assert_eq!(fields[4], "16"); // weak threshold for n=8, r=1
        assert_eq!(fields[5], "28"); // strong threshold
        assert_eq!(fields[6], "30"); // nuclear empirical reference
        let m_star: f64 = fields[3].parse().unwrap();
        assert!(m_star > 8.0 && m_star < 16.0);
    }

    #[test]
    fn trials_file_has_exact_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trials.csv");
        let spec = crate::harness::TrialSpec {
            n: 3,
            r: 1,
            m: 9,
            method: Method::RankMin,
            master_seed: 1,
            trial_index: 0,
            solver: SolverParams::default(),
        };
        let outcome = crate::harness::run_trial(&spec);
        write_trials_csv(&[outcome], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRIALS_HEADER);
        let row = lines.next().unwrap();
        assert!(row.starts_with("rank_min,3,1,9,0,"));
    }
}
