use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::cnf::{parse_dimacs, Formula};
use crate::engine::{Engine, Limits, SolverConfig};
use crate::weights::TransferPolicy;

use super::par2::{par2, BatchRecord};
use super::{HarnessError, Tsv};

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub formula: Formula,
}

impl Instance {
    pub fn new(name: impl Into<String>, formula: Formula) -> Instance {
        Instance {
            name: name.into(),
            formula,
        }
    }
}

/// Limits applied to every run of an experiment. The wall-clock timeout is
/// authoritative for PAR-2; `max_flips`, when set, overrides the
/// configuration's iteration budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    pub timeout: Duration,
    pub max_flips: Option<u64>,
}

impl Budget {
    pub fn timeout(timeout: Duration) -> Budget {
        Budget {
            timeout,
            max_flips: None,
        }
    }

    fn secs(&self) -> f64 {
        self.timeout.as_secs_f64()
    }
}

/// Reads one DIMACS file, or every `*.cnf` file in a directory in name
/// order.
pub fn load_instances(path: &Path) -> Result<Vec<Instance>, HarnessError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    let mut files: Vec<PathBuf> = if path.is_dir() {
        fs::read_dir(path)
            .map_err(io(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "cnf"))
            .collect()
    } else {
        vec![path.to_path_buf()]
    };
    files.sort();
    files
        .into_iter()
        .map(|file| {
            let bytes = fs::read(&file).map_err(io(&file))?;
            let formula = parse_dimacs(&bytes).map_err(|source| HarnessError::Parse {
                path: file.clone(),
                source,
            })?;
            let name = file.file_name().map_or_else(
                || file.display().to_string(),
                |n| n.to_string_lossy().into_owned(),
            );
            Ok(Instance::new(name, formula))
        })
        .collect()
}

fn run_one(instance: &Instance, cfg: &SolverConfig, budget: &Budget) -> BatchRecord {
    let mut cfg = cfg.clone();
    if budget.max_flips.is_some() {
        cfg.max_flips = budget.max_flips;
    }
    let label = cfg.label().to_string();
    let seed = cfg.seed;
    let result = Engine::new(&instance.formula, cfg, 0).run(&Limits::timeout(Some(budget.timeout)));
    BatchRecord {
        instance: instance.name.clone(),
        config: label,
        seed,
        status: result.status,
        solve_time: result.elapsed.as_secs_f64(),
        flips: result.flips,
        counters: result.counters,
    }
}

/// One run per instance.
pub fn bench(instances: &[Instance], cfg: &SolverConfig, budget: &Budget) -> Vec<BatchRecord> {
    instances.iter().map(|i| run_one(i, cfg, budget)).collect()
}

/// `start, start + step, ..., ≤ end`, rounded to 1e-9 so that decimal steps
/// come out exact.
pub fn steps(start: f64, end: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0);
    let n = ((end - start) / step + 1e-9).floor();
    if n < 0.0 {
        return Vec::new();
    }
    (0..=n as usize)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridRow {
    pub a: f64,
    pub c: f64,
    pub solved: usize,
    pub par2: f64,
}

impl Tsv for GridRow {
    const HEADER: &'static [&'static str] = &["a", "c", "solved", "par2"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.a.to_string(),
            self.c.to_string(),
            self.solved.to_string(),
            format!("{:.3}", self.par2),
        ]
    }
}

/// PAR-2 for every `(a, c)` cell of the single-rule linear transfer
/// `a·W + c`, applied to heavy and non-heavy givers alike. The cell
/// `(0, 0)` is skipped.
pub fn grid_search(
    instances: &[Instance],
    a_values: &[f64],
    c_values: &[f64],
    base: &SolverConfig,
    budget: &Budget,
) -> Result<Vec<GridRow>, HarnessError> {
    if instances.is_empty() {
        return Err(HarnessError::NoInstances);
    }
    let cells: Vec<(f64, f64)> = a_values
        .iter()
        .flat_map(|&a| c_values.iter().map(move |&c| (a, c)))
        .filter(|&(a, c)| !(a == 0.0 && c == 0.0))
        .collect();
    if cells.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    cells
        .into_iter()
        .map(|(a, c)| {
            let policy = if a == 0.0 {
                TransferPolicy::fixed(c, c)?
            } else {
                TransferPolicy::linear(a, a, c, c)?
            };
            let cfg = SolverConfig {
                policy,
                ..base.clone()
            };
            let summary = par2(&bench(instances, &cfg, budget), budget.secs())?;
            Ok(GridRow {
                a,
                c,
                solved: summary.solved,
                par2: summary.par2,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsptRow {
    pub cspt: f64,
    pub solved: usize,
    pub par2: f64,
}

impl Tsv for CsptRow {
    const HEADER: &'static [&'static str] = &["cspt", "solved", "par2"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.cspt.to_string(),
            self.solved.to_string(),
            format!("{:.3}", self.par2),
        ]
    }
}

pub fn cspt_sweep(
    instances: &[Instance],
    values: &[f64],
    base: &SolverConfig,
    budget: &Budget,
) -> Result<Vec<CsptRow>, HarnessError> {
    if instances.is_empty() {
        return Err(HarnessError::NoInstances);
    }
    values
        .iter()
        .map(|&cspt| {
            let mut cfg = base.clone();
            cfg.coins.cspt = cspt;
            let summary = par2(&bench(instances, &cfg, budget), budget.secs())?;
            Ok(CsptRow {
                cspt,
                solved: summary.solved,
                par2: summary.par2,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRow {
    /// Flip count at the end of the window.
    pub flips: u64,
    pub sideways: u64,
}

impl Tsv for TraceRow {
    const HEADER: &'static [&'static str] = &["flips", "sideways"];

    fn fields(&self) -> Vec<String> {
        vec![self.flips.to_string(), self.sideways.to_string()]
    }
}

/// Sideways flips per window of `window` flips, for one run of at most
/// `max_flips` loop iterations.
pub fn sideways_trace(
    formula: &Formula,
    cfg: &SolverConfig,
    window: u64,
    max_flips: u64,
) -> Vec<TraceRow> {
    let cfg = SolverConfig {
        max_flips: Some(max_flips),
        ..cfg.clone()
    };
    let mut engine = Engine::new(formula, cfg, 0).with_sideways_trace(window);
    engine.run(&Limits::none());
    trace_rows(&engine)
}

/// Window rows recorded by an engine built `with_sideways_trace`.
pub fn trace_rows(engine: &Engine<'_>) -> Vec<TraceRow> {
    let total = engine.total_flips();
    let Some(trace) = engine.trace() else {
        return Vec::new();
    };
    trace
        .counts
        .iter()
        .enumerate()
        .map(|(i, &sideways)| TraceRow {
            flips: ((i as u64 + 1) * trace.window).min(total),
            sideways,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{planted_ksat, to_tsv};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy() -> Vec<Instance> {
        let (f, _) = planted_ksat(20, 60, 3, &mut ChaCha8Rng::seed_from_u64(1));
        vec![Instance::new("toy", f)]
    }

    #[test]
    fn step_ranges() {
        assert_eq!(steps(0.0, 0.2, 0.05), vec![0.0, 0.05, 0.1, 0.15, 0.2]);
        assert_eq!(steps(0.0, 2.0, 0.25).len(), 9);
        assert_eq!(steps(0.01, 1.0, 0.01).len(), 100);
        assert_eq!(steps(0.01, 1.0, 0.01)[99], 1.0);
    }

    #[test]
    fn grid_excludes_origin() {
        let budget = Budget::timeout(Duration::from_secs(5));
        let rows = grid_search(
            &toy(),
            &steps(0.0, 0.2, 0.05),
            &steps(0.0, 2.0, 0.25),
            &SolverConfig::default(),
            &budget,
        )
        .unwrap();
        assert_eq!(rows.len(), 44);
        assert!(!rows.iter().any(|r| r.a == 0.0 && r.c == 0.0));
        assert!(rows.iter().all(|r| r.solved == 1 && r.par2 < 1.0));
        let err = grid_search(&toy(), &[0.0], &[0.0], &SolverConfig::default(), &budget);
        assert!(matches!(err, Err(HarnessError::EmptyGrid)));
    }

    #[test]
    fn cspt_rows() {
        let rows = cspt_sweep(
            &toy(),
            &[0.01, 0.1],
            &SolverConfig::default(),
            &Budget::timeout(Duration::from_secs(5)),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        let tsv = to_tsv(&rows);
        assert!(tsv.starts_with("cspt\tsolved\tpar2\n0.01\t1\t"));
        assert_eq!(tsv.lines().count(), 3);
    }

    #[test]
    fn ablation_trace_is_all_zero() {
        let f = Formula::from_dimacs_clauses(1, &[vec![1], vec![-1]]).unwrap();
        let cfg = SolverConfig {
            sideways: false,
            policy: TransferPolicy::FIXED,
            ..SolverConfig::default()
        };
        let rows = sideways_trace(&f, &cfg, 10, 1000);
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.sideways == 0));
    }

    #[test]
    fn fixed_weights_trace_has_sideways_moves() {
        // Over-constrained random 3-SAT keeps the search in local minima
        // where integer weights often tie.
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let clauses: Vec<Vec<i32>> = (0..300)
            .map(|_| {
                (0..3)
                    .map(|_| rng.gen_range(1..=50) * if rng.gen() { 1 } else { -1 })
                    .collect()
            })
            .collect();
        let f = Formula::from_dimacs_clauses(50, &clauses).unwrap();
        let cfg = SolverConfig {
            policy: TransferPolicy::FIXED,
            ..SolverConfig::default()
        };
        let rows = sideways_trace(&f, &cfg, 1000, 20_000);
        assert!(rows.iter().any(|r| r.sideways > 0));
        assert_eq!(rows[0].flips, 1000);
    }

    #[test]
    fn loads_directory_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.cnf"), "p cnf 1 1\n1 0\n").unwrap();
        fs::write(dir.path().join("a.cnf"), "p cnf 2 1\n1 2 0\n").unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let got = load_instances(dir.path()).unwrap();
        assert_eq!(
            got.iter().map(|i| i.name.as_str()).collect::<Vec<_>>(),
            vec!["a.cnf", "b.cnf"]
        );
        fs::write(dir.path().join("c.cnf"), "p cnf 1 1\n0\n").unwrap();
        assert!(matches!(
            load_instances(dir.path()),
            Err(HarnessError::Parse { .. })
        ));
    }
}
