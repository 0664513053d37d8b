use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use crate::cnf::Formula;
use crate::engine::{Engine, Limits, RunResult, SolverConfig};

/// Runs `threads` independent searches over one formula. The first model
/// found wins and raises a shared stop flag that the other workers poll.
///
/// Worker `i` derives its generator from `(cfg.seed, try, i)`, so worker 0
/// reproduces a plain single-threaded run exactly.
pub fn solve_portfolio(
    formula: &Formula,
    cfg: &SolverConfig,
    threads: usize,
    timeout: Option<Duration>,
) -> RunResult {
    assert!(threads >= 1, "portfolio needs at least one thread");
    let start = Instant::now();
    let deadline = timeout.map(|t| start + t);
    if threads == 1 {
        return Engine::new(formula, cfg.clone(), 0).run(&Limits {
            deadline,
            stop: None,
        });
    }

    let stop = AtomicBool::new(false);
    let winner: Mutex<Option<RunResult>> = Mutex::new(None);
    let results: Vec<RunResult> = thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|worker| {
                let (stop, winner) = (&stop, &winner);
                scope.spawn(move || {
                    let mut engine = Engine::new(formula, cfg.clone(), worker);
                    let result = engine.run(&Limits {
                        deadline,
                        stop: Some(stop),
                    });
                    if result.is_sat() {
                        let mut slot = winner.lock().unwrap();
                        if slot.is_none() {
                            *slot = Some(result.clone());
                            stop.store(true, Ordering::Relaxed);
                        }
                    }
                    result
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("portfolio worker panicked"))
            .collect()
    });

    let mut out = match winner.into_inner().unwrap() {
        Some(result) => result,
        None => {
            let mut first = results[0].clone();
            first.flips = results.iter().map(|r| r.flips).sum();
            first
        }
    };
    out.elapsed = start.elapsed();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run;
    use crate::harness::planted_ksat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_thread_matches_plain_run() {
        let (f, _) = planted_ksat(40, 160, 3, &mut ChaCha8Rng::seed_from_u64(3));
        let cfg = SolverConfig {
            seed: 17,
            ..SolverConfig::default()
        };
        let a = run(&f, &cfg);
        let b = solve_portfolio(&f, &cfg, 1, None);
        assert!(a.same_outcome(&b));
    }

    #[test]
    fn many_threads_find_model() {
        let (f, _) = planted_ksat(60, 240, 3, &mut ChaCha8Rng::seed_from_u64(4));
        let r = solve_portfolio(
            &f,
            &SolverConfig::default(),
            8,
            Some(Duration::from_secs(30)),
        );
        assert!(r.is_sat());
        assert_eq!(f.verify_model(r.model.as_ref().unwrap()), Ok(true));
    }

    #[test]
    fn unsatisfiable_times_out() {
        let f = Formula::from_dimacs_clauses(1, &[vec![1], vec![-1]]).unwrap();
        let start = Instant::now();
        let r = solve_portfolio(
            &f,
            &SolverConfig::default(),
            4,
            Some(Duration::from_millis(200)),
        );
        assert!(!r.is_sat());
        assert!(start.elapsed() < Duration::from_secs(5));
    }
}
