//! yalsat-style restarts: a dynamic restart interval, clause weights kept
//! across restarts, and alternation between the best cached assignment and
//! a fresh random one.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::cnf::Formula;
use crate::state::{Assignment, SearchState};
use crate::weights::WeightStore;

pub const DEFAULT_RESTART_BASE: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RestartSchedule {
    /// `x ← 1` if `x` is a power of two, else `x ← 2x`. Starting from
    /// `x = 1` this never leaves 1, so every interval equals the base.
    #[default]
    Literal,
    /// Luby sequence 1, 1, 2, 1, 1, 2, 4, ... times the base.
    Luby,
}

impl fmt::Display for RestartSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RestartSchedule::Literal => "literal",
            RestartSchedule::Luby => "luby",
        })
    }
}

impl FromStr for RestartSchedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "literal" => Ok(RestartSchedule::Literal),
            "luby" => Ok(RestartSchedule::Luby),
            _ => Err(format!(
                "unknown restart schedule {s:?} (expected literal or luby)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RestartConfig {
    pub enabled: bool,
    pub schedule: RestartSchedule,
    pub base: u64,
}

impl Default for RestartConfig {
    fn default() -> Self {
        RestartConfig {
            enabled: false,
            schedule: RestartSchedule::Literal,
            base: DEFAULT_RESTART_BASE,
        }
    }
}

/// Reluctant doubling (Knuth): yields the Luby sequence in O(1) per term.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Luby {
    u: u64,
    v: u64,
}

impl Luby {
    fn new() -> Luby {
        Luby { u: 1, v: 1 }
    }

    fn next(&mut self) -> u64 {
        let out = self.v;
        if self.u & self.u.wrapping_neg() == self.v {
            self.u += 1;
            self.v = 1;
        } else {
            self.v *= 2;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartPolicy {
    config: RestartConfig,
    x: u64,
    luby: Luby,
    restarts_done: u64,
    best: Option<Assignment>,
    best_falsified: usize,
}

impl RestartPolicy {
    pub fn new(config: RestartConfig) -> RestartPolicy {
        assert!(config.base >= 1, "restart base must be positive");
        RestartPolicy {
            config,
            x: 1,
            luby: Luby::new(),
            restarts_done: 0,
            best: None,
            best_falsified: usize::MAX,
        }
    }

    pub fn enabled(&self) -> bool {
        self.config.enabled
    }

    pub fn restarts_done(&self) -> u64 {
        self.restarts_done
    }

    pub fn best_falsified(&self) -> Option<usize> {
        self.best.as_ref().map(|_| self.best_falsified)
    }

    pub fn best(&self) -> Option<&Assignment> {
        self.best.as_ref()
    }

    /// Length in flips of the next search segment.
    pub fn next_interval(&mut self) -> u64 {
        let multiplier = match self.config.schedule {
            RestartSchedule::Literal => {
                let x = self.x;
                self.x = if x.is_power_of_two() { 1 } else { 2 * x };
                x
            }
            RestartSchedule::Luby => self.luby.next(),
        };
        self.config.base.saturating_mul(multiplier)
    }

    /// Caches the current assignment if it has fewer falsified clauses than
    /// any seen so far.
    pub fn observe(&mut self, state: &SearchState) {
        if state.num_falsified() < self.best_falsified {
            self.best_falsified = state.num_falsified();
            self.best = Some(state.assignment().clone());
        }
    }

    /// Starts the next segment. Even-numbered restarts (0-based) resume
    /// from the best cached assignment when one exists; odd-numbered ones
    /// draw a fresh random assignment. Weights are not touched.
    pub fn on_restart(
        &mut self,
        formula: &Formula,
        weights: &WeightStore,
        rng: &mut impl Rng,
    ) -> SearchState {
        let index = self.restarts_done;
        self.restarts_done += 1;
        match &self.best {
            Some(best) if index.is_multiple_of(2) => {
                SearchState::from_assignment(formula, weights, best.clone())
                    .expect("cached assignment has formula dimension")
            }
            _ => SearchState::random(formula, weights, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Var;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn enabled(schedule: RestartSchedule) -> RestartPolicy {
        RestartPolicy::new(RestartConfig {
            enabled: true,
            schedule,
            base: DEFAULT_RESTART_BASE,
        })
    }

    #[test]
    fn literal_schedule_is_constant() {
        let mut p = enabled(RestartSchedule::Literal);
        for _ in 0..5 {
            assert_eq!(p.next_interval(), 100_000);
        }
        assert_eq!(p.x, 1);
    }

    #[test]
    fn literal_rule_doubles_non_powers() {
        let mut p = enabled(RestartSchedule::Literal);
        p.x = 3;
        assert_eq!(p.next_interval(), 300_000);
        assert_eq!(p.next_interval(), 600_000);
        assert_eq!(p.next_interval(), 1_200_000);
        assert_eq!(p.x, 24);
    }

    #[test]
    fn luby_multipliers() {
        let mut p = enabled(RestartSchedule::Luby);
        let got: Vec<u64> = (0..15).map(|_| p.next_interval() / 100_000).collect();
        assert_eq!(got, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn restarts_alternate_cached_and_random() {
        let f = Formula::from_dimacs_clauses(20, &[vec![1, 2], vec![-1, 3]]).unwrap();
        let w = WeightStore::new(2, 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = enabled(RestartSchedule::Literal);

        let s = SearchState::random(&f, &w, &mut rng);
        p.observe(&s);
        let cached = p.best().unwrap().clone();

        let w_before = w.clone();
        let s0 = p.on_restart(&f, &w, &mut rng);
        assert_eq!(s0.assignment(), &cached);
        let s1 = p.on_restart(&f, &w, &mut rng);
        assert_ne!(s1.assignment(), &cached);
        assert_eq!(p.restarts_done(), 2);
        assert_eq!(w, w_before);
    }

    #[test]
    fn best_is_running_minimum() {
        let f = Formula::from_dimacs_clauses(2, &[vec![1], vec![2], vec![-1, -2]]).unwrap();
        let w = WeightStore::new(3, 8.0);
        let mut p = enabled(RestartSchedule::Literal);
        let mut s =
            SearchState::from_assignment(&f, &w, Assignment::from(vec![false, false])).unwrap();
        p.observe(&s);
        assert_eq!(p.best_falsified(), Some(2));
        s.flip(&f, &w, Var::new(1));
        p.observe(&s);
        assert_eq!(p.best_falsified(), Some(1));
        s.flip(&f, &w, Var::new(2));
        p.observe(&s);
        assert_eq!(p.best_falsified(), Some(1));
    }
}
