//! The search loop: flip weight-reducing variables while any exist,
//! occasionally take a sideways flip, and otherwise move weight from
//! satisfied clauses onto falsified ones.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cnf::{Formula, Var};
use crate::restart::{RestartConfig, RestartPolicy};
use crate::state::{Assignment, DeltaReport, SearchState};
use crate::weights::{
    coin, select_giver, CoinThresholds, PolicyError, TransferPolicy, WeightStore, DEFAULT_W0,
};

/// Stop flag and deadline are polled once per this many loop iterations.
pub const POLL_INTERVAL: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Pick {
    /// Largest weight reduction, lowest variable index on ties.
    Greedy,
    /// Proportional to weight reduction.
    #[default]
    WeightedRandom,
}

impl fmt::Display for Pick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pick::Greedy => "grdy",
            Pick::WeightedRandom => "wrnd",
        })
    }
}

impl FromStr for Pick {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grdy" => Ok(Pick::Greedy),
            "wrnd" | "wrand" => Ok(Pick::WeightedRandom),
            _ => Err(ConfigError::UnknownPick(s.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown variable selection {0:?} (expected grdy or wrnd)")]
    UnknownPick(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("malformed configuration string {0:?} (expected W-cC-P, e.g. lw-ith-c.1-wrnd)")]
    BadLabel(String),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("{0} must be at least 1")]
    ZeroBudget(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub policy: TransferPolicy,
    pub coins: CoinThresholds,
    pub pick: Pick,
    pub w0: f64,
    /// Loop iterations per try; `None` is unlimited.
    pub max_flips: Option<u64>,
    pub max_tries: u64,
    pub sideways: bool,
    pub seed: u64,
    pub restart: RestartConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            policy: TransferPolicy::LW_ITH,
            coins: CoinThresholds::default(),
            pick: Pick::WeightedRandom,
            w0: DEFAULT_W0,
            max_flips: None,
            max_tries: 1,
            sideways: true,
            seed: 0,
            restart: RestartConfig::default(),
        }
    }
}

impl SolverConfig {
    /// Defaults with the transfer rule, `cspt` and variable selection taken
    /// from a `W-cC-P` label.
    pub fn from_label(label: &str) -> Result<SolverConfig, ConfigError> {
        let mut cfg = SolverConfig::default();
        cfg.apply_label(label)?;
        Ok(cfg)
    }

    pub fn apply_label(&mut self, label: &str) -> Result<(), ConfigError> {
        let parsed: ConfigLabel = label.parse()?;
        self.policy = parsed.policy;
        self.coins.cspt = parsed.cspt;
        self.pick = parsed.pick;
        Ok(())
    }

    pub fn label(&self) -> ConfigLabel {
        ConfigLabel {
            policy: self.policy,
            cspt: self.coins.cspt,
            pick: self.pick,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for p in [self.coins.spt, self.coins.cspt] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::BadProbability(p));
            }
        }
        if self.max_tries == 0 {
            return Err(ConfigError::ZeroBudget("maxtries"));
        }
        if self.max_flips == Some(0) {
            return Err(ConfigError::ZeroBudget("maxflips"));
        }
        Ok(())
    }
}

/// A configuration name `W-cC-P`: transfer rule, `cspt` with the leading
/// zero dropped, and variable selection. For example `lw-ith-c.1-wrnd` or
/// `fw-c.01-grdy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfigLabel {
    pub policy: TransferPolicy,
    pub cspt: f64,
    pub pick: Pick,
}

impl fmt::Display for ConfigLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cspt = self.cspt.to_string();
        let cspt = cspt
            .strip_prefix('0')
            .filter(|s| s.starts_with('.'))
            .unwrap_or(&cspt);
        write!(f, "{}-c{}-{}", self.policy, cspt, self.pick)
    }
}

impl FromStr for ConfigLabel {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::BadLabel(s.to_string());
        let mut parts = s.rsplitn(3, '-');
        let pick = parts.next().ok_or_else(bad)?.parse()?;
        let cspt = parts
            .next()
            .and_then(|c| c.strip_prefix('c'))
            .ok_or_else(bad)?;
        let cspt: f64 = if cspt.starts_with('.') {
            format!("0{cspt}")
        } else {
            cspt.to_string()
        }
        .parse()
        .map_err(|_| bad())?;
        if !(0.0..=1.0).contains(&cspt) {
            return Err(ConfigError::BadProbability(cspt));
        }
        let policy = parts.next().ok_or_else(bad)?.parse()?;
        Ok(ConfigLabel { policy, cspt, pick })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub sideways: u64,
    pub local_minima: u64,
    pub transfers: u64,
    pub random_giver_picks: u64,
    /// Falsified clauses skipped in a local minimum because no satisfied
    /// clause could give weight.
    pub no_giver: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub status: Status,
    pub model: Option<Assignment>,
    /// Flips across all tries.
    pub flips: u64,
    pub tries: u64,
    pub elapsed: Duration,
    pub counters: Counters,
    /// Portfolio worker that produced this result.
    pub worker: usize,
}

impl RunResult {
    pub fn is_sat(&self) -> bool {
        self.status == Status::Sat
    }

    /// Equal up to wall time.
    pub fn same_outcome(&self, other: &RunResult) -> bool {
        self.status == other.status
            && self.model == other.model
            && self.flips == other.flips
            && self.tries == other.tries
            && self.counters == other.counters
    }
}

/// External limits on a run.
#[derive(Clone, Copy, Debug, Default)]
pub struct Limits<'a> {
    pub deadline: Option<Instant>,
    pub stop: Option<&'a AtomicBool>,
}

impl<'a> Limits<'a> {
    pub fn none() -> Limits<'static> {
        Limits {
            deadline: None,
            stop: None,
        }
    }

    pub fn timeout(timeout: Option<Duration>) -> Limits<'static> {
        Limits {
            deadline: timeout.map(|t| Instant::now() + t),
            stop: None,
        }
    }

    fn expired(&self) -> bool {
        self.stop.is_some_and(|s| s.load(Ordering::Relaxed))
            || self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// SplitMix64 finalizer over (seed, try, worker); the result seeds a
/// ChaCha8 generator for that try.
pub fn derive_seed(seed: u64, try_index: u64, worker: usize) -> u64 {
    let mut z = seed
        ^ try_index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (worker as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn pick_greedy(cands: &[DeltaReport]) -> Var {
    let mut best = cands[0];
    for &c in &cands[1..] {
        if c.delta > best.delta || (c.delta == best.delta && c.var < best.var) {
            best = c;
        }
    }
    best.var
}

/// Samples a candidate with probability `delta / Σ delta`.
pub fn pick_weighted_random(cands: &[DeltaReport], rng: &mut impl Rng) -> Var {
    let total: f64 = cands.iter().map(|c| c.delta).sum();
    let mut r = rng.gen::<f64>() * total;
    for c in cands {
        if r < c.delta {
            return c.var;
        }
        r -= c.delta;
    }
    cands[cands.len() - 1].var
}

/// One round of weight redistribution: every falsified clause, in
/// ascending index order, receives weight from a giver clause.
pub fn escape_local_minimum(
    formula: &Formula,
    state: &mut SearchState,
    weights: &mut WeightStore,
    cfg: &SolverConfig,
    rng: &mut impl Rng,
    counters: &mut Counters,
) {
    let mut snapshot = state.falsified().to_vec();
    snapshot.sort_unstable();
    escape_with_snapshot(formula, state, weights, cfg, rng, counters, &snapshot);
}

fn escape_with_snapshot(
    formula: &Formula,
    state: &mut SearchState,
    weights: &mut WeightStore,
    cfg: &SolverConfig,
    rng: &mut impl Rng,
    counters: &mut Counters,
    snapshot: &[u32],
) {
    counters.local_minima += 1;
    for &c in snapshot {
        let c = c as usize;
        match select_giver(formula, state, weights, c, cfg.coins.cspt, rng) {
            Ok(giver) => {
                let amount = cfg.policy.amount(weights.get(giver.clause), weights.w0());
                state.transfer(weights, giver.clause, c, amount);
                counters.transfers += 1;
                if giver.random {
                    counters.random_giver_picks += 1;
                }
            }
            Err(_) => counters.no_giver += 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Satisfied,
    Flipped(Var),
    Sideways(Var),
    Escaped,
}

/// Sideways flips counted in consecutive windows of flips.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SidewaysTrace {
    pub window: u64,
    pub counts: Vec<u64>,
    current: u64,
}

impl SidewaysTrace {
    pub fn new(window: u64) -> SidewaysTrace {
        assert!(window > 0);
        SidewaysTrace {
            window,
            counts: Vec::new(),
            current: 0,
        }
    }

    fn record(&mut self, total_flips: u64, sideways: bool) {
        self.current += u64::from(sideways);
        if total_flips.is_multiple_of(self.window) {
            self.counts.push(self.current);
            self.current = 0;
        }
    }
}

/// One search instance. Owns its state, weights and generator; shares only
/// the formula.
pub struct Engine<'f> {
    formula: &'f Formula,
    cfg: SolverConfig,
    worker: usize,
    weights: WeightStore,
    state: SearchState,
    rng: ChaCha8Rng,
    restart: RestartPolicy,
    counters: Counters,
    total_flips: u64,
    tries: u64,
    trace: Option<SidewaysTrace>,
    snapshot: Vec<u32>,
}

impl<'f> Engine<'f> {
    pub fn new(formula: &'f Formula, cfg: SolverConfig, worker: usize) -> Engine<'f> {
        let weights = WeightStore::new(formula.num_clauses(), cfg.w0);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0, worker));
        let state = SearchState::random(formula, &weights, &mut rng);
        let mut restart = RestartPolicy::new(cfg.restart);
        if restart.enabled() {
            restart.observe(&state);
        }
        Engine {
            formula,
            worker,
            weights,
            state,
            rng,
            restart,
            counters: Counters::default(),
            total_flips: 0,
            tries: 1,
            trace: None,
            snapshot: Vec::new(),
            cfg,
        }
    }

    pub fn with_sideways_trace(mut self, window: u64) -> Self {
        self.trace = Some(SidewaysTrace::new(window));
        self
    }

    pub fn state(&self) -> &SearchState {
        &self.state
    }

    pub fn weights(&self) -> &WeightStore {
        &self.weights
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn trace(&self) -> Option<&SidewaysTrace> {
        self.trace.as_ref()
    }

    pub fn total_flips(&self) -> u64 {
        self.total_flips
    }

    /// One iteration of the inner loop.
    pub fn step(&mut self) -> StepOutcome {
        if self.state.is_model() {
            return StepOutcome::Satisfied;
        }
        let cands = self.state.candidates(self.formula, &self.weights);
        if !cands.wrv.is_empty() {
            let v = match self.cfg.pick {
                Pick::Greedy => pick_greedy(cands.wrv),
                Pick::WeightedRandom => pick_weighted_random(cands.wrv, &mut self.rng),
            };
            self.flip(v, false);
            return StepOutcome::Flipped(v);
        }
        if self.cfg.sideways
            && !cands.sideways.is_empty()
            && coin(&mut self.rng, self.cfg.coins.spt)
        {
            let v = cands.sideways[self.rng.gen_range(0..cands.sideways.len())].var;
            self.counters.sideways += 1;
            self.flip(v, true);
            return StepOutcome::Sideways(v);
        }
        self.snapshot.clear();
        self.snapshot.extend_from_slice(self.state.falsified());
        self.snapshot.sort_unstable();
        escape_with_snapshot(
            self.formula,
            &mut self.state,
            &mut self.weights,
            &self.cfg,
            &mut self.rng,
            &mut self.counters,
            &self.snapshot,
        );
        StepOutcome::Escaped
    }

    fn flip(&mut self, v: Var, sideways: bool) {
        self.state.flip(self.formula, &self.weights, v);
        self.total_flips += 1;
        if let Some(trace) = &mut self.trace {
            trace.record(self.total_flips, sideways);
        }
        if self.restart.enabled() {
            self.restart.observe(&self.state);
        }
    }

    fn reseed(&mut self, try_index: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, try_index, self.worker));
    }

    /// Runs until a model is found or a budget or limit is exhausted.
    ///
    /// Without restarts this is `max_tries` tries of `max_flips` iterations,
    /// each from a fresh random assignment, with weights kept across tries.
    /// With restarts `max_flips` is the total iteration budget, segments come
    /// from the restart schedule and `max_tries` is not used.
    pub fn run(&mut self, limits: &Limits<'_>) -> RunResult {
        let start = Instant::now();
        let mut iterations: u64 = 0;
        let mut try_index: u64 = 0;
        let status = 'search: loop {
            let segment = if self.restart.enabled() {
                Some(self.restart.next_interval())
            } else {
                self.cfg.max_flips
            };
            let mut done: u64 = 0;
            while segment.is_none_or(|s| done < s) {
                if iterations.is_multiple_of(POLL_INTERVAL) && limits.expired() {
                    break 'search self.final_status();
                }
                if self.step() == StepOutcome::Satisfied {
                    break 'search Status::Sat;
                }
                done += 1;
                iterations += 1;
                if self.restart.enabled() && self.cfg.max_flips.is_some_and(|m| iterations >= m) {
                    break 'search self.final_status();
                }
            }
            if self.state.is_model() {
                break 'search Status::Sat;
            }
            try_index += 1;
            if !self.restart.enabled() && try_index >= self.cfg.max_tries {
                break 'search Status::Unknown;
            }
            self.reseed(try_index);
            self.state = if self.restart.enabled() {
                self.restart
                    .on_restart(self.formula, &self.weights, &mut self.rng)
            } else {
                SearchState::random(self.formula, &self.weights, &mut self.rng)
            };
            self.tries += 1;
        };
        if let Some(trace) = &mut self.trace {
            if trace.current > 0 {
                trace.counts.push(trace.current);
                trace.current = 0;
            }
        }
        let model = (status == Status::Sat).then(|| self.state.assignment().clone());
        RunResult {
            status,
            model,
            flips: self.total_flips,
            tries: self.tries,
            elapsed: start.elapsed(),
            counters: self.counters,
            worker: self.worker,
        }
    }

    fn final_status(&self) -> Status {
        if self.state.is_model() {
            Status::Sat
        } else {
            Status::Unknown
        }
    }
}

/// Single-threaded solve with no external limits.
pub fn run(formula: &Formula, cfg: &SolverConfig) -> RunResult {
    Engine::new(formula, cfg.clone(), 0).run(&Limits::none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Assignment;

    fn d(v: u32, delta: f64) -> DeltaReport {
        DeltaReport {
            var: Var::new(v),
            delta,
        }
    }

    #[test]
    fn greedy_picks_argmax_lowest_index() {
        assert_eq!(pick_greedy(&[d(1, 2.0), d(2, 6.0)]), Var::new(2));
        assert_eq!(pick_greedy(&[d(2, 3.0), d(1, 3.0)]), Var::new(1));
        assert_eq!(pick_greedy(&[d(7, 0.5)]), Var::new(7));
    }

    #[test]
    fn weighted_random_singleton() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(pick_weighted_random(&[d(4, 1e-3)], &mut rng), Var::new(4));
        }
    }

    #[test]
    fn weighted_random_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cands = [d(1, 2.0), d(2, 6.0)];
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| pick_weighted_random(&cands, &mut rng) == Var::new(2))
            .count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.75).abs() < 0.01, "p = {p}");
    }

    #[test]
    fn label_round_trip() {
        for s in [
            "lw-ith-c.1-wrnd",
            "fw-c.01-grdy",
            "lw-itl-c.1-grdy",
            "lw-ite-c.01-wrnd",
            "fw-c0-grdy",
            "fw-c1-wrnd",
        ] {
            assert_eq!(s.parse::<ConfigLabel>().unwrap().to_string(), s);
        }
        let l: ConfigLabel = "custom:0.1,0.1,0.5,0.5-c.25-grdy".parse().unwrap();
        assert_eq!(l.cspt, 0.25);
        assert_eq!(l.policy.c_gt, 0.5);
        assert_eq!(l.to_string(), "custom:0.1,0.1,0.5,0.5-c.25-grdy");
        assert_eq!(
            "fixed-c.01-grdy"
                .parse::<ConfigLabel>()
                .unwrap()
                .to_string(),
            "fw-c.01-grdy"
        );
        assert!("lw-ith-x.1-wrnd".parse::<ConfigLabel>().is_err());
        assert!("lw-ith-c.1-best".parse::<ConfigLabel>().is_err());
        assert!("lw-ith-c1.5-grdy".parse::<ConfigLabel>().is_err());
        assert!("wrnd".parse::<ConfigLabel>().is_err());
    }

    #[test]
    fn default_config_is_recommended_setting() {
        assert_eq!(
            SolverConfig::default().label().to_string(),
            "lw-ith-c.1-wrnd"
        );
    }

    #[test]
    fn escape_moves_weight_from_neighbor() {
        // (x1 ∨ x2) falsified, (x2 ∨ x3) its only satisfied neighbor at 10.
        let f = Formula::from_dimacs_clauses(3, &[vec![1, 2], vec![2, 3], vec![3]]).unwrap();
        let mut w = WeightStore::new(3, 8.0);
        w.transfer(2, 1, 2.0);
        let mut s =
            SearchState::from_assignment(&f, &w, Assignment::from(vec![false, false, true]))
                .unwrap();
        assert_eq!(s.falsified(), &[0]);

        let cfg = SolverConfig {
            coins: CoinThresholds {
                spt: 0.15,
                cspt: 0.0,
            },
            ..SolverConfig::default()
        };
        let mut counters = Counters::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        escape_local_minimum(&f, &mut s, &mut w, &cfg, &mut rng, &mut counters);
        assert!((w.get(1) - 8.5).abs() < 1e-12);
        assert!((w.get(0) - 9.5).abs() < 1e-12);
        assert!((s.falsified_weight() - 9.5).abs() < 1e-12);
        assert_eq!(counters.local_minima, 1);
        assert_eq!(counters.transfers, 1);
        assert!((w.recompute_total() - 24.0).abs() < 1e-9);
    }

    #[test]
    fn unit_formula_solves_immediately() {
        let f = Formula::from_dimacs_clauses(1, &[vec![1]]).unwrap();
        for seed in 0..4 {
            let cfg = SolverConfig {
                seed,
                max_flips: Some(1),
                ..SolverConfig::default()
            };
            let r = run(&f, &cfg);
            assert!(r.is_sat());
            assert!(r.flips <= 1);
        }
    }

    #[test]
    fn contradiction_is_unknown() {
        let f = Formula::from_dimacs_clauses(1, &[vec![1], vec![-1]]).unwrap();
        let cfg = SolverConfig {
            max_flips: Some(100),
            ..SolverConfig::default()
        };
        let r = run(&f, &cfg);
        assert_eq!(r.status, Status::Unknown);
        assert!(r.model.is_none());
        assert!(r.counters.local_minima > 0);
    }

    #[test]
    fn tries_reset_assignment_not_weights() {
        let f = Formula::from_dimacs_clauses(1, &[vec![1], vec![-1]]).unwrap();
        let cfg = SolverConfig {
            max_flips: Some(10),
            max_tries: 3,
            ..SolverConfig::default()
        };
        let mut e = Engine::new(&f, cfg, 0);
        let r = e.run(&Limits::none());
        assert_eq!(r.tries, 3);
        assert!(e.weights().as_slice().iter().any(|&w| w != 8.0));
    }

    #[test]
    fn restarts_respect_total_budget() {
        let f = Formula::from_dimacs_clauses(1, &[vec![1], vec![-1]]).unwrap();
        let restart = RestartConfig {
            enabled: true,
            base: 50,
            ..RestartConfig::default()
        };
        let cfg = SolverConfig {
            max_flips: Some(500),
            restart,
            ..SolverConfig::default()
        };
        let r = run(&f, &cfg);
        assert_eq!(r.status, Status::Unknown);
        assert_eq!(r.tries, 10);
    }

    #[test]
    fn stop_flag_halts_search() {
        let f = Formula::from_dimacs_clauses(1, &[vec![1], vec![-1]]).unwrap();
        let stop = AtomicBool::new(true);
        let r = Engine::new(&f, SolverConfig::default(), 0).run(&Limits {
            deadline: None,
            stop: Some(&stop),
        });
        assert_eq!(r.status, Status::Unknown);
        assert_eq!(r.flips, 0);
    }

    #[test]
    fn validate_rejects_bad_budgets() {
        let cfg = SolverConfig {
            max_tries: 0,
            ..SolverConfig::default()
        };
        assert_eq!(cfg.validate(), Err(ConfigError::ZeroBudget("maxtries")));
        let cfg = SolverConfig {
            coins: CoinThresholds {
                spt: 1.5,
                cspt: 0.1,
            },
            ..SolverConfig::default()
        };
        assert_eq!(cfg.validate(), Err(ConfigError::BadProbability(1.5)));
    }
}
