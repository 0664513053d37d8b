//! Clause weights, transfer-amount rules and giver selection for local
//! minima.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::cnf::Formula;
use crate::state::SearchState;

/// Initial clause weight used unless configured otherwise.
pub const DEFAULT_W0: f64 = 8.0;

/// Random probes for a qualifying satisfied clause before falling back to a
/// linear scan.
const RANDOM_GIVER_TRIES: usize = 100;

/// Per-clause weights. The sum is fixed at `m · w0`: weight only ever moves
/// between clauses.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightStore {
    w: Vec<f64>,
    w0: f64,
    total: f64,
}

impl WeightStore {
    pub fn new(num_clauses: usize, w0: f64) -> WeightStore {
        assert!(
            w0 > 0.0 && w0.is_finite(),
            "initial weight must be positive"
        );
        WeightStore {
            w: vec![w0; num_clauses],
            w0,
            total: w0 * num_clauses as f64,
        }
    }

    #[inline]
    pub fn get(&self, c: usize) -> f64 {
        self.w[c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// The conserved total `m · w0`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Freshly summed weights, for checking conservation.
    pub fn recompute_total(&self) -> f64 {
        self.w.iter().sum()
    }

    /// `W(c) > w0`, strictly.
    #[inline]
    pub fn is_heavy(&self, c: usize) -> bool {
        self.w[c] > self.w0
    }

    /// Moves `min(amount, W(giver))` from `giver` to `receiver` and returns
    /// the amount actually moved.
    pub fn transfer(&mut self, giver: usize, receiver: usize, amount: f64) -> f64 {
        debug_assert!(amount >= 0.0);
        let moved = amount.min(self.w[giver]).max(0.0);
        if moved > 0.0 {
            self.w[giver] -= moved;
            self.w[receiver] += moved;
        }
        moved
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransferKind {
    Fixed,
    Linear,
}

/// How much weight a giver clause hands over in a local minimum.
///
/// The amount is `a_gt·W + c_gt` for heavy givers (`W > w0`) and
/// `a_eq·W + c_eq` otherwise. The fixed rule is the special case
/// `a_gt = a_eq = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferPolicy {
    pub kind: TransferKind,
    pub a_gt: f64,
    pub a_eq: f64,
    pub c_gt: f64,
    pub c_eq: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("unknown weight transfer policy {0:?} (expected fixed, fw, lw-itl, lw-ite, lw-ith or custom:a_gt,a_eq,c_gt,c_eq)")]
    UnknownName(String),
    #[error("multiplicative coefficient {0} outside [0, 1]")]
    BadMultiplier(f64),
    #[error("additive amount {0} must be finite and nonnegative")]
    BadAdditive(f64),
}

impl TransferPolicy {
    /// Original integer rule: 2 from heavy clauses, 1 otherwise.
    pub const FIXED: TransferPolicy = TransferPolicy {
        kind: TransferKind::Fixed,
        a_gt: 0.0,
        a_eq: 0.0,
        c_gt: 2.0,
        c_eq: 1.0,
    };
    /// Low initial transfer.
    pub const LW_ITL: TransferPolicy = TransferPolicy {
        kind: TransferKind::Linear,
        a_gt: 0.1,
        a_eq: 0.05,
        c_gt: 2.0,
        c_eq: 1.0,
    };
    /// Equal transfer regardless of heaviness.
    pub const LW_ITE: TransferPolicy = TransferPolicy {
        kind: TransferKind::Linear,
        a_gt: 0.075,
        a_eq: 0.075,
        c_gt: 1.75,
        c_eq: 1.75,
    };
    /// High initial transfer.
    pub const LW_ITH: TransferPolicy = TransferPolicy {
        kind: TransferKind::Linear,
        a_gt: 0.05,
        a_eq: 0.1,
        c_gt: 1.0,
        c_eq: 2.0,
    };

    pub fn fixed(c_gt: f64, c_eq: f64) -> Result<TransferPolicy, PolicyError> {
        Self::validated(TransferPolicy {
            kind: TransferKind::Fixed,
            a_gt: 0.0,
            a_eq: 0.0,
            c_gt,
            c_eq,
        })
    }

    pub fn linear(
        a_gt: f64,
        a_eq: f64,
        c_gt: f64,
        c_eq: f64,
    ) -> Result<TransferPolicy, PolicyError> {
        Self::validated(TransferPolicy {
            kind: TransferKind::Linear,
            a_gt,
            a_eq,
            c_gt,
            c_eq,
        })
    }

    fn validated(p: TransferPolicy) -> Result<TransferPolicy, PolicyError> {
        for a in [p.a_gt, p.a_eq] {
            if !(0.0..=1.0).contains(&a) {
                return Err(PolicyError::BadMultiplier(a));
            }
        }
        for c in [p.c_gt, p.c_eq] {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(PolicyError::BadAdditive(c));
            }
        }
        Ok(p)
    }

    /// Preset name when this policy equals one of the named presets.
    pub fn preset_name(&self) -> Option<&'static str> {
        [
            (Self::FIXED, "fw"),
            (Self::LW_ITL, "lw-itl"),
            (Self::LW_ITE, "lw-ite"),
            (Self::LW_ITH, "lw-ith"),
        ]
        .into_iter()
        .find(|(p, _)| p == self)
        .map(|(_, name)| name)
    }

    #[inline]
    pub fn amount(&self, giver_weight: f64, w0: f64) -> f64 {
        transfer_amount(self, giver_weight, w0)
    }
}

#[inline]
pub fn transfer_amount(policy: &TransferPolicy, giver_weight: f64, w0: f64) -> f64 {
    if giver_weight > w0 {
        policy.a_gt * giver_weight + policy.c_gt
    } else {
        policy.a_eq * giver_weight + policy.c_eq
    }
}

impl Default for TransferPolicy {
    fn default() -> Self {
        TransferPolicy::LW_ITH
    }
}

impl fmt::Display for TransferPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.preset_name() {
            Some(name) => f.write_str(name),
            None => write!(
                f,
                "custom:{},{},{},{}",
                self.a_gt, self.a_eq, self.c_gt, self.c_eq
            ),
        }
    }
}

impl FromStr for TransferPolicy {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" | "fw" => Ok(Self::FIXED),
            "lw-itl" => Ok(Self::LW_ITL),
            "lw-ite" => Ok(Self::LW_ITE),
            "lw-ith" => Ok(Self::LW_ITH),
            _ => {
                let body = s
                    .strip_prefix("custom:")
                    .ok_or_else(|| PolicyError::UnknownName(s.into()))?;
                let nums: Vec<f64> = body
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| PolicyError::UnknownName(s.into()))?;
                match nums[..] {
                    [a_gt, a_eq, c_gt, c_eq] if a_gt == 0.0 && a_eq == 0.0 => {
                        Self::fixed(c_gt, c_eq)
                    }
                    [a_gt, a_eq, c_gt, c_eq] => Self::linear(a_gt, a_eq, c_gt, c_eq),
                    _ => Err(PolicyError::UnknownName(s.into())),
                }
            }
        }
    }
}

/// Weighted-coin thresholds: `spt` gates sideways flips, `cspt` gates
/// taking weight from a random satisfied clause instead of a neighbor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoinThresholds {
    pub spt: f64,
    pub cspt: f64,
}

impl CoinThresholds {
    pub const BASELINE_CSPT: f64 = 0.01;
    pub const IMPROVED_CSPT: f64 = 0.1;
    pub const DEFAULT_SPT: f64 = 0.15;
}

impl Default for CoinThresholds {
    fn default() -> Self {
        CoinThresholds {
            spt: Self::DEFAULT_SPT,
            cspt: Self::IMPROVED_CSPT,
        }
    }
}

/// `true` with probability `p` (never for `p = 0`, always for `p ≥ 1`).
#[inline]
pub fn coin(rng: &mut impl Rng, p: f64) -> bool {
    rng.gen::<f64>() < p
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("no satisfied clause available to give weight")]
pub struct NoGiver;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Giver {
    pub clause: usize,
    /// Chosen by the random-satisfied-clause branch rather than as the
    /// heaviest neighbor.
    pub random: bool,
}

/// Heaviest satisfied clause sharing a literal with `c` (lowest index on
/// ties), found by scanning the occurrence lists of `c`'s literals.
pub fn max_satisfied_neighbor(
    formula: &Formula,
    state: &SearchState,
    weights: &WeightStore,
    c: usize,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &lit in formula.clause(c).lits() {
        for &d in formula.occurrences(lit) {
            let d = d as usize;
            if d == c || !state.is_satisfied(d) {
                continue;
            }
            let w = weights.get(d);
            match best {
                Some((bd, bw)) if w < bw || (w == bw && d >= bd) => {}
                _ => best = Some((d, w)),
            }
        }
    }
    best.map(|(d, _)| d)
}

/// Picks the clause that gives weight to the falsified clause `c`.
///
/// Starts from the heaviest satisfied neighbor. When there is none, when it
/// is lighter than `w0`, or when the `cspt` coin succeeds, a uniformly
/// random satisfied clause with `W ≥ w0` is used instead. If no such clause
/// exists the heaviest satisfied clause overall is used.
pub fn select_giver(
    formula: &Formula,
    state: &SearchState,
    weights: &WeightStore,
    c: usize,
    cspt: f64,
    rng: &mut impl Rng,
) -> Result<Giver, NoGiver> {
    let w0 = weights.w0();
    if let Some(d) = max_satisfied_neighbor(formula, state, weights, c) {
        if weights.get(d) >= w0 && !coin(rng, cspt) {
            return Ok(Giver {
                clause: d,
                random: false,
            });
        }
    }
    random_satisfied_giver(state, weights, rng).map(|clause| Giver {
        clause,
        random: true,
    })
}

fn random_satisfied_giver(
    state: &SearchState,
    weights: &WeightStore,
    rng: &mut impl Rng,
) -> Result<usize, NoGiver> {
    let m = weights.len();
    if m == 0 {
        return Err(NoGiver);
    }
    let w0 = weights.w0();
    let qualifies = |d: usize| state.is_satisfied(d) && weights.get(d) >= w0;

    for _ in 0..RANDOM_GIVER_TRIES {
        let d = rng.gen_range(0..m);
        if qualifies(d) {
            return Ok(d);
        }
    }

    let pool: Vec<usize> = (0..m).filter(|&d| qualifies(d)).collect();
    if !pool.is_empty() {
        return Ok(pool[rng.gen_range(0..pool.len())]);
    }

    let mut best: Option<(usize, f64)> = None;
    for d in (0..m).filter(|&d| state.is_satisfied(d)) {
        if best.is_none_or(|(_, bw)| weights.get(d) > bw) {
            best = Some((d, weights.get(d)));
        }
    }
    best.map(|(d, _)| d).ok_or(NoGiver)
}
