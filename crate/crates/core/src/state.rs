//! The current assignment and the incrementally maintained search
//! quantities: per-clause true-literal counts, the falsified-clause set,
//! the falsified weight and `uvars` (variables occurring in some
//! falsified clause).

use rand::Rng;
use thiserror::Error;

use crate::cnf::{Formula, Lit, Var};
use crate::weights::WeightStore;

/// Deltas with `|delta| ≤ SIDEWAYS_TOLERANCE` count as sideways moves.
pub const SIDEWAYS_TOLERANCE: f64 = 1e-9;

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("assignment covers {found} variables, formula has {expected}")]
pub struct DimensionMismatch {
    pub expected: usize,
    pub found: usize,
}

/// A total truth assignment, indexed by variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn random(num_vars: usize, rng: &mut impl Rng) -> Assignment {
        Assignment((0..num_vars).map(|_| rng.gen::<bool>()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn value(&self, v: Var) -> bool {
        self.0[v.index()]
    }

    #[inline]
    pub fn is_true(&self, lit: Lit) -> bool {
        self.0[lit.var().index()] == lit.is_positive()
    }

    /// The literal of `v` that is currently true.
    #[inline]
    pub fn true_lit(&self, v: Var) -> Lit {
        if self.value(v) {
            v.positive()
        } else {
            v.negative()
        }
    }

    pub fn flip(&mut self, v: Var) {
        let x = &mut self.0[v.index()];
        *x = !*x;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// One literal per variable, true under this assignment.
    pub fn lits(&self) -> impl Iterator<Item = Lit> + '_ {
        (0..self.0.len()).map(|i| self.true_lit(Var::from_index(i)))
    }
}

impl From<Vec<bool>> for Assignment {
    fn from(values: Vec<bool>) -> Self {
        Assignment(values)
    }
}

/// Change in falsified weight if `var` were flipped. Positive means the
/// falsified weight would drop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaReport {
    pub var: Var,
    pub delta: f64,
}

impl DeltaReport {
    pub fn is_weight_reducing(&self) -> bool {
        self.delta > SIDEWAYS_TOLERANCE
    }

    pub fn is_sideways(&self) -> bool {
        self.delta.abs() <= SIDEWAYS_TOLERANCE
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchState {
    assignment: Assignment,
    num_true: Vec<u32>,
    falsified: Vec<u32>,
    falsified_pos: Vec<u32>,
    falsified_weight: f64,
    uvars: Vec<u32>,
    uvars_pos: Vec<u32>,
    /// Number of falsified clauses each variable occurs in.
    uvars_count: Vec<u32>,
    flips: u64,
    /// Variables whose cached delta is stale.
    dirty: Vec<bool>,
    dirty_list: Vec<u32>,
    /// Clauses whose weight changed since the last `candidates` call.
    pending_clauses: Vec<u32>,
    wrv: CandidateSet,
    sideways: CandidateSet,
}

/// Dense list of candidates with O(1) insert, update and removal.
#[derive(Clone, Debug, PartialEq)]
struct CandidateSet {
    items: Vec<DeltaReport>,
    pos: Vec<u32>,
}

impl CandidateSet {
    fn new(num_vars: usize) -> CandidateSet {
        CandidateSet {
            items: Vec::new(),
            pos: vec![ABSENT; num_vars],
        }
    }

    fn upsert(&mut self, d: DeltaReport) {
        let vi = d.var.index();
        match self.pos[vi] {
            ABSENT => {
                self.pos[vi] = self.items.len() as u32;
                self.items.push(d);
            }
            p => self.items[p as usize] = d,
        }
    }

    fn remove(&mut self, v: Var) {
        let vi = v.index();
        let p = self.pos[vi];
        if p == ABSENT {
            return;
        }
        self.items.swap_remove(p as usize);
        if let Some(moved) = self.items.get(p as usize) {
            self.pos[moved.var.index()] = p;
        }
        self.pos[vi] = ABSENT;
    }
}

/// Weight-reducing and sideways variables among `uvars`.
#[derive(Clone, Copy, Debug)]
pub struct Candidates<'a> {
    pub wrv: &'a [DeltaReport],
    pub sideways: &'a [DeltaReport],
}

impl SearchState {
    /// Each variable true with probability 1/2.
    pub fn random(formula: &Formula, weights: &WeightStore, rng: &mut impl Rng) -> SearchState {
        let assignment = Assignment::random(formula.num_vars(), rng);
        Self::build(formula, weights, assignment)
    }

    pub fn from_assignment(
        formula: &Formula,
        weights: &WeightStore,
        assignment: Assignment,
    ) -> Result<SearchState, DimensionMismatch> {
        if assignment.len() != formula.num_vars() {
            return Err(DimensionMismatch {
                expected: formula.num_vars(),
                found: assignment.len(),
            });
        }
        Ok(Self::build(formula, weights, assignment))
    }

    fn build(formula: &Formula, weights: &WeightStore, assignment: Assignment) -> SearchState {
        let m = formula.num_clauses();
        let n = formula.num_vars();
        let mut state = SearchState {
            num_true: Vec::with_capacity(m),
            falsified: Vec::new(),
            falsified_pos: vec![ABSENT; m],
            falsified_weight: 0.0,
            uvars: Vec::new(),
            uvars_pos: vec![ABSENT; n],
            uvars_count: vec![0; n],
            flips: 0,
            dirty: vec![false; n],
            dirty_list: Vec::new(),
            pending_clauses: Vec::new(),
            wrv: CandidateSet::new(n),
            sideways: CandidateSet::new(n),
            assignment,
        };
        for (c, clause) in formula.clauses().iter().enumerate() {
            let t = clause
                .lits()
                .iter()
                .filter(|&&l| state.assignment.is_true(l))
                .count() as u32;
            state.num_true.push(t);
            if t == 0 {
                state.falsify(formula, weights, c);
            }
        }
        for i in 0..state.uvars.len() {
            let v = Var::from_index(state.uvars[i] as usize);
            state.invalidate(v);
        }
        state
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    #[inline]
    pub fn num_true(&self, c: usize) -> u32 {
        self.num_true[c]
    }

    #[inline]
    pub fn is_satisfied(&self, c: usize) -> bool {
        self.num_true[c] > 0
    }

    /// All clauses satisfied.
    #[inline]
    pub fn is_model(&self) -> bool {
        self.falsified.is_empty()
    }

    /// Falsified clause indices, in no particular order.
    pub fn falsified(&self) -> &[u32] {
        &self.falsified
    }

    pub fn num_falsified(&self) -> usize {
        self.falsified.len()
    }

    pub fn falsified_weight(&self) -> f64 {
        self.falsified_weight
    }

    pub fn uvars(&self) -> impl Iterator<Item = Var> + '_ {
        self.uvars.iter().map(|&i| Var::from_index(i as usize))
    }

    pub fn num_uvars(&self) -> usize {
        self.uvars.len()
    }

    pub fn in_uvars(&self, v: Var) -> bool {
        self.uvars_pos[v.index()] != ABSENT
    }

    pub fn flips(&self) -> u64 {
        self.flips
    }

    pub fn delta_weight(&self, formula: &Formula, weights: &WeightStore, v: Var) -> DeltaReport {
        let now_true = self.assignment.true_lit(v);
        let mut delta = 0.0;
        for &c in formula.occurrences(now_true.negate()) {
            if self.num_true[c as usize] == 0 {
                delta += weights.get(c as usize);
            }
        }
        for &c in formula.occurrences(now_true) {
            let c = c as usize;
            if self.num_true[c] == 1 && !formula.clause(c).is_tautology() {
                delta -= weights.get(c);
            }
        }
        DeltaReport { var: v, delta }
    }

    /// Flips `v`, touching only the clauses in which `v` occurs.
    pub fn flip(&mut self, formula: &Formula, weights: &WeightStore, v: Var) {
        let was_true = self.assignment.true_lit(v);
        self.assignment.flip(v);
        // Raise counts before lowering them so a tautology never reads zero.
        self.invalidate(v);
        for &c in formula.occurrences(was_true.negate()) {
            let c = c as usize;
            self.num_true[c] += 1;
            match self.num_true[c] {
                1 => {
                    self.satisfy(formula, weights, c);
                    self.invalidate_clause(formula, c);
                }
                2 => self.invalidate_clause(formula, c),
                _ => {}
            }
        }
        for &c in formula.occurrences(was_true) {
            let c = c as usize;
            self.num_true[c] -= 1;
            match self.num_true[c] {
                0 => {
                    self.falsify(formula, weights, c);
                    self.invalidate_clause(formula, c);
                }
                1 => self.invalidate_clause(formula, c),
                _ => {}
            }
        }
        self.flips += 1;
    }

    /// Moves weight between clauses and keeps the falsified weight in step.
    /// Returns the amount actually moved.
    pub fn transfer(
        &mut self,
        weights: &mut WeightStore,
        giver: usize,
        receiver: usize,
        amount: f64,
    ) -> f64 {
        let moved = weights.transfer(giver, receiver, amount);
        if !self.is_satisfied(giver) {
            self.falsified_weight -= moved;
        }
        if !self.is_satisfied(receiver) {
            self.falsified_weight += moved;
        }
        if moved > 0.0 {
            self.invalidate_weight_change(giver);
            self.invalidate_weight_change(receiver);
        }
        moved
    }

    fn invalidate_weight_change(&mut self, c: usize) {
        // A weight only enters a delta when the clause is falsified or
        // critical (exactly one true literal).
        if self.num_true[c] <= 1 {
            self.pending_clauses.push(c as u32);
        }
    }

    /// Weight-reducing and sideways candidates among `uvars`, from the
    /// per-variable cache. Only variables touched since the last call are
    /// recomputed, each from scratch.
    pub fn candidates(&mut self, formula: &Formula, weights: &WeightStore) -> Candidates<'_> {
        let pending = std::mem::take(&mut self.pending_clauses);
        for &c in &pending {
            self.invalidate_clause(formula, c as usize);
        }
        self.pending_clauses = pending;
        self.pending_clauses.clear();

        let dirty = std::mem::take(&mut self.dirty_list);
        for &vi in &dirty {
            let vi = vi as usize;
            self.dirty[vi] = false;
            let v = Var::from_index(vi);
            if self.uvars_pos[vi] == ABSENT {
                self.wrv.remove(v);
                self.sideways.remove(v);
                continue;
            }
            let d = self.delta_weight(formula, weights, v);
            if d.is_weight_reducing() {
                self.sideways.remove(v);
                self.wrv.upsert(d);
            } else if d.is_sideways() {
                self.wrv.remove(v);
                self.sideways.upsert(d);
            } else {
                self.wrv.remove(v);
                self.sideways.remove(v);
            }
        }
        self.dirty_list = dirty;
        self.dirty_list.clear();
        Candidates {
            wrv: &self.wrv.items,
            sideways: &self.sideways.items,
        }
    }

    #[inline]
    fn invalidate(&mut self, v: Var) {
        let vi = v.index();
        if !self.dirty[vi] {
            self.dirty[vi] = true;
            self.dirty_list.push(vi as u32);
        }
    }

    fn invalidate_clause(&mut self, formula: &Formula, c: usize) {
        for &lit in formula.clause(c).lits() {
            self.invalidate(lit.var());
        }
    }

    /// Weight-reducing and sideways candidates computed from scratch over
    /// `uvars`, each variable examined once. Buffers are cleared first.
    pub fn classify_into(
        &self,
        formula: &Formula,
        weights: &WeightStore,
        wrv: &mut Vec<DeltaReport>,
        sideways: &mut Vec<DeltaReport>,
    ) {
        wrv.clear();
        sideways.clear();
        for v in self.uvars() {
            let d = self.delta_weight(formula, weights, v);
            if d.is_weight_reducing() {
                wrv.push(d);
            } else if d.is_sideways() {
                sideways.push(d);
            }
        }
    }

    pub fn wrv_candidates(&self, formula: &Formula, weights: &WeightStore) -> Vec<DeltaReport> {
        let (mut wrv, mut sv) = (Vec::new(), Vec::new());
        self.classify_into(formula, weights, &mut wrv, &mut sv);
        wrv
    }

    pub fn sideways_candidates(
        &self,
        formula: &Formula,
        weights: &WeightStore,
    ) -> Vec<DeltaReport> {
        let (mut wrv, mut sv) = (Vec::new(), Vec::new());
        self.classify_into(formula, weights, &mut wrv, &mut sv);
        sv
    }

    fn falsify(&mut self, formula: &Formula, weights: &WeightStore, c: usize) {
        debug_assert_eq!(self.falsified_pos[c], ABSENT);
        self.falsified_pos[c] = self.falsified.len() as u32;
        self.falsified.push(c as u32);
        self.falsified_weight += weights.get(c);
        for &lit in formula.clause(c).lits() {
            let vi = lit.var().index();
            self.uvars_count[vi] += 1;
            if self.uvars_count[vi] == 1 {
                self.uvars_pos[vi] = self.uvars.len() as u32;
                self.uvars.push(vi as u32);
            }
        }
    }

    fn satisfy(&mut self, formula: &Formula, weights: &WeightStore, c: usize) {
        let pos = self.falsified_pos[c] as usize;
        debug_assert_ne!(pos, ABSENT as usize);
        self.falsified.swap_remove(pos);
        if let Some(&moved) = self.falsified.get(pos) {
            self.falsified_pos[moved as usize] = pos as u32;
        }
        self.falsified_pos[c] = ABSENT;
        if self.falsified.is_empty() {
            self.falsified_weight = 0.0;
        } else {
            self.falsified_weight -= weights.get(c);
        }
        for &lit in formula.clause(c).lits() {
            let vi = lit.var().index();
            self.uvars_count[vi] -= 1;
            if self.uvars_count[vi] == 0 {
                let p = self.uvars_pos[vi] as usize;
                self.uvars.swap_remove(p);
                if let Some(&moved) = self.uvars.get(p) {
                    self.uvars_pos[moved as usize] = p as u32;
                }
                self.uvars_pos[vi] = ABSENT;
            }
        }
    }
}
