//! Brute-force reference computations over raw clause lists. Nothing here
//! calls into the solver's incremental machinery.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;

pub const TOL: f64 = 1e-9;

pub fn lit_true(lit: i32, alpha: &[bool]) -> bool {
    alpha[lit.unsigned_abs() as usize - 1] == (lit > 0)
}

pub fn num_true(clauses: &[Vec<i32>], alpha: &[bool]) -> Vec<u32> {
    clauses
        .iter()
        .map(|c| c.iter().filter(|&&l| lit_true(l, alpha)).count() as u32)
        .collect()
}

pub fn falsified(clauses: &[Vec<i32>], alpha: &[bool]) -> BTreeSet<usize> {
    (0..clauses.len())
        .filter(|&c| !clauses[c].iter().any(|&l| lit_true(l, alpha)))
        .collect()
}

pub fn falsified_weight(clauses: &[Vec<i32>], alpha: &[bool], w: &[f64]) -> f64 {
    falsified(clauses, alpha).into_iter().map(|c| w[c]).sum()
}

pub fn uvars(clauses: &[Vec<i32>], alpha: &[bool]) -> BTreeSet<u32> {
    falsified(clauses, alpha)
        .into_iter()
        .flat_map(|c| clauses[c].iter().map(|l| l.unsigned_abs()))
        .collect()
}

/// Falsified weight now minus falsified weight after flipping `v`.
pub fn delta(clauses: &[Vec<i32>], alpha: &[bool], w: &[f64], v: u32) -> f64 {
    let mut flipped = alpha.to_vec();
    flipped[v as usize - 1] ^= true;
    falsified_weight(clauses, alpha, w) - falsified_weight(clauses, &flipped, w)
}

/// Weight-reducing variables by scanning every variable.
pub fn wrv(clauses: &[Vec<i32>], alpha: &[bool], w: &[f64]) -> BTreeSet<u32> {
    (1..=alpha.len() as u32)
        .filter(|&v| delta(clauses, alpha, w, v) > TOL)
        .collect()
}

/// Zero-delta variables by scanning every variable.
pub fn zero_delta(clauses: &[Vec<i32>], alpha: &[bool], w: &[f64]) -> BTreeSet<u32> {
    (1..=alpha.len() as u32)
        .filter(|&v| delta(clauses, alpha, w, v).abs() <= TOL)
        .collect()
}

pub fn neighbors(clauses: &[Vec<i32>], c: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for d in 0..clauses.len() {
        if d == c {
            continue;
        }
        for &l in &clauses[c] {
            for &k in &clauses[d] {
                if l == k {
                    out.insert(d);
                }
            }
        }
    }
    out
}

/// Random clause list over `n` variables with duplicate literals removed.
/// Tautologies and repeated clauses may occur.
pub fn random_clauses(rng: &mut impl Rng, n: usize, m: usize, max_len: usize) -> Vec<Vec<i32>> {
    (0..m)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            let mut c: Vec<i32> = Vec::new();
            for _ in 0..len {
                let v = rng.gen_range(1..=n as i32);
                let l = if rng.gen() { v } else { -v };
                if !c.contains(&l) {
                    c.push(l);
                }
            }
            c
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

use ddfw::cnf::Formula;
use ddfw::state::SearchState;
use ddfw::weights::WeightStore;

pub fn raw_clauses(f: &Formula) -> Vec<Vec<i32>> {
    f.clauses()
        .iter()
        .map(|c| c.lits().iter().map(|l| l.to_dimacs()).collect())
        .collect()
}

/// Compares every incrementally maintained quantity, including the cached
/// candidate sets, against a from-scratch recomputation.
pub fn check_state(
    f: &Formula,
    clauses: &[Vec<i32>],
    state: &mut SearchState,
    weights: &WeightStore,
) -> Result<(), String> {
    let alpha = state.assignment().as_slice().to_vec();
    let w = weights.as_slice();

    let nt = num_true(clauses, &alpha);
    for (c, &expected) in nt.iter().enumerate() {
        if state.num_true(c) != expected {
            return Err(format!(
                "num_true[{c}] = {} expected {expected}",
                state.num_true(c)
            ));
        }
    }
    let fals: BTreeSet<usize> = state.falsified().iter().map(|&c| c as usize).collect();
    if fals != falsified(clauses, &alpha) || fals.len() != state.num_falsified() {
        return Err(format!(
            "falsified {fals:?} expected {:?}",
            falsified(clauses, &alpha)
        ));
    }
    let fw = falsified_weight(clauses, &alpha, w);
    if !rel_close(state.falsified_weight(), fw, 1e-6) {
        return Err(format!(
            "falsified weight {} expected {fw}",
            state.falsified_weight()
        ));
    }
    let uv: BTreeSet<u32> = state.uvars().map(|v| v.get()).collect();
    let expected_uv = uvars(clauses, &alpha);
    if uv != expected_uv || uv.len() != state.num_uvars() {
        return Err(format!("uvars {uv:?} expected {expected_uv:?}"));
    }
    if !rel_close(weights.recompute_total(), weights.total(), 1e-6) {
        return Err(format!(
            "total weight {} expected {}",
            weights.recompute_total(),
            weights.total()
        ));
    }

    let expected_wrv = wrv(clauses, &alpha, w);
    let expected_sv: BTreeSet<u32> = zero_delta(clauses, &alpha, w)
        .intersection(&expected_uv)
        .copied()
        .collect();
    let scan_wrv: BTreeSet<u32> = state
        .wrv_candidates(f, weights)
        .iter()
        .map(|d| d.var.get())
        .collect();
    let scan_sv: BTreeSet<u32> = state
        .sideways_candidates(f, weights)
        .iter()
        .map(|d| d.var.get())
        .collect();
    if scan_wrv != expected_wrv || scan_sv != expected_sv {
        return Err(format!(
            "scan wrv {scan_wrv:?}/sv {scan_sv:?} expected {expected_wrv:?}/{expected_sv:?}"
        ));
    }
    let cands = state.candidates(f, weights);
    for d in cands.wrv.iter().chain(cands.sideways) {
        let exact = delta(clauses, &alpha, w, d.var.get());
        if (d.delta - exact).abs() > 1e-9 * exact.abs().max(1.0) {
            return Err(format!(
                "cached delta of {} is {} expected {exact}",
                d.var, d.delta
            ));
        }
    }
    let cached_wrv: BTreeSet<u32> = cands.wrv.iter().map(|d| d.var.get()).collect();
    let cached_sv: BTreeSet<u32> = cands.sideways.iter().map(|d| d.var.get()).collect();
    if cached_wrv != expected_wrv || cached_sv != expected_sv || cached_wrv.len() != cands.wrv.len()
    {
        return Err(format!(
            "cached wrv {cached_wrv:?}/sv {cached_sv:?} expected {expected_wrv:?}/{expected_sv:?}"
        ));
    }
    Ok(())
}

/// One random step: a flip, an arbitrary weight transfer, or a giver
/// selection followed by a policy-sized transfer onto a falsified clause.
pub fn mixed_step(
    f: &Formula,
    state: &mut SearchState,
    weights: &mut WeightStore,
    rng: &mut impl Rng,
) {
    use ddfw::cnf::Var;
    use ddfw::weights::{select_giver, TransferPolicy};
    let m = f.num_clauses();
    match rng.gen_range(0..10) {
        0..=4 => {
            let v = Var::new(rng.gen_range(1..=f.num_vars() as u32));
            state.flip(f, weights, v);
        }
        5..=7 => {
            let giver = rng.gen_range(0..m);
            let receiver = rng.gen_range(0..m);
            if giver != receiver {
                state.transfer(weights, giver, receiver, rng.gen_range(0.0..4.0));
            }
        }
        _ => {
            if state.num_falsified() == 0 {
                return;
            }
            let c = state.falsified()[rng.gen_range(0..state.num_falsified())] as usize;
            if let Ok(g) = select_giver(f, state, weights, c, 0.1, rng) {
                let amount = TransferPolicy::LW_ITH.amount(weights.get(g.clause), weights.w0());
                state.transfer(weights, g.clause, c, amount);
            }
        }
    }
}
