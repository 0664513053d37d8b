use rand::seq::index::sample;
use rand::Rng;

use crate::cnf::{Clause, Formula, Var};
use crate::state::Assignment;

/// Random k-SAT instance satisfied by a hidden assignment.
///
/// The assignment is drawn first. Each clause takes `k` distinct variables
/// and random signs, redrawing the signs until the clause is satisfied by
/// the hidden assignment.
pub fn planted_ksat(
    num_vars: usize,
    num_clauses: usize,
    k: usize,
    rng: &mut impl Rng,
) -> (Formula, Assignment) {
    assert!(
        k >= 1 && k <= num_vars,
        "clause width must be in 1..=num_vars"
    );
    let planted = Assignment::random(num_vars, rng);
    let mut clauses = Vec::with_capacity(num_clauses);
    for _ in 0..num_clauses {
        let vars: Vec<Var> = sample(rng, num_vars, k)
            .into_iter()
            .map(Var::from_index)
            .collect();
        let lits = loop {
            let lits: Vec<_> = vars
                .iter()
                .map(|&v| {
                    if rng.gen::<bool>() {
                        v.positive()
                    } else {
                        v.negative()
                    }
                })
                .collect();
            if lits.iter().any(|&l| planted.is_true(l)) {
                break lits;
            }
        };
        clauses.push(Clause::new(lits).expect("k >= 1"));
    }
    (Formula::new(num_vars, clauses), planted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn planted_assignment_satisfies() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let (f, a) = planted_ksat(30, 150, 3, &mut rng);
            assert_eq!(f.num_clauses(), 150);
            assert!(f
                .clauses()
                .iter()
                .all(|c| c.len() == 3 && !c.is_tautology()));
            assert_eq!(f.verify_model(&a), Ok(true));
        }
    }
}
