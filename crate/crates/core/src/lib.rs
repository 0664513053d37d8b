//! A dynamic local search SAT solver built around divide-and-distribute
//! clause weighting, with linear weight transfer, a tunable random-giver
//! probability and weighted-random variable selection.
//!
//! ```
//! use ddfw::{cnf::parse_dimacs, engine::{run, SolverConfig}};
//!
//! let formula = parse_dimacs(b"p cnf 2 2\n1 -2 0\n2 0\n").unwrap();
//! let result = run(&formula, &SolverConfig::default());
//! assert!(result.is_sat());
//! assert_eq!(formula.verify_model(result.model.as_ref().unwrap()), Ok(true));
//! ```

pub mod cnf;
pub mod engine;
pub mod harness;
pub mod restart;
pub mod state;
pub mod weights;

pub use cnf::{Clause, Formula, Lit, ParseError, Var};
pub use engine::{run, Engine, Pick, RunResult, SolverConfig, Status};
pub use state::{Assignment, SearchState};
pub use weights::{TransferPolicy, WeightStore};
