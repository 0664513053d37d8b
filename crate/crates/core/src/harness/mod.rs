//! Batch running, PAR-2 scoring, portfolio solving and the experiment
//! drivers behind the `bench`, `grid` and `csptsweep` subcommands.

mod experiments;
mod generate;
mod par2;
mod portfolio;

use std::path::PathBuf;

use thiserror::Error;

use crate::cnf::ParseError;

pub use experiments::{
    bench, cspt_sweep, grid_search, load_instances, sideways_trace, steps, trace_rows, Budget,
    CsptRow, GridRow, Instance, TraceRow,
};
pub use generate::planted_ksat;
pub use par2::{par2, par2_score, BatchRecord, Par2Summary};
pub use portfolio::solve_portfolio;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no records to score")]
    EmptyRecords,
    #[error("no instances given")]
    NoInstances,
    #[error("empty parameter grid (the cell a = 0, c = 0 transfers no weight and is excluded)")]
    EmptyGrid,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Policy(#[from] crate::weights::PolicyError),
}

/// Tab-separated table with a header row.
pub trait Tsv {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

pub fn to_tsv<T: Tsv>(rows: &[T]) -> String {
    let mut out = T::HEADER.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.fields().join("\t"));
        out.push('\n');
    }
    out
}
