use crate::engine::{Counters, Status};

use super::{HarnessError, Tsv};

/// One solver run on one benchmark instance.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchRecord {
    pub instance: String,
    pub config: String,
    pub seed: u64,
    pub status: Status,
    /// Wall-clock seconds.
    pub solve_time: f64,
    pub flips: u64,
    pub counters: Counters,
}

impl BatchRecord {
    /// Solved within `timeout` seconds.
    pub fn solved_within(&self, timeout: f64) -> bool {
        self.status == Status::Sat && self.solve_time <= timeout
    }
}

impl Tsv for BatchRecord {
    const HEADER: &'static [&'static str] = &[
        "instance",
        "config",
        "seed",
        "status",
        "time",
        "flips",
        "sideways",
        "local_minima",
        "transfers",
        "random_givers",
    ];

    fn fields(&self) -> Vec<String> {
        let status = match self.status {
            Status::Sat => "SAT",
            Status::Unknown => "UNKNOWN",
        };
        vec![
            self.instance.clone(),
            self.config.clone(),
            self.seed.to_string(),
            status.to_string(),
            format!("{:.3}", self.solve_time),
            self.flips.to_string(),
            self.counters.sideways.to_string(),
            self.counters.local_minima.to_string(),
            self.counters.transfers.to_string(),
            self.counters.random_giver_picks.to_string(),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Par2Summary {
    pub solved: usize,
    pub total: usize,
    pub par2: f64,
    pub timeout: f64,
}

/// Penalized average: solved runs cost their value, unsolved ones (`None`)
/// cost `2 · limit`.
pub fn par2_score(costs: &[Option<f64>], limit: f64) -> Result<f64, HarnessError> {
    if costs.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    let sum: f64 = costs.iter().map(|c| c.unwrap_or(2.0 * limit)).sum();
    Ok(sum / costs.len() as f64)
}

/// PAR-2 in seconds. A run counts as solved only if it found a model
/// within `timeout`.
pub fn par2(records: &[BatchRecord], timeout: f64) -> Result<Par2Summary, HarnessError> {
    let costs: Vec<Option<f64>> = records
        .iter()
        .map(|r| r.solved_within(timeout).then_some(r.solve_time))
        .collect();
    let par2 = par2_score(&costs, timeout)?;
    Ok(Par2Summary {
        solved: costs.iter().flatten().count(),
        total: records.len(),
        par2,
        timeout,
    })
}
