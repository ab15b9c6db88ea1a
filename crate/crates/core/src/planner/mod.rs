//! Grounding and forward state-space search.

mod external;
mod ground;
mod search;

pub use external::{solve_external, ExternalError};
pub use ground::{ground, GroundContext, GroundingResult};
pub use search::{
    solve_bfs, solve_bfs_limited, solve_gbfs, solve_gbfs_limited, DEFAULT_NODE_LIMIT,
};

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::kb::PlanRecord;
use crate::pddl::{PddlDomainAst, PddlError, PddlProblemAst};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Bfs,
    Gbfs,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Bfs => "bfs",
            Strategy::Gbfs => "gbfs",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bfs" => Ok(Strategy::Bfs),
            "gbfs" => Ok(Strategy::Gbfs),
            other => Err(format!("unknown strategy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Solved,
    Unsolvable,
    Timeout,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Solved => "Solved",
            SolveStatus::Unsolvable => "Unsolvable",
            SolveStatus::Timeout => "Timeout",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveStats {
    pub expanded_nodes: u64,
    pub generated_nodes: u64,
    /// Wall time; `solve` includes grounding.
    pub elapsed_s: f64,
    pub plan_length: Option<usize>,
    /// Set when the search stopped on the node cap rather than the clock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stdout: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub plan: Option<PlanRecord>,
    pub stats: SolveStats,
}

/// Which search to run and its limits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solver {
    Bfs,
    Gbfs { seed: u64 },
    External { command: String },
}

/// Grounds, searches and reports timing that includes grounding.
pub fn solve(
    domain: &PddlDomainAst,
    problem: &PddlProblemAst,
    solver: &Solver,
    timeout: Duration,
) -> Result<SolveOutcome, SolveError> {
    let start = std::time::Instant::now();
    let mut outcome = match solver {
        Solver::External { command } => {
            let dt = crate::pddl::render_domain(domain);
            let pt = crate::pddl::render_problem(problem);
            solve_external(&dt, &pt, command, timeout)?
        }
        Solver::Bfs | Solver::Gbfs { .. } => {
            let g = ground(domain, problem)?;
            let left = timeout.saturating_sub(start.elapsed());
            match solver {
                Solver::Gbfs { seed } => solve_gbfs(&g, left, *seed),
                _ => solve_bfs(&g, left),
            }
        }
    };
    outcome.stats.elapsed_s = start.elapsed().as_secs_f64();
    Ok(outcome)
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error(transparent)]
    External(#[from] ExternalError),
}
