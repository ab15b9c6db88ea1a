//! Planning and execution monitoring for articulated chains.

pub mod benchmark;
pub mod executor;
pub mod kb;
pub mod object_model;
pub mod pddl;
pub mod planner;
pub mod sim;
pub mod validator;

pub use executor::{run as execute, ExecutionHooks, ExecutionTrace, ExecutorConfig, TraceEvent};
pub use kb::{Formulation, GroundAction, GroundPredicate, PlanRecord, Predicate, State, Symbol};
pub use object_model::{AbsConfig, Angle, Hold, ObjectSpec, OrientationGrid, Pose2D, RelConfig};
pub use pddl::{PddlDomainAst, PddlError, PddlProblemAst};
pub use planner::{solve, SolveOutcome, SolveStats, SolveStatus, Solver, Strategy};
pub use sim::{HumanAction, Scenario, World};
pub use validator::{validate, ValidationReport};
