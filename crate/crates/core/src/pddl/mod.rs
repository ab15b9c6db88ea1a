//! PDDL front-end for the two articulated-chain formulations.
//!
//! The supported subset is `:strips :typing :negative-preconditions :equality
//! :conditional-effects` (with `forall`/`when` effects). Symbols are
//! case-insensitive and emitted in lower case. Orientation constants are named
//! `o<degrees>`; joints `j1..jn`; links `l0..ln` with `l0` the virtual base.

mod emit;
mod parse;
mod plan;
pub(crate) mod sexpr;

pub use emit::{
    build_domain, build_problem, emit_domain, emit_problem, render_domain, render_problem,
};
pub use parse::{parse_domain, parse_problem};
pub use plan::{parse_plan, parse_plan_lines, PlanLine};

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::kb::{ActionSchema, GroundPredicate, KbError, Predicate, ProblemRecord, State, Symbol};
use crate::object_model::ModelError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("unsupported feature '{token}' at {line}:{col}")]
    UnsupportedFeature {
        token: String,
        line: usize,
        col: usize,
    },
    #[error("plan line {line}: unknown action '{name}'")]
    UnknownAction { line: usize, name: String },
    #[error("plan line {line}: '{name}' takes {expected} argument(s), got {found}")]
    ArityMismatch {
        line: usize,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("plan line {line}: {msg}")]
    InvalidBinding { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kb(#[from] KbError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Requirement {
    Strips,
    Typing,
    NegativePreconditions,
    Equality,
    ConditionalEffects,
}

impl Requirement {
    pub fn keyword(self) -> &'static str {
        match self {
            Requirement::Strips => ":strips",
            Requirement::Typing => ":typing",
            Requirement::NegativePreconditions => ":negative-preconditions",
            Requirement::Equality => ":equality",
            Requirement::ConditionalEffects => ":conditional-effects",
        }
    }

    pub fn from_keyword(kw: &str) -> Option<Self> {
        [
            Requirement::Strips,
            Requirement::Typing,
            Requirement::NegativePreconditions,
            Requirement::Equality,
            Requirement::ConditionalEffects,
        ]
        .into_iter()
        .find(|r| r.keyword() == kw)
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Typed object or constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedObject {
    pub name: Symbol,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PddlDomainAst {
    pub name: String,
    pub requirements: BTreeSet<Requirement>,
    pub types: Vec<String>,
    pub constants: Vec<TypedObject>,
    pub predicates: Vec<Predicate>,
    pub actions: Vec<ActionSchema>,
}

impl PddlDomainAst {
    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions
            .iter()
            .find(|a| a.name.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PddlProblemAst {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedObject>,
    pub init: Vec<GroundPredicate>,
    pub goal: Vec<GroundPredicate>,
}

impl PddlProblemAst {
    pub fn init_state(&self) -> State {
        self.init.iter().cloned().collect()
    }

    pub fn goal_state(&self) -> State {
        self.goal.iter().cloned().collect()
    }

    pub fn to_record(&self) -> Result<ProblemRecord, KbError> {
        ProblemRecord::new(self.init_state(), self.goal_state())
    }
}
