//! Plan validation: replay with precondition checks, then goal subsumption.

use serde::Serialize;

use crate::kb::{subsumes, transition, GroundPredicate, KbError, PlanRecord, State};
use crate::pddl::{PddlDomainAst, PddlProblemAst};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub valid: bool,
    /// 0-based index of the first action whose preconditions fail.
    pub failing_step: Option<usize>,
    pub unmet_facts: Vec<GroundPredicate>,
    /// Negative preconditions that held.
    pub forbidden_facts: Vec<GroundPredicate>,
    /// States reached, starting with the initial state. Stops before the
    /// failing step.
    pub trajectory: Vec<State>,
    pub goal_met: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ValidationReport {
    /// Goal facts missing from the last reached state.
    pub fn unmet_goals(&self, goal: &State) -> Vec<GroundPredicate> {
        let last = self.trajectory.last().cloned().unwrap_or_default();
        goal.iter().filter(|f| !last.contains(f)).cloned().collect()
    }
}

pub fn validate(
    domain: &PddlDomainAst,
    problem: &PddlProblemAst,
    plan: &PlanRecord,
) -> ValidationReport {
    let goal = problem.goal_state();
    let mut report = ValidationReport {
        valid: false,
        failing_step: None,
        unmet_facts: vec![],
        forbidden_facts: vec![],
        trajectory: vec![problem.init_state()],
        goal_met: false,
        message: None,
    };
    for (step, action) in plan.actions.iter().enumerate() {
        if domain.action(&action.name).is_none() {
            report.failing_step = Some(step);
            report.message = Some(format!(
                "action '{}' is not in domain {}",
                action.name, domain.name
            ));
            return report;
        }
        let current = report.trajectory.last().expect("non-empty");
        match transition(current, action) {
            Ok(next) => report.trajectory.push(next),
            Err(KbError::PreconditionViolated { unmet, forbidden }) => {
                report.failing_step = Some(step);
                report.message = Some(format!("step {step} {action}: preconditions fail"));
                report.unmet_facts = unmet;
                report.forbidden_facts = forbidden;
                return report;
            }
            Err(other) => {
                report.failing_step = Some(step);
                report.message = Some(other.to_string());
                return report;
            }
        }
    }
    report.goal_met = subsumes(report.trajectory.last().expect("non-empty"), &goal);
    report.valid = report.goal_met;
    if !report.goal_met {
        report.message = Some("final state does not satisfy the goal".into());
    }
    report
}

/// Facts only in `a`, and facts only in `b`.
pub fn diff_states(a: &State, b: &State) -> (State, State) {
    (
        a.0.difference(&b.0).cloned().collect(),
        b.0.difference(&a.0).cloned().collect(),
    )
}
