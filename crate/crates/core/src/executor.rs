//! Perceive, compare, act: the plan execution and monitoring loop.
//!
//! Plan steps are 0-based. `expected[i]` is the state predicted before
//! action `i`, so `expected[len]` is the predicted final state.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::kb::{
    encode_state, expected_trajectory, goal_satisfied, goal_state, subsumes, Formulation,
    GroundAction, PlanRecord, State,
};
use crate::object_model::{abs_to_rel, AbsConfig, Angle};
use crate::pddl::{build_domain, build_problem};
use crate::planner::{solve, SolveStats, SolveStatus, Solver};
use crate::sim::{ActionOutcome, Arm, HumanAction, Perception, World, WorldState};
use crate::validator::diff_states;

pub const DEFAULT_MAX_REPLANS: usize = 5;
pub const DEFAULT_MAX_ACTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutorConfig {
    pub formulation: Formulation,
    pub solver: Solver,
    pub timeout: Duration,
    pub max_replans: usize,
    /// Robot actions allowed over the whole run.
    pub max_actions: usize,
}

impl ExecutorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_replans == 0 {
            return Err("maxReplans must be at least 1".into());
        }
        if self.timeout.is_zero() {
            return Err("timeout must be positive".into());
        }
        Ok(())
    }
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        ExecutorConfig {
            formulation: Formulation::Relative,
            solver: Solver::Gbfs { seed: 0 },
            timeout: Duration::from_secs(60),
            max_replans: DEFAULT_MAX_REPLANS,
            max_actions: DEFAULT_MAX_ACTIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum TraceEvent {
    #[serde(rename_all = "camelCase")]
    Perceived {
        /// Quantized absolute angles.
        config: AbsConfig,
        goal_satisfied: bool,
    },
    PlanFound {
        plan: Vec<String>,
        stats: SolveStats,
    },
    ActionStarted {
        index: usize,
        action: String,
    },
    ActionOutcome {
        index: usize,
        outcome: ActionOutcome,
        arm: Arm,
        substeps: Vec<String>,
    },
    /// Facts the robot expected but did not see, and facts it saw instead.
    Mismatch {
        missing: State,
        unexpected: State,
    },
    ResumedAt {
        index: usize,
    },
    Replanned {
        count: usize,
    },
    HumanIntervention {
        event: HumanAction,
    },
    GoalReached,
    HumanNeeded {
        reason: String,
    },
}

impl TraceEvent {
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            TraceEvent::GoalReached | TraceEvent::HumanNeeded { .. }
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExecutionTrace {
    pub events: Vec<TraceEvent>,
}

impl ExecutionTrace {
    pub fn terminal(&self) -> Option<&TraceEvent> {
        self.events.last().filter(|e| e.is_terminal())
    }

    /// Copy with wall-clock fields zeroed, for comparing runs.
    pub fn without_timing(&self) -> ExecutionTrace {
        let events = self
            .events
            .iter()
            .cloned()
            .map(|mut e| {
                if let TraceEvent::PlanFound { stats, .. } = &mut e {
                    stats.elapsed_s = 0.0;
                }
                e
            })
            .collect();
        ExecutionTrace { events }
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }
}

/// Observer and pause point for a running loop.
pub trait ExecutionHooks {
    /// `world` is the simulator state right after the event.
    fn on_event(&mut self, _event: &TraceEvent, _world: &WorldState) {}
    /// Called before each robot action and idle intervention; may block.
    fn gate(&mut self) {}
}

pub struct NoHooks;

impl ExecutionHooks for NoHooks {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Proceed,
    Resume(usize),
    Replan,
}

/// Proceed if `next` is applicable in `current`; otherwise resume at the
/// largest `i` whose expected state `current` subsumes; otherwise replan.
pub fn compare_and_decide(current: &State, expected: &[State], next: &GroundAction) -> Decision {
    if next.applicable(current) {
        return Decision::Proceed;
    }
    resume_point(current, expected).map_or(Decision::Replan, Decision::Resume)
}

fn resume_point(current: &State, expected: &[State]) -> Option<usize> {
    expected.iter().rposition(|s| subsumes(current, s))
}

struct ActivePlan {
    plan: PlanRecord,
    expected: Vec<State>,
    next: usize,
}

struct Run<'a> {
    world: &'a mut World,
    cfg: &'a ExecutorConfig,
    hooks: &'a mut dyn ExecutionHooks,
    trace: ExecutionTrace,
    goal_orients: Vec<Angle>,
    goal: State,
    replans: usize,
    last_expected: Option<State>,
}

enum Flow {
    Continue,
    Stop,
}

impl Run<'_> {
    fn emit(&mut self, e: TraceEvent) {
        self.hooks.on_event(&e, &self.world.state);
        self.trace.events.push(e);
    }

    fn human_needed(&mut self, reason: impl Into<String>) -> Flow {
        self.emit(TraceEvent::HumanNeeded {
            reason: reason.into(),
        });
        Flow::Stop
    }

    fn perceive(&mut self) -> Result<Perception, String> {
        let p = self
            .world
            .perceive(self.cfg.formulation)
            .map_err(|e| e.to_string())?;
        let sat = goal_satisfied(&p.state, &self.goal);
        self.emit(TraceEvent::Perceived {
            config: p.abs.clone(),
            goal_satisfied: sat,
        });
        Ok(p)
    }

    fn intervene(&mut self, events: Vec<HumanAction>) -> Result<bool, String> {
        let any = !events.is_empty();
        for h in events {
            self.world.intervene(&h).map_err(|e| e.to_string())?;
            self.emit(TraceEvent::HumanIntervention { event: h });
        }
        Ok(any)
    }

    fn plan_from(&mut self, p: &Perception) -> Result<ActivePlan, String> {
        let spec = &self.world.state.spec;
        let grid = &self.world.state.grid;
        let domain = build_domain(self.cfg.formulation, grid);
        let problem = build_problem(
            spec,
            &p.orientations,
            &self.goal_orients,
            grid,
            self.cfg.formulation,
        )
        .map_err(|e| e.to_string())?;
        let out = solve(&domain, &problem, &self.cfg.solver, self.cfg.timeout)
            .map_err(|e| e.to_string())?;
        match (out.status, out.plan) {
            (SolveStatus::Solved, Some(plan)) => {
                let expected =
                    expected_trajectory(&plan, &problem.init_state()).map_err(|e| e.to_string())?;
                self.emit(TraceEvent::PlanFound {
                    plan: plan.actions.iter().map(GroundAction::signature).collect(),
                    stats: out.stats,
                });
                Ok(ActivePlan {
                    plan,
                    expected,
                    next: 0,
                })
            }
            (status, _) => Err(format!("planner returned {status}")),
        }
    }

    /// Mismatch against `expected`, then a fresh plan if the budget allows.
    fn replan(&mut self, p: &Perception, expected: &State) -> Result<ActivePlan, Flow> {
        self.mismatch(&p.state, expected);
        if self.replans >= self.cfg.max_replans {
            return Err(self.human_needed(format!("replan limit {} reached", self.cfg.max_replans)));
        }
        self.replans += 1;
        self.emit(TraceEvent::Replanned {
            count: self.replans,
        });
        self.plan_from(p).map_err(|r| self.human_needed(r))
    }

    fn mismatch(&mut self, current: &State, expected: &State) {
        let (missing, unexpected) = diff_states(expected, current);
        self.emit(TraceEvent::Mismatch {
            missing,
            unexpected,
        });
    }

    fn step(
        &mut self,
        active: &mut Option<ActivePlan>,
        after_failure: &mut Option<usize>,
    ) -> Result<Flow, String> {
        let p = self.perceive()?;
        if goal_satisfied(&p.state, &self.goal) {
            // Remaining scripted or queued human moves still happen; the
            // robot only watches.
            self.hooks.gate();
            let mut pending = self.world.take_live();
            pending.extend(self.world.take_next_scripted());
            if self.intervene(pending)? {
                if let Some(a) = active.take() {
                    self.last_expected = a.expected.last().cloned();
                }
                return Ok(Flow::Continue);
            }
            self.emit(TraceEvent::GoalReached);
            return Ok(Flow::Stop);
        }

        let mut plan = match active.take() {
            Some(a) => a,
            None => match self.last_expected.take() {
                None => match self.plan_from(&p) {
                    Ok(a) => a,
                    Err(r) => return Ok(self.human_needed(r)),
                },
                Some(expected) => match self.replan(&p, &expected) {
                    Ok(a) => a,
                    Err(flow) => return Ok(flow),
                },
            },
        };

        let len = plan.plan.len();
        let resume_or_replan =
            |state: &State, expected: &[State]| match resume_point(state, expected) {
                Some(i) if i < len => Decision::Resume(i),
                _ => Decision::Replan,
            };
        // `at` indexes the expected state that any mismatch is reported against.
        let (decision, at) = match after_failure.take() {
            Some(j) if j < len && subsumes(&p.state, &plan.expected[j]) => {
                plan.next = j;
                (
                    compare_and_decide(&p.state, &plan.expected, &plan.plan.actions[j]),
                    j,
                )
            }
            Some(j) => (resume_or_replan(&p.state, &plan.expected), j),
            None if plan.next >= len => (resume_or_replan(&p.state, &plan.expected), len),
            None => (
                compare_and_decide(&p.state, &plan.expected, &plan.plan.actions[plan.next]),
                plan.next,
            ),
        };
        match decision {
            Decision::Proceed => {}
            Decision::Resume(i) => {
                self.mismatch(&p.state, &plan.expected[at]);
                self.emit(TraceEvent::ResumedAt { index: i });
                plan.next = i;
            }
            Decision::Replan => {
                let expected = plan.expected[at].clone();
                plan = match self.replan(&p, &expected) {
                    Ok(a) => a,
                    Err(flow) => return Ok(flow),
                };
            }
        }

        // Action gate: pause point, then human moves due before this action.
        self.hooks.gate();
        let step = self.world.actions_executed();
        let due = self.world.take_before(step);
        if self.intervene(due)? {
            *active = Some(plan);
            return Ok(Flow::Continue);
        }
        if step >= self.cfg.max_actions {
            return Ok(
                self.human_needed(format!("action budget {} exhausted", self.cfg.max_actions))
            );
        }
        let index = plan.next;
        let action = plan.plan.actions[index].clone();
        if !action.applicable(&p.state) {
            // Only reachable with an inconsistent plan; never act blind.
            *active = None;
            self.last_expected = Some(plan.expected[index].clone());
            return Ok(Flow::Continue);
        }
        self.emit(TraceEvent::ActionStarted {
            index,
            action: action.signature(),
        });
        let report = self
            .world
            .execute_action(&action)
            .map_err(|e| e.to_string())?;
        self.emit(TraceEvent::ActionOutcome {
            index,
            outcome: report.outcome,
            arm: report.arm,
            substeps: report.substeps,
        });
        let during = self.world.take_during(step);
        self.intervene(during)?;
        plan.next = index + 1;
        if report.outcome != ActionOutcome::Completed {
            *after_failure = Some(index + 1);
        }
        *active = Some(plan);
        Ok(Flow::Continue)
    }
}

/// Drives `world` to `goal` (absolute angles, on the world's grid).
pub fn run(
    world: &mut World,
    goal: &[Angle],
    cfg: &ExecutorConfig,
    hooks: &mut dyn ExecutionHooks,
) -> ExecutionTrace {
    let grid = world.state.grid.clone();
    let goal_orients: Vec<Angle> = match cfg.formulation {
        Formulation::Absolute => goal.to_vec(),
        Formulation::Relative => {
            abs_to_rel(&AbsConfig(goal.to_vec()), world.state.base_pose.heading).relative
        }
    };
    let mut run = Run {
        world,
        cfg,
        hooks,
        trace: ExecutionTrace::default(),
        goal: goal_state(&goal_orients),
        goal_orients,
        replans: 0,
        last_expected: None,
    };
    let spec = run.world.state.spec.clone();
    if let Err(e) = encode_state(&run.goal_orients, &spec, &grid, cfg.formulation) {
        run.human_needed(format!("goal cannot be represented: {e}"));
        return run.trace;
    }
    let mut active = None;
    let mut after_failure = None;
    loop {
        match run.step(&mut active, &mut after_failure) {
            Ok(Flow::Continue) => {}
            Ok(Flow::Stop) => break,
            Err(e) => {
                run.human_needed(e);
                break;
            }
        }
    }
    run.trace
}
