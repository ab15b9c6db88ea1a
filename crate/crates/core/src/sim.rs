//! Simulated table-top world: continuous ground truth, noisy quantized
//! perception, rotation actions with injected failures, and human moves.

use std::collections::VecDeque;
use std::sync::mpsc::Receiver;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::kb::{encode_state, Formulation, GroundAction, KbError, State};
use crate::object_model::{
    abs_to_rel, forward_kinematics_continuous, normalize_degrees, AbsConfig, Angle, Hold,
    ModelError, ObjectSpec, OrientationGrid, Pose2D,
};

pub const DEFAULT_SIGMA_DEG: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NoiseModel {
    pub sigma_deg: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            sigma_deg: DEFAULT_SIGMA_DEG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FailureMode {
    #[default]
    None,
    /// Only this fraction of the commanded rotation happens.
    PartialFraction(f64),
    Refuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FailureTrigger {
    #[default]
    Never,
    /// The n-th robot action of the run, counting from 0.
    AtStep(usize),
    Probability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FailurePolicy {
    pub mode: FailureMode,
    pub trigger: FailureTrigger,
}

impl FailurePolicy {
    pub fn validate(&self) -> Result<(), String> {
        if let FailureMode::PartialFraction(f) = self.mode {
            if !(f > 0.0 && f < 1.0) {
                return Err(format!("partial fraction {f} outside (0,1)"));
            }
        }
        if let FailureTrigger::Probability(p) = self.trigger {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("failure probability {p} outside [0,1]"));
            }
        }
        Ok(())
    }
}

/// A person setting one joint to an absolute angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HumanAction {
    pub joint_idx: usize,
    pub orientation_deg: f64,
    pub hold: Hold,
}

/// Robot action counter values, 0-based over the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InterventionTiming {
    /// Before the robot starts its n-th action, or while it idles with
    /// fewer than n actions done.
    BeforeStep(usize),
    /// After the n-th action's motion, before the next perception.
    DuringStep(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScriptedIntervention {
    pub when: InterventionTiming,
    #[serde(flatten)]
    pub action: HumanAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ActionOutcome {
    Completed,
    Partial { fraction: f64 },
    Refused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ActionReport {
    pub outcome: ActionOutcome,
    pub arm: Arm,
    pub substeps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorldState {
    pub spec: ObjectSpec,
    pub grid: OrientationGrid,
    /// Absolute joint angles in degrees, `[0, 360)`.
    pub true_config: Vec<f64>,
    pub base_pose: Pose2D,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perception {
    pub abs: AbsConfig,
    /// Per-joint values in the requested formulation.
    pub orientations: Vec<Angle>,
    pub state: State,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("action {0} is not a rotation between two orientations")]
    NotARotation(String),
}

/// Ground truth plus the event queue that serializes every change to it.
pub struct World {
    pub state: WorldState,
    pub noise: NoiseModel,
    pub failure: FailurePolicy,
    rng: ChaCha8Rng,
    actions_executed: usize,
    script: VecDeque<ScriptedIntervention>,
    live: Option<Receiver<HumanAction>>,
}

/// Signed degrees in `(-180, 180]`.
fn signed_delta(from: Angle, to: Angle) -> f64 {
    let d = (to - from).degrees() as f64;
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

impl World {
    pub fn new(state: WorldState, noise: NoiseModel, failure: FailurePolicy) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(state.rng_seed);
        World {
            state,
            noise,
            failure,
            rng,
            actions_executed: 0,
            script: VecDeque::new(),
            live: None,
        }
    }

    pub fn with_script(mut self, mut events: Vec<ScriptedIntervention>) -> Self {
        // Stable: events with the same timing keep their file order.
        events.sort_by_key(|e| match e.when {
            InterventionTiming::BeforeStep(n) => (n, 0),
            InterventionTiming::DuringStep(n) => (n, 1),
        });
        self.script = events.into();
        self
    }

    pub fn with_live_queue(mut self, rx: Receiver<HumanAction>) -> Self {
        self.live = Some(rx);
        self
    }

    pub fn actions_executed(&self) -> usize {
        self.actions_executed
    }

    pub fn joint_count(&self) -> usize {
        self.state.true_config.len()
    }

    pub fn pending_scripted(&self) -> usize {
        self.script.len()
    }

    pub fn perceive(&mut self, formulation: Formulation) -> Result<Perception, SimError> {
        let sigma = self.noise.sigma_deg.max(0.0);
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        let grid = &self.state.grid;
        let abs = AbsConfig(
            self.state
                .true_config
                .iter()
                .map(|&t| {
                    let noise = if sigma > 0.0 {
                        normal.sample(&mut self.rng)
                    } else {
                        0.0
                    };
                    grid.quantize_degrees(t + noise)
                })
                .collect(),
        );
        let orientations: Vec<Angle> = match formulation {
            Formulation::Absolute => abs.0.clone(),
            // Differences of on-grid values may fall between grid values on
            // uneven grids.
            Formulation::Relative => abs_to_rel(&abs, self.state.base_pose.heading)
                .relative
                .into_iter()
                .map(|r| grid.quantize(r))
                .collect(),
        };
        let state = encode_state(&orientations, &self.state.spec, grid, formulation)?;
        Ok(Perception {
            abs,
            orientations,
            state,
        })
    }

    fn check_joint(&self, joint: usize) -> Result<(), ModelError> {
        if joint >= self.joint_count() {
            return Err(ModelError::InvalidJoint {
                index: joint,
                count: self.joint_count(),
            });
        }
        Ok(())
    }

    fn turn(&mut self, joint: usize, degrees: f64, hold: Hold) {
        for j in hold.affected(joint, self.joint_count()) {
            let t = &mut self.state.true_config[j];
            *t = normalize_degrees(*t + degrees);
        }
    }

    fn operated_arm(&self, joint: usize) -> Arm {
        let pts = forward_kinematics_continuous(
            &self.state.true_config,
            &self.state.spec,
            self.state.base_pose,
        );
        let mid_x = (pts[joint].0 + pts[joint + 1].0) / 2.0;
        if mid_x >= self.state.base_pose.x {
            Arm::Right
        } else {
            Arm::Left
        }
    }

    fn failure_fires(&mut self) -> bool {
        match self.failure.trigger {
            FailureTrigger::Never => false,
            FailureTrigger::AtStep(n) => self.actions_executed == n,
            FailureTrigger::Probability(p) => self.rng.random_bool(p.clamp(0.0, 1.0)),
        }
    }

    /// Turns the action's joint by the signed grid step between its two
    /// orientation arguments, holding the upstream link.
    pub fn execute_action(&mut self, action: &GroundAction) -> Result<ActionReport, SimError> {
        let joint = action
            .joint()
            .ok_or_else(|| SimError::NotARotation(action.signature()))?;
        self.check_joint(joint)?;
        let orients: Vec<Angle> = action
            .args
            .iter()
            .filter_map(|a| a.as_orientation())
            .collect();
        let [from, to] = orients[..] else {
            return Err(SimError::NotARotation(action.signature()));
        };
        let delta = signed_delta(from, to);
        let arm = self.operated_arm(joint);
        let outcome = if self.failure_fires() {
            match self.failure.mode {
                FailureMode::None => ActionOutcome::Completed,
                FailureMode::PartialFraction(f) => ActionOutcome::Partial { fraction: f },
                FailureMode::Refuse => ActionOutcome::Refused,
            }
        } else {
            ActionOutcome::Completed
        };
        self.actions_executed += 1;
        let substeps = match outcome {
            ActionOutcome::Completed => {
                self.turn(joint, delta, Hold::Upstream);
                vec!["grasp-hold", "grasp", "rotate"]
            }
            ActionOutcome::Partial { fraction } => {
                self.turn(joint, delta * fraction, Hold::Upstream);
                vec!["grasp-hold", "grasp", "rotate"]
            }
            ActionOutcome::Refused => vec![],
        };
        Ok(ActionReport {
            outcome,
            arm,
            substeps: substeps.into_iter().map(String::from).collect(),
        })
    }

    /// Sets a joint to an absolute angle; the held side stays put.
    pub fn intervene(&mut self, event: &HumanAction) -> Result<(), ModelError> {
        self.check_joint(event.joint_idx)?;
        let delta =
            normalize_degrees(event.orientation_deg) - self.state.true_config[event.joint_idx];
        self.turn(event.joint_idx, delta, event.hold);
        Ok(())
    }

    /// Scripted events due before robot action `step` starts, followed by any
    /// live events, in delivery order.
    pub fn take_before(&mut self, step: usize) -> Vec<HumanAction> {
        let mut out = Vec::new();
        while let Some(e) = self.script.front() {
            match e.when {
                InterventionTiming::BeforeStep(n) if n <= step => {}
                InterventionTiming::DuringStep(n) if n < step => {}
                _ => break,
            }
            out.push(self.script.pop_front().expect("front").action);
        }
        out.extend(self.take_live());
        out
    }

    /// Scripted events attached to the motion of action `step`.
    pub fn take_during(&mut self, step: usize) -> Vec<HumanAction> {
        let mut out = Vec::new();
        while let Some(e) = self.script.front() {
            match e.when {
                InterventionTiming::DuringStep(n) if n <= step => {}
                InterventionTiming::BeforeStep(n) if n <= step => {}
                _ => break,
            }
            out.push(self.script.pop_front().expect("front").action);
        }
        out
    }

    /// Next scripted event regardless of timing; used while the robot idles.
    pub fn take_next_scripted(&mut self) -> Option<HumanAction> {
        self.script.pop_front().map(|e| e.action)
    }

    pub fn take_live(&mut self) -> Vec<HumanAction> {
        let mut out = Vec::new();
        if let Some(rx) = &self.live {
            while let Ok(a) = rx.try_recv() {
                out.push(a);
            }
        }
        out
    }
}

/// Scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Scenario {
    pub object_spec: ObjectSpec,
    pub grid: OrientationGrid,
    pub init_true: Vec<f64>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub failure_policy: FailurePolicy,
    #[serde(default)]
    pub interventions: Vec<ScriptedIntervention>,
    /// Absolute goal angles in degrees, on the grid.
    pub goal: Vec<Angle>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "Pose2D::origin")]
    pub base_pose: Pose2D,
    #[serde(default = "default_formulation")]
    pub formulation: Formulation,
}

fn default_formulation() -> Formulation {
    Formulation::Relative
}

impl Scenario {
    pub fn validate(&self) -> Result<(), String> {
        self.object_spec.validate().map_err(|e| e.to_string())?;
        let n = self.object_spec.joint_count();
        if self.init_true.len() != n || self.goal.len() != n {
            return Err(format!(
                "chain has {n} joints but initTrue has {} and goal {}",
                self.init_true.len(),
                self.goal.len()
            ));
        }
        if let Some(bad) = self.goal.iter().find(|a| !self.grid.contains(**a)) {
            return Err(format!("goal orientation {bad} is not on the grid"));
        }
        if let Some(bad) = self.interventions.iter().find(|e| e.action.joint_idx >= n) {
            return Err(format!(
                "intervention on joint {} of {n}",
                bad.action.joint_idx
            ));
        }
        if self.noise.sigma_deg.is_nan() || self.noise.sigma_deg < 0.0 {
            return Err("noise sigma must be non-negative".into());
        }
        self.failure_policy.validate()
    }

    pub fn world(&self) -> World {
        let state = WorldState {
            spec: self.object_spec.clone(),
            grid: self.grid.clone(),
            true_config: self
                .init_true
                .iter()
                .map(|&d| normalize_degrees(d))
                .collect(),
            base_pose: self.base_pose,
            rng_seed: self.seed,
        };
        World::new(state, self.noise, self.failure_policy).with_script(self.interventions.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Symbol;
    use crate::object_model::rotate_holding_upstream;

    fn world(truth: &[f64], sigma: f64) -> World {
        let state = WorldState {
            spec: ObjectSpec::uniform(truth.len(), 1.0),
            grid: OrientationGrid::from_granularity(90, true).unwrap(),
            true_config: truth.to_vec(),
            base_pose: Pose2D::origin(),
            rng_seed: 42,
        };
        World::new(
            state,
            NoiseModel { sigma_deg: sigma },
            FailurePolicy::default(),
        )
    }

    fn rotation(joint: usize, from: i64, to: i64) -> GroundAction {
        let mut a = GroundAction::noop("rotateclockwise");
        a.args = vec![
            Symbol::link(joint + 1),
            Symbol::link(joint),
            Symbol::joint(joint),
            Symbol::orientation(Angle::new(from)),
            Symbol::orientation(Angle::new(to)),
        ];
        a
    }

    #[test]
    fn noiseless_perception() {
        let mut w = world(&[0.0, 90.0], 0.0);
        assert_eq!(
            w.perceive(Formulation::Absolute).unwrap().abs,
            AbsConfig::from_degrees(&[0, 90])
        );
        let mut w = world(&[92.0, 268.0], 0.0);
        let p = w.perceive(Formulation::Relative).unwrap();
        assert_eq!(p.abs, AbsConfig::from_degrees(&[90, 270]));
        assert_eq!(p.orientations, vec![Angle::new(90), Angle::new(180)]);
    }

    #[test]
    fn seeded_noise_replays() {
        let mut a = world(&[44.0, 136.0, 10.0], 5.0);
        let mut b = world(&[44.0, 136.0, 10.0], 5.0);
        for _ in 0..20 {
            assert_eq!(
                a.perceive(Formulation::Absolute).unwrap(),
                b.perceive(Formulation::Absolute).unwrap()
            );
        }
    }

    #[test]
    fn completed_rotation_propagates_downstream() {
        let mut w = world(&[0.0, 0.0, 0.0], 0.0);
        let r = w.execute_action(&rotation(1, 0, 90)).unwrap();
        assert_eq!(r.outcome, ActionOutcome::Completed);
        assert_eq!(w.state.true_config, vec![0.0, 90.0, 90.0]);
        assert_eq!(r.substeps, vec!["grasp-hold", "grasp", "rotate"]);
    }

    #[test]
    fn partial_and_refused() {
        let mut w = world(&[0.0], 0.0);
        w.failure = FailurePolicy {
            mode: FailureMode::PartialFraction(0.5),
            trigger: FailureTrigger::AtStep(0),
        };
        let r = w.execute_action(&rotation(0, 0, 90)).unwrap();
        assert_eq!(r.outcome, ActionOutcome::Partial { fraction: 0.5 });
        assert_eq!(w.state.true_config, vec![45.0]);

        let mut w = world(&[0.0, 90.0], 0.0);
        w.failure = FailurePolicy {
            mode: FailureMode::Refuse,
            trigger: FailureTrigger::Probability(1.0),
        };
        let r = w.execute_action(&rotation(0, 0, 90)).unwrap();
        assert_eq!(r.outcome, ActionOutcome::Refused);
        assert_eq!(w.state.true_config, vec![0.0, 90.0]);
    }

    #[test]
    fn wrap_step_turns_the_short_way() {
        let mut w = world(&[270.0], 0.0);
        w.execute_action(&rotation(0, 270, 0)).unwrap();
        assert_eq!(w.state.true_config, vec![0.0]);
    }

    #[test]
    fn interventions_follow_hold_direction() {
        let h = |joint_idx, deg| HumanAction {
            joint_idx,
            orientation_deg: deg,
            hold: Hold::Upstream,
        };
        let mut w = world(&[0.0, 90.0], 0.0);
        w.intervene(&h(0, 90.0)).unwrap();
        assert_eq!(w.state.true_config, vec![90.0, 180.0]);
        let mut w = world(&[0.0, 90.0], 0.0);
        w.intervene(&h(1, 90.0)).unwrap();
        assert_eq!(w.state.true_config, vec![0.0, 90.0]);
        let mut w = world(&[0.0, 90.0], 0.0);
        w.intervene(&HumanAction {
            hold: Hold::Downstream,
            ..h(1, 180.0)
        })
        .unwrap();
        assert_eq!(w.state.true_config, vec![90.0, 180.0]);
        assert!(matches!(
            w.intervene(&h(2, 0.0)),
            Err(ModelError::InvalidJoint { .. })
        ));
    }

    #[test]
    fn arm_follows_link_midpoint() {
        let w = world(&[180.0, 0.0], 0.0);
        assert_eq!(w.operated_arm(0), Arm::Left);
        let w = world(&[0.0, 180.0], 0.0);
        assert_eq!(w.operated_arm(0), Arm::Right);
    }

    #[test]
    fn noiseless_execution_matches_kinematics() {
        // Simulated motion against the absolute-formulation semantics.
        let grid = OrientationGrid::from_granularity(90, true).unwrap();
        let mut w = world(&[0.0, 90.0, 180.0], 0.0);
        let mut cfg = AbsConfig::from_degrees(&[0, 90, 180]);
        for (joint, steps) in [(0usize, 1i32), (2, 1), (1, 1), (0, 1)] {
            let from = cfg.0[joint];
            let to = grid.step(from, steps).unwrap();
            w.execute_action(&rotation(joint, from.degrees() as i64, to.degrees() as i64))
                .unwrap();
            cfg = rotate_holding_upstream(&cfg, joint, steps, &grid).unwrap();
            assert_eq!(w.perceive(Formulation::Absolute).unwrap().abs, cfg);
        }
    }

    #[test]
    fn scripted_events_are_released_in_order() {
        let ev = |when, joint_idx| ScriptedIntervention {
            when,
            action: HumanAction {
                joint_idx,
                orientation_deg: 0.0,
                hold: Hold::Upstream,
            },
        };
        let mut w = world(&[0.0, 0.0, 0.0], 0.0).with_script(vec![
            ev(InterventionTiming::DuringStep(1), 2),
            ev(InterventionTiming::BeforeStep(1), 1),
            ev(InterventionTiming::BeforeStep(0), 0),
        ]);
        assert_eq!(
            w.take_before(0)
                .iter()
                .map(|a| a.joint_idx)
                .collect::<Vec<_>>(),
            vec![0]
        );
        assert!(w.take_during(0).is_empty());
        assert_eq!(
            w.take_before(1)
                .iter()
                .map(|a| a.joint_idx)
                .collect::<Vec<_>>(),
            vec![1]
        );
        assert_eq!(
            w.take_during(1)
                .iter()
                .map(|a| a.joint_idx)
                .collect::<Vec<_>>(),
            vec![2]
        );
        assert_eq!(w.pending_scripted(), 0);
    }

    #[test]
    fn scenario_json() {
        let text = r#"{
            "objectSpec": {"linkCount": 2, "linkLengths": [1, 1]},
            "grid": {"granularityDeg": 90, "wrap": true},
            "initTrue": [0, 90],
            "noise": {"sigmaDeg": 0},
            "failurePolicy": {"mode": {"partialFraction": 0.5}, "trigger": {"atStep": 1}},
            "interventions": [{"when": {"beforeStep": 2}, "jointIdx": 1, "orientationDeg": 180, "hold": "upstream"}],
            "goal": [90, 180]
        }"#;
        let s: Scenario = serde_json::from_str(text).unwrap();
        s.validate().unwrap();
        assert_eq!(s.formulation, Formulation::Relative);
        assert_eq!(s.failure_policy.trigger, FailureTrigger::AtStep(1));
        let back: Scenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
