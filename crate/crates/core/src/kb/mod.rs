//! Ground-predicate knowledge base.
//!
//! States are sets of ground atoms. Subsumption between states is set
//! containment, which coincides with description subsumption for conjunctions
//! of ground atoms. Actions follow add-after-delete STRIPS semantics extended
//! with conditional branches whose conditions are all evaluated against the
//! state the action is applied to.

mod encode;

pub use encode::{decode_orientations, encode_state, goal_state, static_facts, Formulation};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::object_model::{Angle, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("preconditions violated: missing [{}], forbidden [{}]", join(.unmet), join(.forbidden))]
    PreconditionViolated {
        unmet: Vec<GroundPredicate>,
        forbidden: Vec<GroundPredicate>,
    },
    #[error("plan step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<KbError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot decode state: {0}")]
    Decode(String),
    #[error("goal may only contain HasOrientation facts, found {0}")]
    InvalidGoal(GroundPredicate),
}

fn join(facts: &[GroundPredicate]) -> String {
    facts
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Lower-case entity identifier (`j1`, `l0`, `o45`, ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(name: impl AsRef<str>) -> Self {
        Symbol(name.as_ref().to_ascii_lowercase())
    }

    /// 0-based joint index `i` is named `j{i+1}`.
    pub fn joint(index: usize) -> Self {
        Symbol(format!("j{}", index + 1))
    }

    /// Link 0 is the virtual base link.
    pub fn link(index: usize) -> Self {
        Symbol(format!("l{index}"))
    }

    pub fn orientation(angle: Angle) -> Self {
        Symbol(format!("o{}", angle.degrees()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric_suffix(&self, prefix: char) -> Option<u64> {
        let rest = self.0.strip_prefix(prefix)?;
        if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        rest.parse().ok()
    }

    /// 0-based joint index for names of the form `j{n}`, `n >= 1`.
    pub fn as_joint(&self) -> Option<usize> {
        match self.numeric_suffix('j')? {
            0 => None,
            n => Some(n as usize - 1),
        }
    }

    pub fn as_link(&self) -> Option<usize> {
        self.numeric_suffix('l').map(|n| n as usize)
    }

    pub fn as_orientation(&self) -> Option<Angle> {
        match self.numeric_suffix('o')? {
            n if n < 360 => Some(Angle::new(n as i64)),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The predicates of the articulated-object domain.
///
/// `Proximal(j, l)` marks `j` as the joint a link `l` turns about when its
/// upstream neighbour is held; the absolute formulation uses it to pin the
/// rotated link of each action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predicate {
    Connected,
    HasOrientation,
    OrientationOrd,
    Affected,
    Proximal,
}

/// Argument kinds, matching the PDDL types of the generated domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Joint,
    Link,
    Orientation,
}

impl Kind {
    pub fn type_name(self) -> &'static str {
        match self {
            Kind::Joint => "joint",
            Kind::Link => "link",
            Kind::Orientation => "orientation",
        }
    }
}

impl Predicate {
    pub const ALL: [Predicate; 5] = [
        Predicate::Connected,
        Predicate::HasOrientation,
        Predicate::OrientationOrd,
        Predicate::Affected,
        Predicate::Proximal,
    ];

    /// Canonical argument kinds.
    pub fn signature(self) -> &'static [Kind] {
        match self {
            Predicate::Connected | Predicate::Proximal => &[Kind::Joint, Kind::Link],
            Predicate::HasOrientation => &[Kind::Joint, Kind::Orientation],
            Predicate::OrientationOrd => &[Kind::Orientation, Kind::Orientation],
            Predicate::Affected => &[Kind::Joint, Kind::Link, Kind::Joint],
        }
    }

    pub fn arity(self) -> usize {
        self.signature().len()
    }

    pub fn pddl_name(self) -> &'static str {
        match self {
            Predicate::Connected => "connected",
            Predicate::HasOrientation => "hasorientation",
            Predicate::OrientationOrd => "orientationord",
            Predicate::Affected => "affected",
            Predicate::Proximal => "proximal",
        }
    }

    pub fn from_pddl_name(name: &str) -> Option<Self> {
        Predicate::ALL
            .into_iter()
            .find(|p| p.pddl_name().eq_ignore_ascii_case(name))
    }

    /// PDDL writes `(hasorientation ?o ?j)`; internally the joint comes first.
    /// The permutation is its own inverse.
    pub fn pddl_permutation<T>(self, mut args: Vec<T>) -> Vec<T> {
        if self == Predicate::HasOrientation && args.len() == 2 {
            args.swap(0, 1);
        }
        args
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundPredicate {
    pub name: Predicate,
    pub args: Vec<Symbol>,
}

impl GroundPredicate {
    /// Builds an atom in canonical argument order; panics on arity mismatch,
    /// which is always a programming error.
    pub fn new(name: Predicate, args: Vec<Symbol>) -> Self {
        assert_eq!(args.len(), name.arity(), "arity mismatch for {name}");
        GroundPredicate { name, args }
    }

    pub fn connected(joint: usize, link: usize) -> Self {
        Self::new(
            Predicate::Connected,
            vec![Symbol::joint(joint), Symbol::link(link)],
        )
    }

    pub fn has_orientation(joint: usize, angle: Angle) -> Self {
        Self::new(
            Predicate::HasOrientation,
            vec![Symbol::joint(joint), Symbol::orientation(angle)],
        )
    }

    pub fn orientation_ord(lower: Angle, upper: Angle) -> Self {
        Self::new(
            Predicate::OrientationOrd,
            vec![Symbol::orientation(lower), Symbol::orientation(upper)],
        )
    }

    /// `Affected(affected, link, pivot)`: turning `link` about `pivot` also
    /// changes the orientation stored at `affected`.
    pub fn affected(affected: usize, link: usize, pivot: usize) -> Self {
        Self::new(
            Predicate::Affected,
            vec![
                Symbol::joint(affected),
                Symbol::link(link),
                Symbol::joint(pivot),
            ],
        )
    }

    pub fn proximal(joint: usize, link: usize) -> Self {
        Self::new(
            Predicate::Proximal,
            vec![Symbol::joint(joint), Symbol::link(link)],
        )
    }

    /// Arguments in PDDL order.
    pub fn pddl_args(&self) -> Vec<&Symbol> {
        self.name.pddl_permutation(self.args.iter().collect())
    }

    pub fn to_pddl(&self) -> String {
        let mut s = format!("({}", self.name.pddl_name());
        for a in self.pddl_args() {
            s.push(' ');
            s.push_str(a.as_str());
        }
        s.push(')');
        s
    }

    /// `true` for facts that no generated action ever changes.
    pub fn is_static(&self) -> bool {
        self.name != Predicate::HasOrientation
    }
}

impl fmt::Display for GroundPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// A set of ground facts. Serializes as a sorted list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub BTreeSet<GroundPredicate>);

impl State {
    pub fn new() -> Self {
        State::default()
    }

    pub fn contains(&self, fact: &GroundPredicate) -> bool {
        self.0.contains(fact)
    }

    pub fn insert(&mut self, fact: GroundPredicate) -> bool {
        self.0.insert(fact)
    }

    pub fn remove(&mut self, fact: &GroundPredicate) -> bool {
        self.0.remove(fact)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundPredicate> {
        self.0.iter()
    }

    pub fn is_superset(&self, facts: &BTreeSet<GroundPredicate>) -> bool {
        facts.is_subset(&self.0)
    }

    /// Facts with the given predicate.
    pub fn facts_of(&self, name: Predicate) -> impl Iterator<Item = &GroundPredicate> {
        self.0.iter().filter(move |f| f.name == name)
    }

    pub fn static_part(&self) -> State {
        State(self.0.iter().filter(|f| f.is_static()).cloned().collect())
    }
}

impl FromIterator<GroundPredicate> for State {
    fn from_iter<I: IntoIterator<Item = GroundPredicate>>(iter: I) -> Self {
        State(iter.into_iter().collect())
    }
}

impl Extend<GroundPredicate> for State {
    fn extend<I: IntoIterator<Item = GroundPredicate>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

/// `true` iff every fact of `expected` holds in `current`.
pub fn subsumes(current: &State, expected: &State) -> bool {
    expected.0.is_subset(&current.0)
}

pub fn goal_satisfied(state: &State, goal: &State) -> bool {
    subsumes(state, goal)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Const(Symbol),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// Predicate template in canonical argument order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: Predicate,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: Predicate, args: Vec<Term>) -> Self {
        Atom { predicate, args }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Eq(Term, Term),
    NotEq(Term, Term),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypedVar {
    pub name: String,
    pub ty: String,
}

impl TypedVar {
    pub fn new(name: &str, ty: &str) -> Self {
        TypedVar {
            name: name.to_ascii_lowercase(),
            ty: ty.to_ascii_lowercase(),
        }
    }
}

/// `forall (vars) (when (cond) (effects))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalEffect {
    pub forall: Vec<TypedVar>,
    pub when: Vec<Literal>,
    pub eff_neg: Vec<Atom>,
    pub eff_pos: Vec<Atom>,
}

/// Lifted action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedVar>,
    pub pre: Vec<Literal>,
    pub eff_neg: Vec<Atom>,
    pub eff_pos: Vec<Atom>,
    pub conditional: Vec<ConditionalEffect>,
}

/// One ground instance of a conditional effect.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundBranch {
    pub when_pos: BTreeSet<GroundPredicate>,
    pub when_neg: BTreeSet<GroundPredicate>,
    pub eff_neg: BTreeSet<GroundPredicate>,
    pub eff_pos: BTreeSet<GroundPredicate>,
}

impl GroundBranch {
    pub fn fires_in(&self, state: &State) -> bool {
        state.is_superset(&self.when_pos) && self.when_neg.iter().all(|f| !state.contains(f))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<Symbol>,
    pub pre: BTreeSet<GroundPredicate>,
    pub pre_neg: BTreeSet<GroundPredicate>,
    pub eff_neg: BTreeSet<GroundPredicate>,
    pub eff_pos: BTreeSet<GroundPredicate>,
    pub conditional: Vec<GroundBranch>,
}

impl GroundAction {
    /// An action without preconditions or effects.
    pub fn noop(name: &str) -> Self {
        GroundAction {
            name: name.to_ascii_lowercase(),
            args: Vec::new(),
            pre: BTreeSet::new(),
            pre_neg: BTreeSet::new(),
            eff_neg: BTreeSet::new(),
            eff_pos: BTreeSet::new(),
            conditional: Vec::new(),
        }
    }

    /// Plan-file form, e.g. `(rotateclockwise l0 l1 j1 o0 o90)`.
    pub fn signature(&self) -> String {
        let mut s = format!("({}", self.name);
        for a in &self.args {
            s.push(' ');
            s.push_str(a.as_str());
        }
        s.push(')');
        s
    }

    /// Facts among the preconditions that `state` fails.
    pub fn unmet(&self, state: &State) -> (Vec<GroundPredicate>, Vec<GroundPredicate>) {
        let missing = self
            .pre
            .iter()
            .filter(|f| !state.contains(f))
            .cloned()
            .collect();
        let forbidden = self
            .pre_neg
            .iter()
            .filter(|f| state.contains(f))
            .cloned()
            .collect();
        (missing, forbidden)
    }

    pub fn applicable(&self, state: &State) -> bool {
        state.is_superset(&self.pre) && self.pre_neg.iter().all(|f| !state.contains(f))
    }

    /// First joint argument; the joint this action operates on.
    pub fn joint(&self) -> Option<usize> {
        self.args.iter().find_map(Symbol::as_joint)
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.signature())
    }
}

/// Applies `action` to `state`.
///
/// The result is `(state \ (effNeg ∪ C⁻)) ∪ (effPos ∪ C⁺)` where `C±` collect
/// the effects of every branch whose condition holds in `state`.
pub fn transition(state: &State, action: &GroundAction) -> Result<State, KbError> {
    let (unmet, forbidden) = action.unmet(state);
    if !unmet.is_empty() || !forbidden.is_empty() {
        return Err(KbError::PreconditionViolated { unmet, forbidden });
    }
    let firing: Vec<&GroundBranch> = action
        .conditional
        .iter()
        .filter(|b| b.fires_in(state))
        .collect();
    let mut next = state.clone();
    for fact in action
        .eff_neg
        .iter()
        .chain(firing.iter().flat_map(|b| &b.eff_neg))
    {
        next.remove(fact);
    }
    for fact in action
        .eff_pos
        .iter()
        .chain(firing.iter().flat_map(|b| &b.eff_pos))
    {
        next.insert(fact.clone());
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub init: State,
    pub goal: State,
}

impl ProblemRecord {
    pub fn new(init: State, goal: State) -> Result<Self, KbError> {
        if let Some(bad) = goal.iter().find(|f| f.name != Predicate::HasOrientation) {
            return Err(KbError::InvalidGoal(bad.clone()));
        }
        Ok(ProblemRecord { init, goal })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PlanRecord {
    #[serde(serialize_with = "serialize_signatures")]
    pub actions: Vec<GroundAction>,
}

fn serialize_signatures<S: Serializer>(actions: &[GroundAction], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(actions.iter().map(GroundAction::signature))
}

impl PlanRecord {
    pub fn new(actions: Vec<GroundAction>) -> Self {
        PlanRecord { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// One action per line, the format external planners and the validator
    /// exchange.
    pub fn to_plan_text(&self) -> String {
        let mut out = String::new();
        for a in &self.actions {
            out.push_str(&a.signature());
            out.push('\n');
        }
        out
    }

    /// Fraction of consecutive action pairs operating on the same joint;
    /// `None` for plans shorter than two actions.
    pub fn clustering_index(&self) -> Option<f64> {
        if self.actions.len() < 2 {
            return None;
        }
        let same = self
            .actions
            .windows(2)
            .filter(|w| w[0].joint().is_some() && w[0].joint() == w[1].joint())
            .count();
        Some(same as f64 / (self.actions.len() - 1) as f64)
    }
}

/// States `s_1 = init, ..., s_{N+1}` traversed by `plan`. Step indices in
/// errors are 0-based.
pub fn expected_trajectory(plan: &PlanRecord, init: &State) -> Result<Vec<State>, KbError> {
    let mut states = Vec::with_capacity(plan.len() + 1);
    states.push(init.clone());
    for (step, action) in plan.actions.iter().enumerate() {
        let next = transition(states.last().expect("non-empty"), action).map_err(|e| {
            KbError::StepFailed {
                step,
                source: Box::new(e),
            }
        })?;
        states.push(next);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fact(j: usize, deg: i64) -> GroundPredicate {
        GroundPredicate::has_orientation(j, Angle::new(deg))
    }

    fn rotate_rel(joint: usize, from: i64, to: i64) -> GroundAction {
        let (from, to) = (Angle::new(from), Angle::new(to));
        GroundAction {
            name: "rotateclockwise".into(),
            args: vec![
                Symbol::link(joint),
                Symbol::link(joint + 1),
                Symbol::joint(joint),
                Symbol::orientation(from),
                Symbol::orientation(to),
            ],
            pre: [
                GroundPredicate::connected(joint, joint),
                GroundPredicate::connected(joint, joint + 1),
                GroundPredicate::has_orientation(joint, from),
                GroundPredicate::orientation_ord(from, to),
            ]
            .into(),
            pre_neg: BTreeSet::new(),
            eff_neg: [GroundPredicate::has_orientation(joint, from)].into(),
            eff_pos: [GroundPredicate::has_orientation(joint, to)].into(),
            conditional: vec![],
        }
    }

    fn chain_state(orients: &[i64]) -> State {
        let mut s = State::new();
        for (j, &o) in orients.iter().enumerate() {
            s.insert(GroundPredicate::connected(j, j));
            s.insert(GroundPredicate::connected(j, j + 1));
            s.insert(fact(j, o));
        }
        s.insert(GroundPredicate::orientation_ord(
            Angle::new(30),
            Angle::new(45),
        ));
        s
    }

    #[test]
    fn subsumes_examples() {
        let (p, q, r) = (fact(0, 0), fact(1, 0), fact(2, 0));
        let pqr: State = [p.clone(), q.clone(), r].into_iter().collect();
        let pq: State = [p.clone(), q].into_iter().collect();
        let just_p: State = [p].into_iter().collect();
        assert!(subsumes(&pqr, &pq));
        assert!(!subsumes(&just_p, &pq));
        assert!(subsumes(&pqr, &pqr));
    }

    #[test]
    fn goal_satisfied_examples() {
        let s = chain_state(&[30, 45]);
        assert!(goal_satisfied(&s, &[fact(0, 30)].into_iter().collect()));
        assert!(goal_satisfied(&s, &State::new()));
        assert!(!goal_satisfied(
            &s,
            &[fact(0, 30), fact(1, 30)].into_iter().collect()
        ));
    }

    #[test]
    fn relative_rotate_from_30_to_45() {
        let s = chain_state(&[30]);
        let next = transition(&s, &rotate_rel(0, 30, 45)).unwrap();
        assert!(next.contains(&fact(0, 45)));
        assert!(!next.contains(&fact(0, 30)));
        assert_eq!(next.len(), s.len());
    }

    #[test]
    fn empty_effects_are_identity() {
        let s = chain_state(&[30, 30]);
        assert_eq!(transition(&s, &GroundAction::noop("wait")).unwrap(), s);
    }

    #[test]
    fn precondition_violation_lists_unmet_facts() {
        let s = chain_state(&[45]);
        match transition(&s, &rotate_rel(0, 30, 45)) {
            Err(KbError::PreconditionViolated { unmet, forbidden }) => {
                assert_eq!(unmet, vec![fact(0, 30)]);
                assert!(forbidden.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conditional_branches_see_the_original_state() {
        // Branch A fires on X and deletes Y; branch B requires Y and must still
        // fire because conditions are read before any effect applies.
        let (x, y, z) = (fact(0, 0), fact(1, 0), fact(2, 0));
        let mut act = GroundAction::noop("chain");
        act.conditional = vec![
            GroundBranch {
                when_pos: [x.clone()].into(),
                when_neg: BTreeSet::new(),
                eff_neg: [y.clone()].into(),
                eff_pos: BTreeSet::new(),
            },
            GroundBranch {
                when_pos: [y.clone()].into(),
                when_neg: BTreeSet::new(),
                eff_neg: BTreeSet::new(),
                eff_pos: [z.clone()].into(),
            },
        ];
        let s: State = [x.clone(), y].into_iter().collect();
        let next = transition(&s, &act).unwrap();
        assert_eq!(next, [x, z].into_iter().collect());
    }

    #[test]
    fn trajectory_examples() {
        let s = chain_state(&[30, 30]);
        assert_eq!(
            expected_trajectory(&PlanRecord::default(), &s).unwrap(),
            vec![s.clone()]
        );

        let plan = PlanRecord::new(vec![rotate_rel(0, 30, 45), rotate_rel(1, 30, 45)]);
        let traj = expected_trajectory(&plan, &s).unwrap();
        assert_eq!(traj.len(), 3);
        assert!(goal_satisfied(
            &traj[2],
            &[fact(0, 45), fact(1, 45)].into_iter().collect()
        ));

        let broken = PlanRecord::new(vec![
            rotate_rel(0, 30, 45),
            rotate_rel(1, 30, 45),
            rotate_rel(0, 30, 45),
        ]);
        match expected_trajectory(&broken, &s) {
            Err(KbError::StepFailed { step, .. }) => assert_eq!(step, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn symbols_round_trip() {
        assert_eq!(Symbol::joint(0).as_str(), "j1");
        assert_eq!(Symbol::joint(3).as_joint(), Some(3));
        assert_eq!(Symbol::new("J0").as_joint(), None);
        assert_eq!(Symbol::link(0).as_link(), Some(0));
        assert_eq!(
            Symbol::orientation(Angle::new(45)).as_orientation(),
            Some(Angle::new(45))
        );
        assert_eq!(Symbol::new("o360").as_orientation(), None);
        assert_eq!(Symbol::new("ox").as_orientation(), None);
    }

    #[test]
    fn pddl_form_swaps_has_orientation() {
        assert_eq!(fact(0, 45).to_pddl(), "(hasorientation o45 j1)");
        assert_eq!(
            GroundPredicate::affected(1, 0, 0).to_pddl(),
            "(affected j2 l0 j1)"
        );
    }

    #[test]
    fn clustering_index_counts_same_joint_pairs() {
        let plan = PlanRecord::new(vec![
            rotate_rel(0, 30, 45),
            rotate_rel(0, 30, 45),
            rotate_rel(1, 30, 45),
        ]);
        assert_eq!(plan.clustering_index(), Some(0.5));
        assert_eq!(
            PlanRecord::new(vec![rotate_rel(0, 30, 45)]).clustering_index(),
            None
        );
    }

    #[test]
    fn problem_goal_must_be_orientations() {
        let init = chain_state(&[30]);
        assert!(ProblemRecord::new(init.clone(), [fact(0, 45)].into_iter().collect()).is_ok());
        assert!(matches!(
            ProblemRecord::new(
                init,
                [GroundPredicate::connected(0, 0)].into_iter().collect()
            ),
            Err(KbError::InvalidGoal(_))
        ));
    }

    #[test]
    fn state_json_is_sorted() {
        let s: State = [fact(1, 0), fact(0, 90)].into_iter().collect();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"[{"name":"HasOrientation","args":["j1","o90"]},{"name":"HasOrientation","args":["j2","o0"]}]"#
        );
        let back: State = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
