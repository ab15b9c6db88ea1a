use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GroundPredicate, KbError, Predicate, State};
use crate::object_model::{check_on_grid, Angle, ObjectSpec, OrientationGrid};

/// How `HasOrientation` values are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// Every orientation in one external frame; rotations propagate to
    /// downstream joints through conditional effects.
    Absolute,
    /// Each orientation relative to the upstream link; rotations touch one
    /// value.
    Relative,
}

impl Formulation {
    pub const BOTH: [Formulation; 2] = [Formulation::Relative, Formulation::Absolute];

    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::Absolute => "absolute",
            Formulation::Relative => "relative",
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "absolute" | "abs" => Ok(Formulation::Absolute),
            "relative" | "rel" => Ok(Formulation::Relative),
            other => Err(format!("unknown formulation '{other}'")),
        }
    }
}

/// Facts that no rotation changes: chain topology, grid ordering and, for the
/// absolute formulation, the propagation table.
pub fn static_facts(joint_count: usize, grid: &OrientationGrid, formulation: Formulation) -> State {
    let mut s = State::new();
    for j in 0..joint_count {
        s.insert(GroundPredicate::connected(j, j));
        s.insert(GroundPredicate::connected(j, j + 1));
    }
    for (lower, upper) in grid.successor_pairs() {
        s.insert(GroundPredicate::orientation_ord(lower, upper));
    }
    if formulation == Formulation::Absolute {
        // Holding the upstream link while turning link k+1 about joint k moves
        // every joint m > k with it.
        for pivot in 0..joint_count {
            s.insert(GroundPredicate::proximal(pivot, pivot + 1));
            for m in pivot + 1..joint_count {
                s.insert(GroundPredicate::affected(m, pivot + 1, pivot));
            }
        }
    }
    s
}

/// Full planning state for a chain whose joints carry `orientations`
/// (absolute or relative values, per `formulation`).
pub fn encode_state(
    orientations: &[Angle],
    spec: &ObjectSpec,
    grid: &OrientationGrid,
    formulation: Formulation,
) -> Result<State, KbError> {
    if orientations.len() != spec.joint_count() {
        return Err(crate::object_model::ModelError::LengthMismatch {
            expected: spec.joint_count(),
            found: orientations.len(),
        }
        .into());
    }
    check_on_grid(orientations, grid)?;
    let mut s = static_facts(spec.joint_count(), grid, formulation);
    s.extend(goal_state(orientations).0);
    Ok(s)
}

/// One `HasOrientation` per joint.
pub fn goal_state(orientations: &[Angle]) -> State {
    orientations
        .iter()
        .enumerate()
        .map(|(j, &a)| GroundPredicate::has_orientation(j, a))
        .collect()
}

/// Reads back the per-joint orientations; every joint must carry exactly one
/// `HasOrientation` fact.
pub fn decode_orientations(state: &State, joint_count: usize) -> Result<Vec<Angle>, KbError> {
    let mut out: Vec<Option<Angle>> = vec![None; joint_count];
    for f in state.facts_of(Predicate::HasOrientation) {
        let joint = f.args[0]
            .as_joint()
            .filter(|&j| j < joint_count)
            .ok_or_else(|| KbError::Decode(format!("unexpected joint in {f}")))?;
        let angle = f.args[1]
            .as_orientation()
            .ok_or_else(|| KbError::Decode(format!("unexpected orientation in {f}")))?;
        if out[joint].replace(angle).is_some() {
            return Err(KbError::Decode(format!(
                "joint {} has more than one orientation",
                joint + 1
            )));
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(j, a)| {
            a.ok_or_else(|| KbError::Decode(format!("joint {} has no orientation", j + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object_model::{rotate_holding_upstream, AbsConfig};

    fn angles(d: &[i64]) -> Vec<Angle> {
        d.iter().map(|&x| Angle::new(x)).collect()
    }

    #[test]
    fn encodes_example_chain() {
        let grid = OrientationGrid::from_granularity(15, false).unwrap();
        let spec = ObjectSpec::uniform(4, 15.5);
        let s = encode_state(
            &angles(&[45, 330, 30, 315]),
            &spec,
            &grid,
            Formulation::Absolute,
        )
        .unwrap();
        for (j, d) in [45, 330, 30, 315].into_iter().enumerate() {
            assert!(s.contains(&GroundPredicate::has_orientation(j, Angle::new(d))));
        }
        assert_eq!(s.facts_of(Predicate::HasOrientation).count(), 4);
        assert_eq!(
            decode_orientations(&s, 4).unwrap(),
            angles(&[45, 330, 30, 315])
        );
    }

    #[test]
    fn two_value_grid_has_one_ordering_fact() {
        let grid = OrientationGrid::new(angles(&[30, 45]), false).unwrap();
        let spec = ObjectSpec::uniform(2, 1.0);
        let s = encode_state(&angles(&[30, 45]), &spec, &grid, Formulation::Relative).unwrap();
        let ords: Vec<_> = s.facts_of(Predicate::OrientationOrd).cloned().collect();
        assert_eq!(
            ords,
            vec![GroundPredicate::orientation_ord(
                Angle::new(30),
                Angle::new(45)
            )]
        );
    }

    #[test]
    fn affected_facts_match_brute_force_propagation() {
        let grid = OrientationGrid::from_granularity(90, true).unwrap();
        for n in 1..=5 {
            // Oracle: rotate each joint of an all-zero chain and record which
            // other joints move.
            let zero = AbsConfig(vec![Angle::ZERO; n]);
            let mut expected = State::new();
            for pivot in 0..n {
                let moved = rotate_holding_upstream(&zero, pivot, 1, &grid).unwrap();
                for m in (0..n).filter(|&m| m != pivot && moved.0[m] != zero.0[m]) {
                    expected.insert(GroundPredicate::affected(m, pivot + 1, pivot));
                }
            }
            let s = static_facts(n, &grid, Formulation::Absolute);
            let actual: State = s.facts_of(Predicate::Affected).cloned().collect();
            assert_eq!(actual, expected, "chain of {n}");
        }
        let two = static_facts(2, &grid, Formulation::Absolute);
        let affected: Vec<String> = two
            .facts_of(Predicate::Affected)
            .map(|f| f.to_string())
            .collect();
        assert_eq!(affected, vec!["Affected(j2,l1,j1)"]);
        assert!(static_facts(3, &grid, Formulation::Relative)
            .facts_of(Predicate::Affected)
            .next()
            .is_none());
    }

    #[test]
    fn off_grid_is_rejected() {
        let grid = OrientationGrid::from_granularity(90, false).unwrap();
        let spec = ObjectSpec::uniform(2, 1.0);
        assert!(matches!(
            encode_state(&angles(&[0, 45]), &spec, &grid, Formulation::Absolute),
            Err(KbError::Model(_))
        ));
    }

    #[test]
    fn decode_rejects_duplicates_and_gaps() {
        let mut s = goal_state(&angles(&[0, 90]));
        assert!(decode_orientations(&s, 3).is_err());
        s.insert(GroundPredicate::has_orientation(0, Angle::new(90)));
        assert!(decode_orientations(&s, 2).is_err());
    }

    #[test]
    fn wrap_adds_closing_pair() {
        let grid = OrientationGrid::from_granularity(90, true).unwrap();
        let s = static_facts(1, &grid, Formulation::Relative);
        assert!(s.contains(&GroundPredicate::orientation_ord(
            Angle::new(270),
            Angle::new(0)
        )));
        assert_eq!(s.facts_of(Predicate::OrientationOrd).count(), 4);
    }
}
