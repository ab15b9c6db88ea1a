//! Planar articulated chains: discretized orientations, absolute and relative
//! configurations, rotation propagation and forward kinematics.
//!
//! Joint `i` (0-based) is the proximal joint of link `i + 1`; it connects link
//! `i` to link `i + 1`, with link 0 a virtual base link. A chain with `n` real
//! links therefore has `n` joints, and every configuration stores one
//! orientation per joint.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("rotating joint {joint} by {steps} step(s) leaves the non-wrapping grid at joint {offending}")]
    StepOffGrid {
        joint: usize,
        steps: i32,
        offending: usize,
    },
    #[error("orientation {angle} at joint {joint} is not on the orientation grid")]
    OffGridOrientation { joint: usize, angle: Angle },
    #[error("joint index {index} out of range for a chain with {count} joint(s)")]
    InvalidJoint { index: usize, count: usize },
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid orientation grid: {0}")]
    InvalidGrid(String),
    #[error("invalid object spec: {0}")]
    InvalidSpec(String),
}

/// Whole degrees, always normalized into `[0, 360)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Angle(u16);

impl Angle {
    pub const ZERO: Angle = Angle(0);

    pub fn new(degrees: i64) -> Self {
        Angle(degrees.rem_euclid(360) as u16)
    }

    pub fn degrees(self) -> u16 {
        self.0
    }

    pub fn radians(self) -> f64 {
        f64::from(self.0).to_radians()
    }

    /// Shortest distance around the circle, in degrees.
    pub fn circular_distance(self, other: Angle) -> u16 {
        let d = (i32::from(self.0) - i32::from(other.0)).rem_euclid(360) as u16;
        d.min(360 - d)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle::new(i64::from(self.0) + i64::from(rhs.0))
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle::new(i64::from(self.0) - i64::from(rhs.0))
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle::new(-i64::from(self.0))
    }
}

/// Normalizes a continuous angle into `[0, 360)`.
pub fn normalize_degrees(degrees: f64) -> f64 {
    let d = degrees.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

fn circular_distance_f64(a: f64, b: f64) -> f64 {
    let d = normalize_degrees(a - b);
    d.min(360.0 - d)
}

/// The ordered set of orientations a joint may take.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct OrientationGrid {
    values: Vec<Angle>,
    wrap: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct GridRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    granularity_deg: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<Angle>>,
    #[serde(default)]
    wrap: bool,
}

impl TryFrom<GridRepr> for OrientationGrid {
    type Error = ModelError;

    fn try_from(repr: GridRepr) -> Result<Self, ModelError> {
        match (repr.granularity_deg, repr.values) {
            (Some(g), None) => OrientationGrid::from_granularity(g, repr.wrap),
            (None, Some(values)) => OrientationGrid::new(values, repr.wrap),
            (Some(g), Some(values)) => {
                let grid = OrientationGrid::from_granularity(g, repr.wrap)?;
                if grid.values != values {
                    return Err(ModelError::InvalidGrid(
                        "granularityDeg and values disagree".into(),
                    ));
                }
                Ok(grid)
            }
            (None, None) => Err(ModelError::InvalidGrid(
                "either granularityDeg or values is required".into(),
            )),
        }
    }
}

impl From<OrientationGrid> for GridRepr {
    fn from(grid: OrientationGrid) -> Self {
        GridRepr {
            granularity_deg: grid.granularity(),
            values: if grid.granularity().is_some() {
                None
            } else {
                Some(grid.values)
            },
            wrap: grid.wrap,
        }
    }
}

impl OrientationGrid {
    pub fn new(values: Vec<Angle>, wrap: bool) -> Result<Self, ModelError> {
        if values.len() < 2 {
            return Err(ModelError::InvalidGrid(
                "at least two orientations are required".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::InvalidGrid(
                "orientations must be strictly ascending".into(),
            ));
        }
        Ok(OrientationGrid { values, wrap })
    }

    /// `{0, g, 2g, ...}`; `g` must divide 360 and leave at least two values.
    pub fn from_granularity(granularity: u16, wrap: bool) -> Result<Self, ModelError> {
        if granularity == 0 || granularity >= 360 || 360 % granularity != 0 {
            return Err(ModelError::InvalidGrid(format!(
                "granularity {granularity} must be a proper divisor of 360"
            )));
        }
        let values = (0..360 / granularity)
            .map(|k| Angle::new(i64::from(k * granularity)))
            .collect();
        OrientationGrid::new(values, wrap)
    }

    pub fn with_count(count: u16, wrap: bool) -> Result<Self, ModelError> {
        if count < 2 || 360 % count != 0 {
            return Err(ModelError::InvalidGrid(format!(
                "{count} orientations do not evenly divide the circle"
            )));
        }
        OrientationGrid::from_granularity(360 / count, wrap)
    }

    pub fn values(&self) -> &[Angle] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn wrap(&self) -> bool {
        self.wrap
    }

    /// Spacing when the grid is a full uniform ring starting at 0.
    pub fn granularity(&self) -> Option<u16> {
        let g = self.values[1].degrees() - self.values[0].degrees();
        let uniform = self.values[0] == Angle::ZERO
            && 360 % g == 0
            && usize::from(360 / g) == self.values.len()
            && self
                .values
                .iter()
                .enumerate()
                .all(|(k, v)| usize::from(v.degrees()) == k * usize::from(g));
        uniform.then_some(g)
    }

    pub fn contains(&self, angle: Angle) -> bool {
        self.values.binary_search(&angle).is_ok()
    }

    pub fn index_of(&self, angle: Angle) -> Option<usize> {
        self.values.binary_search(&angle).ok()
    }

    /// Moves `angle` by `steps` grid positions; `None` when a non-wrapping
    /// grid would be exceeded or `angle` is off-grid.
    pub fn step(&self, angle: Angle, steps: i32) -> Option<Angle> {
        let idx = self.index_of(angle)? as i64;
        let len = self.values.len() as i64;
        let target = idx + i64::from(steps);
        let target = if self.wrap {
            target.rem_euclid(len)
        } else if (0..len).contains(&target) {
            target
        } else {
            return None;
        };
        Some(self.values[target as usize])
    }

    /// Ordered adjacent pairs `(lower, upper)`, plus `(max, min)` on wrapping
    /// grids.
    pub fn successor_pairs(&self) -> Vec<(Angle, Angle)> {
        let mut pairs: Vec<_> = self.values.windows(2).map(|w| (w[0], w[1])).collect();
        if self.wrap {
            pairs.push((self.values[self.values.len() - 1], self.values[0]));
        }
        pairs
    }

    /// Nearest grid value by circular distance; ties go to the lower value.
    pub fn quantize(&self, angle: Angle) -> Angle {
        self.quantize_degrees(f64::from(angle.degrees()))
    }

    pub fn quantize_degrees(&self, degrees: f64) -> Angle {
        let d = normalize_degrees(degrees);
        let mut best = self.values[0];
        let mut best_dist = circular_distance_f64(d, f64::from(best.degrees()));
        for &v in &self.values[1..] {
            let dist = circular_distance_f64(d, f64::from(v.degrees()));
            if dist < best_dist {
                best = v;
                best_dist = dist;
            }
        }
        best
    }
}

/// Geometric description of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectSpec {
    pub link_count: usize,
    pub link_lengths: Vec<f64>,
    #[serde(default = "default_thickness")]
    pub link_thickness: f64,
}

fn default_thickness() -> f64 {
    3.0
}

impl ObjectSpec {
    pub fn new(link_lengths: Vec<f64>, link_thickness: f64) -> Result<Self, ModelError> {
        let spec = ObjectSpec {
            link_count: link_lengths.len(),
            link_lengths,
            link_thickness,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(link_count: usize, length: f64) -> Self {
        ObjectSpec {
            link_count,
            link_lengths: vec![length; link_count],
            link_thickness: default_thickness(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.link_count == 0 {
            return Err(ModelError::InvalidSpec(
                "at least one link is required".into(),
            ));
        }
        if self.link_lengths.len() != self.link_count {
            return Err(ModelError::LengthMismatch {
                expected: self.link_count,
                found: self.link_lengths.len(),
            });
        }
        if self
            .link_lengths
            .iter()
            .any(|l| !(l.is_finite() && *l > 0.0))
        {
            return Err(ModelError::InvalidSpec(
                "link lengths must be positive".into(),
            ));
        }
        if !(self.link_thickness.is_finite() && self.link_thickness > 0.0) {
            return Err(ModelError::InvalidSpec(
                "link thickness must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn joint_count(&self) -> usize {
        self.link_count
    }
}

/// The object-spec file shared by the CLI, the benchmark harness and the
/// simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectSpecFile {
    pub link_count: usize,
    pub link_lengths: Vec<f64>,
    pub granularity_deg: u16,
    #[serde(default)]
    pub wrap: bool,
    #[serde(default = "default_thickness")]
    pub link_thickness: f64,
}

impl ObjectSpecFile {
    pub fn resolve(&self) -> Result<(ObjectSpec, OrientationGrid), ModelError> {
        let spec = ObjectSpec {
            link_count: self.link_count,
            link_lengths: self.link_lengths.clone(),
            link_thickness: self.link_thickness,
        };
        spec.validate()?;
        let grid = OrientationGrid::from_granularity(self.granularity_deg, self.wrap)?;
        Ok((spec, grid))
    }
}

/// Per-joint orientations in one external frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AbsConfig(pub Vec<Angle>);

/// Orientation of the virtual base link plus per-joint orientations relative
/// to the upstream link.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelConfig {
    #[serde(rename = "thetaVirtual")]
    pub virtual_link: Angle,
    #[serde(rename = "thetaRel")]
    pub relative: Vec<Angle>,
}

impl AbsConfig {
    pub fn from_degrees(degrees: &[i64]) -> Self {
        AbsConfig(degrees.iter().map(|&d| Angle::new(d)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_on_grid(&self, grid: &OrientationGrid) -> Result<(), ModelError> {
        check_on_grid(&self.0, grid)
    }
}

impl RelConfig {
    pub fn from_degrees(virtual_link: i64, relative: &[i64]) -> Self {
        RelConfig {
            virtual_link: Angle::new(virtual_link),
            relative: relative.iter().map(|&d| Angle::new(d)).collect(),
        }
    }
}

pub(crate) fn check_on_grid(values: &[Angle], grid: &OrientationGrid) -> Result<(), ModelError> {
    match values.iter().position(|a| !grid.contains(*a)) {
        Some(joint) => Err(ModelError::OffGridOrientation {
            joint,
            angle: values[joint],
        }),
        None => Ok(()),
    }
}

/// Signed modular difference between consecutive absolute orientations.
pub fn abs_to_rel(config: &AbsConfig, base: Angle) -> RelConfig {
    let mut upstream = base;
    let relative = config
        .0
        .iter()
        .map(|&a| {
            let r = a - upstream;
            upstream = a;
            r
        })
        .collect();
    RelConfig {
        virtual_link: base,
        relative,
    }
}

pub fn rel_to_abs(config: &RelConfig) -> AbsConfig {
    let mut acc = config.virtual_link;
    AbsConfig(
        config
            .relative
            .iter()
            .map(|&r| {
                acc = acc + r;
                acc
            })
            .collect(),
    )
}

/// Which side of the operated joint stays still during a rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hold {
    /// The upstream link is held; the joint and everything downstream turn.
    Upstream,
    /// The downstream link is held; the joint and everything upstream turn.
    Downstream,
}

impl Hold {
    /// Joint indices whose absolute orientation changes when `joint` turns.
    pub fn affected(self, joint: usize, joint_count: usize) -> std::ops::Range<usize> {
        match self {
            Hold::Upstream => joint..joint_count,
            Hold::Downstream => 0..joint + 1,
        }
    }
}

fn rotate(
    config: &AbsConfig,
    joint: usize,
    steps: i32,
    grid: &OrientationGrid,
    hold: Hold,
) -> Result<AbsConfig, ModelError> {
    if joint >= config.len() {
        return Err(ModelError::InvalidJoint {
            index: joint,
            count: config.len(),
        });
    }
    if steps == 0 {
        return Ok(config.clone());
    }
    let mut out = config.clone();
    for m in hold.affected(joint, config.len()) {
        let current = config.0[m];
        if !grid.contains(current) {
            return Err(ModelError::OffGridOrientation {
                joint: m,
                angle: current,
            });
        }
        out.0[m] = grid.step(current, steps).ok_or(ModelError::StepOffGrid {
            joint,
            steps,
            offending: m,
        })?;
    }
    Ok(out)
}

/// Turns `joint` by `steps` grid positions while the upstream link is held:
/// the joint and every downstream joint advance.
pub fn rotate_holding_upstream(
    config: &AbsConfig,
    joint: usize,
    steps: i32,
    grid: &OrientationGrid,
) -> Result<AbsConfig, ModelError> {
    rotate(config, joint, steps, grid, Hold::Upstream)
}

/// Mirror of [`rotate_holding_upstream`]: the joint and every upstream joint
/// advance.
pub fn rotate_holding_downstream(
    config: &AbsConfig,
    joint: usize,
    steps: i32,
    grid: &OrientationGrid,
) -> Result<AbsConfig, ModelError> {
    rotate(config, joint, steps, grid, Hold::Downstream)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: Angle,
}

impl Pose2D {
    pub fn origin() -> Self {
        Pose2D {
            x: 0.0,
            y: 0.0,
            heading: Angle::ZERO,
        }
    }
}

/// Exact on the axes so that axis-aligned chains land on integer coordinates.
fn unit_vector(angle: Angle) -> (f64, f64) {
    match angle.degrees() {
        0 => (1.0, 0.0),
        90 => (0.0, 1.0),
        180 => (-1.0, 0.0),
        270 => (0.0, -1.0),
        _ => {
            let r = angle.radians();
            (r.cos(), r.sin())
        }
    }
}

/// Joint positions followed by the chain endpoint. Headings are the absolute
/// link orientations; the endpoint repeats the last link's heading. Only the
/// position of `base` is used.
pub fn forward_kinematics(
    config: &AbsConfig,
    spec: &ObjectSpec,
    base: Pose2D,
) -> Result<Vec<Pose2D>, ModelError> {
    if config.len() != spec.link_lengths.len() {
        return Err(ModelError::LengthMismatch {
            expected: spec.link_lengths.len(),
            found: config.len(),
        });
    }
    let mut poses = Vec::with_capacity(config.len() + 1);
    let (mut x, mut y) = (base.x, base.y);
    for (&heading, &length) in config.0.iter().zip(&spec.link_lengths) {
        poses.push(Pose2D { x, y, heading });
        let (dx, dy) = unit_vector(heading);
        x += length * dx;
        y += length * dy;
    }
    let heading = config.0.last().copied().unwrap_or(base.heading);
    poses.push(Pose2D { x, y, heading });
    Ok(poses)
}

/// Same as [`forward_kinematics`] for continuous (possibly off-grid) angles.
pub fn forward_kinematics_continuous(
    degrees: &[f64],
    spec: &ObjectSpec,
    base: Pose2D,
) -> Vec<(f64, f64)> {
    let mut points = Vec::with_capacity(degrees.len() + 1);
    let (mut x, mut y) = (base.x, base.y);
    points.push((x, y));
    for (&d, &length) in degrees.iter().zip(&spec.link_lengths) {
        let r = d.to_radians();
        x += length * r.cos();
        y += length * r.sin();
        points.push((x, y));
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring90(wrap: bool) -> OrientationGrid {
        OrientationGrid::from_granularity(90, wrap).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let g = ring90(false);
        assert_eq!(g.quantize(Angle::new(92)), Angle::new(90));
        assert_eq!(g.quantize(Angle::new(45)), Angle::new(0));
        assert_eq!(g.quantize(Angle::new(350)), Angle::new(0));
        // 315 is equidistant from 270 and 0; the lower value wins
        assert_eq!(g.quantize(Angle::new(315)), Angle::new(0));
        assert_eq!(g.quantize_degrees(-1.0), Angle::new(0));
        assert_eq!(g.quantize_degrees(268.0), Angle::new(270));
    }

    #[test]
    fn abs_to_rel_examples() {
        let rel = abs_to_rel(&AbsConfig::from_degrees(&[45, 330, 30, 315]), Angle::ZERO);
        assert_eq!(rel, RelConfig::from_degrees(0, &[45, 285, 60, 285]));
        let rel = abs_to_rel(&AbsConfig::from_degrees(&[0, 0, 0]), Angle::ZERO);
        assert_eq!(rel, RelConfig::from_degrees(0, &[0, 0, 0]));
        let rel = abs_to_rel(&AbsConfig::from_degrees(&[90, 90, 90]), Angle::new(90));
        assert_eq!(rel, RelConfig::from_degrees(90, &[0, 0, 0]));
    }

    #[test]
    fn rel_to_abs_examples() {
        assert_eq!(
            rel_to_abs(&RelConfig::from_degrees(0, &[45, 285, 60, 285])),
            AbsConfig::from_degrees(&[45, 330, 30, 315])
        );
        assert_eq!(
            rel_to_abs(&RelConfig::from_degrees(0, &[0, 0])),
            AbsConfig::from_degrees(&[0, 0])
        );
        assert_eq!(
            rel_to_abs(&RelConfig::from_degrees(180, &[180, 180])),
            AbsConfig::from_degrees(&[0, 180])
        );
    }

    #[test]
    fn rotate_upstream_examples() {
        let c = AbsConfig::from_degrees(&[0, 90, 180, 270]);
        assert_eq!(
            rotate_holding_upstream(&c, 1, 1, &ring90(true)).unwrap(),
            AbsConfig::from_degrees(&[0, 180, 270, 0])
        );
        let c = AbsConfig::from_degrees(&[45, 45]);
        assert_eq!(
            rotate_holding_upstream(&c, 0, 0, &ring90(false)).unwrap(),
            c
        );
        let c = AbsConfig::from_degrees(&[0, 270]);
        assert!(matches!(
            rotate_holding_upstream(&c, 1, 1, &ring90(false)),
            Err(ModelError::StepOffGrid { offending: 1, .. })
        ));
    }

    #[test]
    fn rotate_downstream_examples() {
        let g = ring90(true);
        assert_eq!(
            rotate_holding_downstream(&AbsConfig::from_degrees(&[0, 90, 180]), 1, 1, &g).unwrap(),
            AbsConfig::from_degrees(&[90, 180, 180])
        );
        assert_eq!(
            rotate_holding_downstream(&AbsConfig::from_degrees(&[0, 0]), 0, 1, &g).unwrap(),
            AbsConfig::from_degrees(&[90, 0])
        );
        assert_eq!(
            rotate_holding_downstream(&AbsConfig::from_degrees(&[90, 90]), 1, -1, &g).unwrap(),
            AbsConfig::from_degrees(&[0, 0])
        );
    }

    #[test]
    fn rotate_rejects_bad_joint_and_off_grid() {
        let g = ring90(true);
        let c = AbsConfig::from_degrees(&[0, 45]);
        assert!(matches!(
            rotate_holding_upstream(&c, 2, 1, &g),
            Err(ModelError::InvalidJoint { index: 2, count: 2 })
        ));
        assert!(matches!(
            rotate_holding_upstream(&c, 0, 1, &g),
            Err(ModelError::OffGridOrientation { joint: 1, .. })
        ));
    }

    #[test]
    fn fk_examples() {
        let spec = ObjectSpec::new(vec![15.5], 3.0).unwrap();
        let poses =
            forward_kinematics(&AbsConfig::from_degrees(&[0]), &spec, Pose2D::origin()).unwrap();
        assert_eq!((poses[1].x, poses[1].y), (15.5, 0.0));

        let spec = ObjectSpec::uniform(2, 1.0);
        let poses =
            forward_kinematics(&AbsConfig::from_degrees(&[90, 90]), &spec, Pose2D::origin())
                .unwrap();
        let pts: Vec<_> = poses.iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(pts, vec![(0.0, 0.0), (0.0, 1.0), (0.0, 2.0)]);

        let poses = forward_kinematics(&AbsConfig::from_degrees(&[0, 90]), &spec, Pose2D::origin())
            .unwrap();
        assert_eq!((poses[2].x, poses[2].y), (1.0, 1.0));
    }

    #[test]
    fn grid_construction() {
        assert!(OrientationGrid::from_granularity(7, false).is_err());
        assert!(OrientationGrid::from_granularity(360, false).is_err());
        assert!(OrientationGrid::new(vec![Angle::new(30)], false).is_err());
        assert!(OrientationGrid::new(vec![Angle::new(45), Angle::new(30)], false).is_err());
        let g = OrientationGrid::with_count(12, true).unwrap();
        assert_eq!(g.granularity(), Some(30));
        let custom = OrientationGrid::new(vec![Angle::new(30), Angle::new(45)], false).unwrap();
        assert_eq!(custom.granularity(), None);
        assert_eq!(
            custom.successor_pairs(),
            vec![(Angle::new(30), Angle::new(45))]
        );
        assert_eq!(ring90(true).successor_pairs().len(), 4);
    }

    #[test]
    fn grid_json_forms() {
        let g: OrientationGrid =
            serde_json::from_str(r#"{"granularityDeg":90,"wrap":true}"#).unwrap();
        assert_eq!(g, ring90(true));
        let g: OrientationGrid = serde_json::from_str(r#"{"values":[30,45]}"#).unwrap();
        assert_eq!(g.len(), 2);
        assert!(serde_json::from_str::<OrientationGrid>(r#"{"wrap":true}"#).is_err());
        let back: OrientationGrid =
            serde_json::from_str(&serde_json::to_string(&ring90(false)).unwrap()).unwrap();
        assert_eq!(back, ring90(false));
    }
}
