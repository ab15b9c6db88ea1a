use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet, VecDeque};
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use indexmap::IndexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxBuildHasher;

use super::{GroundingResult, SolveOutcome, SolveStats, SolveStatus};
use crate::kb::{GroundPredicate, PlanRecord};

/// Stored states before a search gives up; reported as `Timeout` with
/// `stats.limit = "node-limit"`.
pub const DEFAULT_NODE_LIMIT: usize = 2_000_000;

const ROOT: u32 = u32::MAX;

struct Branch {
    when_pos: Vec<usize>,
    when_neg: Vec<usize>,
    del: Vec<usize>,
    add: Vec<usize>,
}

struct Op {
    source: usize,
    joint: Option<usize>,
    pre: Vec<usize>,
    pre_neg: Vec<usize>,
    del: Vec<usize>,
    add: Vec<usize>,
    branches: Vec<Branch>,
}

/// Ground task over the facts some action can change; everything else is
/// constant and folded away.
struct Task {
    ops: Vec<Op>,
    /// Ops indexed by their first positive precondition.
    trigger: Vec<Vec<u32>>,
    untriggered: Vec<u32>,
    init: FixedBitSet,
    goal: Vec<usize>,
    goal_possible: bool,
}

enum Cond {
    Always,
    Never,
    Fact(usize),
}

impl Task {
    fn compile(g: &GroundingResult) -> Task {
        let mut facts: IndexSet<&GroundPredicate, FxBuildHasher> = IndexSet::default();
        for a in &g.ground_actions {
            facts.extend(a.eff_neg.iter().chain(&a.eff_pos));
            for b in &a.conditional {
                facts.extend(b.eff_neg.iter().chain(&b.eff_pos));
            }
        }
        let init: HashSet<&GroundPredicate> = g.initial.iter().collect();
        let pos = |f: &GroundPredicate| match facts.get_index_of(f) {
            Some(i) => Cond::Fact(i),
            None if init.contains(f) => Cond::Always,
            None => Cond::Never,
        };
        let neg = |f: &GroundPredicate| match facts.get_index_of(f) {
            Some(i) => Cond::Fact(i),
            None if init.contains(f) => Cond::Never,
            None => Cond::Always,
        };
        // Collects fluent indices; `None` if some condition can never hold.
        let conds = |items: &mut dyn Iterator<Item = Cond>| -> Option<Vec<usize>> {
            let mut out = Vec::new();
            for c in items {
                match c {
                    Cond::Always => {}
                    Cond::Never => return None,
                    Cond::Fact(i) => out.push(i),
                }
            }
            Some(out)
        };
        let idx = |f: &GroundPredicate| facts.get_index_of(f).expect("effect fact indexed");

        let mut ops = Vec::new();
        for (source, a) in g.ground_actions.iter().enumerate() {
            let Some(pre) = conds(&mut a.pre.iter().map(pos)) else {
                continue;
            };
            let Some(pre_neg) = conds(&mut a.pre_neg.iter().map(neg)) else {
                continue;
            };
            let mut branches = Vec::new();
            for b in &a.conditional {
                let (Some(when_pos), Some(when_neg)) = (
                    conds(&mut b.when_pos.iter().map(pos)),
                    conds(&mut b.when_neg.iter().map(neg)),
                ) else {
                    continue;
                };
                branches.push(Branch {
                    when_pos,
                    when_neg,
                    del: b.eff_neg.iter().map(idx).collect(),
                    add: b.eff_pos.iter().map(idx).collect(),
                });
            }
            ops.push(Op {
                source,
                joint: a.joint(),
                pre,
                pre_neg,
                del: a.eff_neg.iter().map(idx).collect(),
                add: a.eff_pos.iter().map(idx).collect(),
                branches,
            });
        }

        let mut trigger = vec![Vec::new(); facts.len()];
        let mut untriggered = Vec::new();
        for (i, op) in ops.iter().enumerate() {
            match op.pre.first() {
                Some(&f) => trigger[f].push(i as u32),
                None => untriggered.push(i as u32),
            }
        }
        let mut init_bits = FixedBitSet::with_capacity(facts.len());
        for f in g.initial.iter() {
            if let Some(i) = facts.get_index_of(f) {
                init_bits.insert(i);
            }
        }
        let mut goal = Vec::new();
        let mut goal_possible = true;
        for f in g.goal.iter() {
            match pos(f) {
                Cond::Fact(i) => goal.push(i),
                Cond::Always => {}
                Cond::Never => goal_possible = false,
            }
        }
        Task {
            ops,
            trigger,
            untriggered,
            init: init_bits,
            goal,
            goal_possible,
        }
    }

    fn unmet_goals(&self, s: &FixedBitSet) -> u32 {
        self.goal.iter().filter(|&&g| !s.contains(g)).count() as u32
    }

    fn applicable_ops(&self, s: &FixedBitSet, out: &mut Vec<u32>) {
        out.clear();
        out.extend(self.untriggered.iter().copied());
        for f in s.ones() {
            out.extend(self.trigger[f].iter().copied());
        }
        out.retain(|&o| {
            let op = &self.ops[o as usize];
            op.pre.iter().all(|&p| s.contains(p)) && !op.pre_neg.iter().any(|&p| s.contains(p))
        });
        out.sort_unstable();
    }

    fn apply(&self, s: &FixedBitSet, op: &Op, firing: &mut Vec<usize>) -> FixedBitSet {
        firing.clear();
        firing.extend(op.branches.iter().enumerate().filter_map(|(i, b)| {
            let fires = b.when_pos.iter().all(|&p| s.contains(p))
                && !b.when_neg.iter().any(|&p| s.contains(p));
            fires.then_some(i)
        }));
        let mut next = s.clone();
        for &d in op
            .del
            .iter()
            .chain(firing.iter().flat_map(|&i| &op.branches[i].del))
        {
            next.set(d, false);
        }
        for &a in op
            .add
            .iter()
            .chain(firing.iter().flat_map(|&i| &op.branches[i].add))
        {
            next.insert(a);
        }
        next
    }
}

struct Space {
    states: IndexSet<FixedBitSet, FxBuildHasher>,
    parent: Vec<u32>,
    via: Vec<u32>,
}

impl Space {
    fn new(init: FixedBitSet) -> Self {
        let mut states = IndexSet::default();
        states.insert(init);
        Space {
            states,
            parent: vec![ROOT],
            via: vec![ROOT],
        }
    }

    /// Index of `s` if it had not been seen.
    fn add(&mut self, s: FixedBitSet, parent: u32, op: u32) -> Option<u32> {
        let (i, new) = self.states.insert_full(s);
        if !new {
            return None;
        }
        self.parent.push(parent);
        self.via.push(op);
        Some(i as u32)
    }

    fn plan(&self, g: &GroundingResult, task: &Task, mut node: u32) -> PlanRecord {
        let mut actions = Vec::new();
        while self.parent[node as usize] != ROOT {
            let op = &task.ops[self.via[node as usize] as usize];
            actions.push(g.ground_actions[op.source].clone());
            node = self.parent[node as usize];
        }
        actions.reverse();
        PlanRecord::new(actions)
    }
}

fn finish(
    status: SolveStatus,
    plan: Option<PlanRecord>,
    mut stats: SolveStats,
    start: Instant,
) -> SolveOutcome {
    stats.elapsed_s = start.elapsed().as_secs_f64();
    stats.plan_length = plan.as_ref().map(PlanRecord::len);
    SolveOutcome {
        status,
        plan,
        stats,
    }
}

fn over_time(expanded: u64, start: Instant, timeout: Duration) -> bool {
    expanded.is_multiple_of(256) && start.elapsed() >= timeout
}

fn node_limit_hit(stats: &mut SolveStats, space: &Space, limit: usize) -> bool {
    if space.states.len() >= limit {
        stats.limit = Some("node-limit".into());
        return true;
    }
    false
}

/// Breadth-first search with duplicate detection; plans are length-optimal.
pub fn solve_bfs(g: &GroundingResult, timeout: Duration) -> SolveOutcome {
    solve_bfs_limited(g, timeout, DEFAULT_NODE_LIMIT)
}

pub fn solve_bfs_limited(
    g: &GroundingResult,
    timeout: Duration,
    node_limit: usize,
) -> SolveOutcome {
    let start = Instant::now();
    let task = Task::compile(g);
    let mut stats = SolveStats::default();
    if !task.goal_possible {
        return finish(SolveStatus::Unsolvable, None, stats, start);
    }
    if task.unmet_goals(&task.init) == 0 {
        return finish(
            SolveStatus::Solved,
            Some(PlanRecord::default()),
            stats,
            start,
        );
    }
    let mut space = Space::new(task.init.clone());
    let mut queue = VecDeque::from([0u32]);
    let (mut succ, mut firing) = (Vec::new(), Vec::new());
    while let Some(node) = queue.pop_front() {
        if over_time(stats.expanded_nodes, start, timeout) {
            return finish(SolveStatus::Timeout, None, stats, start);
        }
        stats.expanded_nodes += 1;
        let s = space.states[node as usize].clone();
        task.applicable_ops(&s, &mut succ);
        for &o in &succ {
            let next = task.apply(&s, &task.ops[o as usize], &mut firing);
            stats.generated_nodes += 1;
            let at_goal = task.unmet_goals(&next) == 0;
            if let Some(child) = space.add(next, node, o) {
                if at_goal {
                    let plan = space.plan(g, &task, child);
                    return finish(SolveStatus::Solved, Some(plan), stats, start);
                }
                if node_limit_hit(&mut stats, &space, node_limit) {
                    return finish(SolveStatus::Timeout, None, stats, start);
                }
                queue.push_back(child);
            }
        }
    }
    finish(SolveStatus::Unsolvable, None, stats, start)
}

/// Greedy best-first search on the number of unmet goal facts.
///
/// Ties go to actions on the joint the parent was reached by, then to the
/// lower-ranked action signature, then to a seeded random draw.
pub fn solve_gbfs(g: &GroundingResult, timeout: Duration, seed: u64) -> SolveOutcome {
    solve_gbfs_limited(g, timeout, seed, DEFAULT_NODE_LIMIT)
}

pub fn solve_gbfs_limited(
    g: &GroundingResult,
    timeout: Duration,
    seed: u64,
    node_limit: usize,
) -> SolveOutcome {
    let start = Instant::now();
    let task = Task::compile(g);
    let mut stats = SolveStats::default();
    if !task.goal_possible {
        return finish(SolveStatus::Unsolvable, None, stats, start);
    }
    let h0 = task.unmet_goals(&task.init);
    if h0 == 0 {
        return finish(
            SolveStatus::Solved,
            Some(PlanRecord::default()),
            stats,
            start,
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut space = Space::new(task.init.clone());
    let mut counter = 0u64;
    type Key = (u32, u8, usize, u64, u64, u32);
    let mut open: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    open.push(Reverse((h0, 1, 0, 0, 0, 0)));
    let (mut succ, mut firing) = (Vec::new(), Vec::new());
    while let Some(Reverse((.., node))) = open.pop() {
        if over_time(stats.expanded_nodes, start, timeout) {
            return finish(SolveStatus::Timeout, None, stats, start);
        }
        stats.expanded_nodes += 1;
        let s = space.states[node as usize].clone();
        let parent_joint = match space.via[node as usize] {
            ROOT => None,
            o => task.ops[o as usize].joint,
        };
        task.applicable_ops(&s, &mut succ);
        for &o in &succ {
            let op = &task.ops[o as usize];
            let next = task.apply(&s, op, &mut firing);
            stats.generated_nodes += 1;
            let h = task.unmet_goals(&next);
            if let Some(child) = space.add(next, node, o) {
                if h == 0 {
                    let plan = space.plan(g, &task, child);
                    return finish(SolveStatus::Solved, Some(plan), stats, start);
                }
                if node_limit_hit(&mut stats, &space, node_limit) {
                    return finish(SolveStatus::Timeout, None, stats, start);
                }
                let same = u8::from(parent_joint.is_none() || parent_joint != op.joint);
                counter += 1;
                open.push(Reverse((h, same, op.source, rng.random(), counter, child)));
            }
        }
    }
    finish(SolveStatus::Unsolvable, None, stats, start)
}

#[cfg(test)]
mod tests {
    use super::super::ground;
    use super::*;
    use crate::kb::{expected_trajectory, goal_satisfied, Formulation};
    use crate::object_model::{Angle, ObjectSpec, OrientationGrid};
    use crate::pddl::{build_domain, build_problem};

    fn task(init: &[i64], goal: &[i64], grid: &OrientationGrid, f: Formulation) -> GroundingResult {
        let a: Vec<Angle> = init.iter().map(|&d| Angle::new(d)).collect();
        let b: Vec<Angle> = goal.iter().map(|&d| Angle::new(d)).collect();
        let spec = ObjectSpec::uniform(a.len(), 1.0);
        ground(
            &build_domain(f, grid),
            &build_problem(&spec, &a, &b, grid, f).unwrap(),
        )
        .unwrap()
    }

    fn check_valid(g: &GroundingResult, out: &SolveOutcome) {
        let plan = out.plan.as_ref().unwrap();
        let traj = expected_trajectory(plan, &g.initial).unwrap();
        assert!(goal_satisfied(traj.last().unwrap(), &g.goal));
    }

    const T: Duration = Duration::from_secs(10);

    #[test]
    fn single_joint_half_turn_takes_two_steps() {
        let grid = OrientationGrid::from_granularity(90, false).unwrap();
        for f in Formulation::BOTH {
            let g = task(&[0], &[180], &grid, f);
            let out = solve_bfs(&g, T);
            assert_eq!(out.status, SolveStatus::Solved);
            assert_eq!(out.plan.as_ref().unwrap().len(), 2);
            check_valid(&g, &out);
        }
    }

    #[test]
    fn init_equal_goal_is_empty_plan() {
        let grid = OrientationGrid::from_granularity(90, true).unwrap();
        let g = task(&[90, 0], &[90, 0], &grid, Formulation::Absolute);
        assert_eq!(solve_bfs(&g, T).plan, Some(PlanRecord::default()));
        assert_eq!(solve_gbfs(&g, T, 1).plan, Some(PlanRecord::default()));
    }

    #[test]
    fn goal_outside_grid_is_unsolvable() {
        let grid = OrientationGrid::from_granularity(90, false).unwrap();
        let mut g = task(&[270], &[270], &grid, Formulation::Relative);
        g.goal = [GroundPredicate::has_orientation(0, Angle::new(45))]
            .into_iter()
            .collect();
        assert_eq!(solve_bfs(&g, T).status, SolveStatus::Unsolvable);
        assert_eq!(solve_gbfs(&g, T, 0).status, SolveStatus::Unsolvable);
    }

    #[test]
    fn gbfs_is_valid_and_no_shorter_than_bfs() {
        let grid = OrientationGrid::from_granularity(90, true).unwrap();
        for f in Formulation::BOTH {
            let g = task(&[0, 90, 180, 270], &[270, 0, 0, 90], &grid, f);
            let bfs = solve_bfs(&g, T);
            let gbfs = solve_gbfs(&g, T, 7);
            check_valid(&g, &bfs);
            check_valid(&g, &gbfs);
            assert!(bfs.stats.plan_length <= gbfs.stats.plan_length);
        }
    }

    #[test]
    fn gbfs_is_deterministic_per_seed() {
        let grid = OrientationGrid::from_granularity(45, true).unwrap();
        let g = task(&[0, 45, 90], &[180, 315, 0], &grid, Formulation::Absolute);
        let a = solve_gbfs(&g, T, 3);
        let b = solve_gbfs(&g, T, 3);
        assert_eq!(a.plan, b.plan);
        assert_eq!(a.stats.expanded_nodes, b.stats.expanded_nodes);
    }

    #[test]
    fn node_cap_reports_timeout() {
        let grid = OrientationGrid::from_granularity(45, true).unwrap();
        let g = task(
            &[0, 0, 0, 0],
            &[180, 180, 180, 180],
            &grid,
            Formulation::Relative,
        );
        let out = solve_bfs_limited(&g, T, 10);
        assert_eq!(out.status, SolveStatus::Timeout);
        assert_eq!(out.stats.limit.as_deref(), Some("node-limit"));
        assert!(out.plan.is_none());
    }

    #[test]
    fn zero_timeout_stops_search() {
        let grid = OrientationGrid::from_granularity(30, true).unwrap();
        let g = task(&[0; 6], &[180; 6], &grid, Formulation::Absolute);
        assert_eq!(solve_bfs(&g, Duration::ZERO).status, SolveStatus::Timeout);
    }
}
