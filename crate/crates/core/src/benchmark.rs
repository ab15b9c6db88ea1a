//! Instance generation and grid runs over links × orientation counts.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kb::Formulation;
use crate::object_model::{Angle, ObjectSpec, OrientationGrid};
use crate::pddl::{build_domain, build_problem};
use crate::planner::{ground, solve_bfs, solve_external, solve_gbfs, SolveStatus, Strategy};
use crate::validator::validate;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub spec: ObjectSpec,
    pub init: Vec<Angle>,
    pub goal: Vec<Angle>,
    pub grid: OrientationGrid,
}

/// Wrap grid of `orientations` evenly spaced values, init and goal drawn
/// i.i.d. uniformly from it, unit link lengths.
pub fn generate_instance(links: usize, orientations: u16, seed: u64) -> Instance {
    let grid = OrientationGrid::with_count(orientations, true).expect("valid orientation count");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<Angle> {
        (0..links)
            .map(|_| grid.values()[rng.random_range(0..grid.len())])
            .collect()
    };
    let init = draw(&mut rng);
    let goal = draw(&mut rng);
    Instance {
        spec: ObjectSpec::uniform(links, 1.0),
        init,
        goal,
        grid,
    }
}

/// Seed of repeat `run` in cell `(links, orientations)`; shared by every
/// formulation and strategy so they all see the same instance.
pub fn instance_seed(base: u64, links: usize, orientations: u16, run: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(((links as u64) << 40) | ((orientations as u64) << 20) | run as u64);
    rng.random()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchStrategy {
    Bfs,
    Gbfs,
    /// Shell command template with `{domain}`, `{problem}` and `{plan}`.
    External(String),
}

impl BenchStrategy {
    pub fn label(&self) -> &str {
        match self {
            BenchStrategy::Bfs => "bfs",
            BenchStrategy::Gbfs => "gbfs",
            BenchStrategy::External(_) => "external",
        }
    }
}

impl From<Strategy> for BenchStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Bfs => BenchStrategy::Bfs,
            Strategy::Gbfs => BenchStrategy::Gbfs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchSpec {
    pub link_range: RangeInclusive<usize>,
    pub orientation_counts: Vec<u16>,
    pub formulations: Vec<Formulation>,
    pub strategies: Vec<BenchStrategy>,
    pub repeats: usize,
    pub timeout_s: f64,
    pub seed: u64,
    /// Worker threads; 0 uses the available parallelism.
    #[serde(default)]
    pub threads: usize,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            link_range: 4..=20,
            orientation_counts: vec![4, 6, 8, 10, 12],
            formulations: Formulation::BOTH.to_vec(),
            strategies: vec![BenchStrategy::Gbfs],
            repeats: 10,
            timeout_s: 300.0,
            seed: 0,
            threads: 0,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.link_range.is_empty() || self.orientation_counts.is_empty() {
            return Err("empty grid".into());
        }
        if self.formulations.is_empty() || self.strategies.is_empty() {
            return Err("no formulation or strategy selected".into());
        }
        if self.repeats == 0 {
            return Err("repeats must be at least 1".into());
        }
        if self.timeout_s.is_nan() || self.timeout_s <= 0.0 {
            return Err("timeout must be positive".into());
        }
        if let Some(&bad) = self
            .orientation_counts
            .iter()
            .find(|&&c| c == 0 || 360 % c != 0)
        {
            return Err(format!(
                "{bad} orientations do not divide the circle evenly"
            ));
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub links: usize,
    pub orientations: u16,
    pub formulation: Formulation,
    pub strategy: String,
    pub run: usize,
    pub status: String,
    pub elapsed_s: f64,
    pub plan_len: Option<usize>,
    pub expanded: Option<u64>,
    pub clustering: Option<f64>,
}

/// Grounds and solves one instance, then validates any plan. Elapsed time
/// covers grounding and search.
pub fn run_instance(
    inst: &Instance,
    formulation: Formulation,
    strategy: &BenchStrategy,
    timeout: Duration,
    seed: u64,
) -> BenchRecord {
    let mut rec = BenchRecord {
        links: inst.spec.link_count,
        orientations: inst.grid.len() as u16,
        formulation,
        strategy: strategy.label().to_string(),
        run: 0,
        status: String::new(),
        elapsed_s: 0.0,
        plan_len: None,
        expanded: None,
        clustering: None,
    };
    let domain = build_domain(formulation, &inst.grid);
    let problem = match build_problem(&inst.spec, &inst.init, &inst.goal, &inst.grid, formulation) {
        Ok(p) => p,
        Err(e) => {
            rec.status = format!("Error: {e}");
            return rec;
        }
    };
    let start = Instant::now();
    let outcome = match strategy {
        BenchStrategy::External(cmd) => {
            let dt = crate::pddl::render_domain(&domain);
            let pt = crate::pddl::render_problem(&problem);
            solve_external(&dt, &pt, cmd, timeout).map_err(|e| match e {
                crate::planner::ExternalError::PlannerCrashed { .. } => {
                    "PlannerCrashed".to_string()
                }
                crate::planner::ExternalError::InvalidPlanProduced(_) => {
                    "InvalidPlanProduced".to_string()
                }
                other => format!("Error: {other}"),
            })
        }
        _ => ground(&domain, &problem)
            .map(|g| {
                let left = timeout.saturating_sub(start.elapsed());
                match strategy {
                    BenchStrategy::Bfs => solve_bfs(&g, left),
                    _ => solve_gbfs(&g, left, seed),
                }
            })
            .map_err(|e| format!("Error: {e}")),
    };
    rec.elapsed_s = start.elapsed().as_secs_f64();
    match outcome {
        Err(status) => rec.status = status,
        Ok(out) => {
            rec.expanded = Some(out.stats.expanded_nodes);
            rec.status = out.status.to_string();
            if let Some(plan) = &out.plan {
                let report = validate(&domain, &problem, plan);
                if report.valid {
                    rec.plan_len = Some(plan.len());
                    rec.clustering = plan.clustering_index();
                } else {
                    rec.status = "InvalidPlanProduced".into();
                }
            }
        }
    }
    rec
}

/// One record per cell × formulation × strategy × repeat, sorted by
/// `(links, orientations, formulation, strategy, run)`.
pub fn run_grid(spec: &BenchSpec) -> Result<Vec<BenchRecord>, String> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for links in spec.link_range.clone() {
        for &o in &spec.orientation_counts {
            for run in 0..spec.repeats {
                for &f in &spec.formulations {
                    for s in &spec.strategies {
                        jobs.push((links, o, run, f, s.clone()));
                    }
                }
            }
        }
    }
    let timeout = Duration::from_secs_f64(spec.timeout_s);
    let work = |&(links, o, run, f, ref s): &(usize, u16, usize, Formulation, BenchStrategy)| {
        let seed = instance_seed(spec.seed, links, o, run);
        let inst = generate_instance(links, o, seed);
        let mut rec = run_instance(&inst, f, s, timeout, seed);
        rec.run = run;
        rec
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| e.to_string())?;
    let mut records: Vec<BenchRecord> = pool.install(|| jobs.par_iter().map(work).collect());
    records.sort_by(|a, b| {
        (a.links, a.orientations, a.formulation, &a.strategy, a.run).cmp(&(
            b.links,
            b.orientations,
            b.formulation,
            &b.strategy,
            b.run,
        ))
    });
    Ok(records)
}

pub const CSV_HEADER: &str =
    "links,orientations,formulation,strategy,run,status,elapsed_s,plan_len,expanded,clustering";

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<BenchRecord>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn write_csv_file(records: &[BenchRecord], path: &Path) -> Result<(), csv::Error> {
    write_csv(records, std::fs::File::create(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CellSummary {
    pub links: usize,
    pub orientations: u16,
    pub formulation: Formulation,
    pub strategy: String,
    pub runs: usize,
    pub solved: usize,
    pub solve_fraction: f64,
    /// Unsolved runs count at the full timeout.
    pub mean_elapsed_s: f64,
    pub var_elapsed_s: f64,
    pub mean_plan_len: Option<f64>,
    pub mean_clustering: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GridSummary {
    pub link_range: [usize; 2],
    pub orientation_counts: Vec<u16>,
    pub repeats: usize,
    pub timeout_s: f64,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn summarize(spec: &BenchSpec, records: &[BenchRecord]) -> GridSummary {
    let mut groups: BTreeMap<(usize, u16, Formulation, String), Vec<&BenchRecord>> =
        BTreeMap::new();
    for r in records {
        groups
            .entry((r.links, r.orientations, r.formulation, r.strategy.clone()))
            .or_default()
            .push(r);
    }
    let cells = groups
        .into_iter()
        .map(|((links, orientations, formulation, strategy), rs)| {
            let solved: Vec<&&BenchRecord> = rs
                .iter()
                .filter(|r| r.status == SolveStatus::Solved.as_str())
                .collect();
            let times: Vec<f64> = rs
                .iter()
                .map(|r| {
                    if r.status == SolveStatus::Solved.as_str() {
                        r.elapsed_s
                    } else {
                        spec.timeout_s
                    }
                })
                .collect();
            let m = mean(&times).unwrap_or(0.0);
            let var = if times.len() > 1 {
                times.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (times.len() - 1) as f64
            } else {
                0.0
            };
            let lens: Vec<f64> = solved
                .iter()
                .filter_map(|r| r.plan_len)
                .map(|l| l as f64)
                .collect();
            let clus: Vec<f64> = solved.iter().filter_map(|r| r.clustering).collect();
            CellSummary {
                links,
                orientations,
                formulation,
                strategy,
                runs: rs.len(),
                solved: solved.len(),
                solve_fraction: solved.len() as f64 / rs.len() as f64,
                mean_elapsed_s: m,
                var_elapsed_s: var,
                mean_plan_len: mean(&lens),
                mean_clustering: mean(&clus),
            }
        })
        .collect();
    GridSummary {
        link_range: [*spec.link_range.start(), *spec.link_range.end()],
        orientation_counts: spec.orientation_counts.clone(),
        repeats: spec.repeats,
        timeout_s: spec.timeout_s,
        seed: spec.seed,
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_on_grid_and_deterministic() {
        let a = generate_instance(3, 4, 11);
        assert!(a.init.iter().chain(&a.goal).all(|x| x.degrees() % 90 == 0));
        assert_eq!(a, generate_instance(3, 4, 11));
        let big = generate_instance(20, 12, 5);
        assert_eq!(big.init.len(), 20);
        assert_eq!(big.goal.len(), 20);
        assert!(big.init.iter().all(|x| x.degrees() % 30 == 0));
        assert_eq!(big.grid.granularity(), Some(30));
    }

    #[test]
    fn tiny_bfs_grid_solves_everything() {
        let spec = BenchSpec {
            link_range: 4..=6,
            orientation_counts: vec![4],
            formulations: vec![Formulation::Relative],
            strategies: vec![BenchStrategy::Bfs],
            repeats: 2,
            timeout_s: 60.0,
            seed: 1,
            threads: 1,
        };
        let recs = run_grid(&spec).unwrap();
        assert_eq!(recs.len(), 6);
        assert!(recs.iter().all(|r| r.status == "Solved"));
        let summary = summarize(&spec, &recs);
        assert!(summary.cells.iter().all(|c| c.solve_fraction == 1.0));
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![
            BenchRecord {
                links: 4,
                orientations: 8,
                formulation: Formulation::Absolute,
                strategy: "gbfs".into(),
                run: 2,
                status: "Timeout".into(),
                elapsed_s: 60.0,
                plan_len: None,
                expanded: Some(12345),
                clustering: None,
            },
            BenchRecord {
                links: 5,
                orientations: 4,
                formulation: Formulation::Relative,
                strategy: "bfs".into(),
                run: 0,
                status: "Solved".into(),
                elapsed_s: 0.125,
                plan_len: Some(7),
                expanded: Some(99),
                clustering: Some(0.5),
            },
        ];
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(read_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn spec_validation() {
        let mut s = BenchSpec::default();
        assert!(s.validate().is_ok());
        s.repeats = 0;
        assert!(s.validate().is_err());
        s = BenchSpec {
            orientation_counts: vec![7],
            ..BenchSpec::default()
        };
        assert!(s.validate().is_err());
    }
}
