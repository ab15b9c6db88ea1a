//! `chainplan` subcommands and the session server.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chainplan_core::benchmark::{
    generate_instance, run_grid, summarize, write_csv_file, BenchSpec, BenchStrategy,
};
use chainplan_core::executor::{run, ExecutorConfig, NoHooks, TraceEvent, DEFAULT_MAX_REPLANS};
use chainplan_core::kb::Formulation;
use chainplan_core::object_model::{Angle, ObjectSpec, ObjectSpecFile, OrientationGrid};
use chainplan_core::pddl::{emit_domain, emit_problem, parse_domain, parse_plan, parse_problem};
use chainplan_core::planner::{solve, SolveStatus, Solver, Strategy};
use chainplan_core::validator::validate;
use chainplan_core::Scenario;
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

pub mod server;

#[derive(Debug, Parser)]
#[command(
    name = "chainplan",
    version,
    about = "Plan, validate and execute articulated-chain reconfigurations"
)]
pub struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a PDDL domain and problem.
    Gen(GenArgs),
    /// Solve a domain/problem pair and write the plan.
    Plan(PlanArgs),
    /// Check a plan against a domain and problem.
    Validate(ValidateArgs),
    /// Run a scenario through the simulated execution loop.
    Exec(ExecArgs),
    /// Run a benchmark grid and write CSV.
    Bench(BenchArgs),
    /// Serve live sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    Relative,
    Absolute,
    Both,
}

impl FormulationArg {
    fn formulations(self) -> Vec<Formulation> {
        match self {
            FormulationArg::Relative => vec![Formulation::Relative],
            FormulationArg::Absolute => vec![Formulation::Absolute],
            FormulationArg::Both => Formulation::BOTH.to_vec(),
        }
    }

    fn single(self) -> Result<Formulation, CliError> {
        match self {
            FormulationArg::Relative => Ok(Formulation::Relative),
            FormulationArg::Absolute => Ok(Formulation::Absolute),
            FormulationArg::Both => Err(CliError::Usage(
                "this command takes a single formulation".into(),
            )),
        }
    }
}

#[derive(Debug, Args)]
pub struct PlannerArgs {
    #[arg(long, value_enum, default_value = "gbfs")]
    pub strategy: StrategyArg,
    /// External planner command with `{domain}`, `{problem}` and `{plan}`
    /// placeholders; replaces the built-in search.
    #[arg(long)]
    pub planner_cmd: Option<String>,
    /// Seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Bfs,
    Gbfs,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Bfs => Strategy::Bfs,
            StrategyArg::Gbfs => Strategy::Gbfs,
        }
    }
}

impl PlannerArgs {
    fn solver(&self, seed: u64) -> Solver {
        match (&self.planner_cmd, self.strategy) {
            (Some(command), _) => Solver::External {
                command: command.clone(),
            },
            (None, StrategyArg::Bfs) => Solver::Bfs,
            (None, StrategyArg::Gbfs) => Solver::Gbfs { seed },
        }
    }

    fn timeout(&self, default_s: f64) -> Result<Duration, CliError> {
        seconds(self.timeout.unwrap_or(default_s))
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "relative")]
    pub formulation: FormulationArg,
    /// Object spec JSON (link lengths, granularity, wrap); overrides
    /// --links, --granularity and --wrap.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub links: usize,
    /// Degrees between neighbouring orientations.
    #[arg(long, default_value_t = 90)]
    pub granularity: u16,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub wrap: bool,
    /// Initial orientations in degrees, comma separated; random when omitted.
    #[arg(long, value_delimiter = ',')]
    pub init: Option<Vec<i64>>,
    /// Goal orientations in degrees, comma separated; random when omitted.
    #[arg(long, value_delimiter = ',')]
    pub goal: Option<Vec<i64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for domain.pddl and problem.pddl.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub problem: PathBuf,
    #[command(flatten)]
    pub planner: PlannerArgs,
    /// Plan file; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long)]
    pub plan: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExecArgs {
    pub scenario: PathBuf,
    /// Overrides the scenario's formulation.
    #[arg(long, value_enum)]
    pub formulation: Option<FormulationArg>,
    #[command(flatten)]
    pub planner: PlannerArgs,
    #[arg(long, default_value_t = DEFAULT_MAX_REPLANS)]
    pub max_replans: usize,
    /// JSON-lines trace; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Link counts, e.g. `4..12` or `6`.
    #[arg(long, default_value = "4..20")]
    pub links: String,
    #[arg(long, value_delimiter = ',', default_value = "4,6,8,10,12")]
    pub orientations: Vec<u16>,
    #[arg(long, value_enum, default_value = "both")]
    pub formulation: FormulationArg,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "gbfs")]
    pub strategy: Vec<StrategyArg>,
    /// External planner command, benchmarked alongside the built-in
    /// strategies.
    #[arg(long)]
    pub planner_cmd: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Seconds per solve.
    #[arg(long, default_value_t = 300.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
    /// Also write per-cell summary JSON here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable inputs; exit 2.
    Usage(String),
    /// Invalid plan, unsolvable problem, failed run; exit 1.
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

fn domain_err(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn seconds(s: f64) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(s)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| {
            CliError::Usage(format!(
                "timeout must be a positive number of seconds, got {s}"
            ))
        })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))
}

fn parse_links(s: &str) -> Result<std::ops::RangeInclusive<usize>, CliError> {
    let bad = || CliError::Usage(format!("bad link range '{s}', expected N or A..B"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => match s.split_once('-') {
            Some((a, b)) => (num(a)?, num(b)?),
            None => (num(s)?, num(s)?),
        },
    };
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok(a..=b)
}

pub fn gen(args: &GenArgs, json: bool) -> Result<(), CliError> {
    let f = args.formulation.single()?;
    let (spec, grid) = match &args.spec {
        Some(path) => {
            let file: ObjectSpecFile = serde_json::from_str(&read(path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            file.resolve().map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => {
            if args.links == 0 {
                return Err(CliError::Usage("--links must be at least 1".into()));
            }
            let grid = OrientationGrid::from_granularity(args.granularity, args.wrap)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            (ObjectSpec::uniform(args.links, 1.0), grid)
        }
    };
    let n = spec.joint_count();
    let random = generate_instance(n, grid.len() as u16, args.seed);
    let pick = |given: &Option<Vec<i64>>, fallback: Vec<Angle>| -> Result<Vec<Angle>, CliError> {
        match given {
            Some(d) if d.len() != n => Err(CliError::Usage(format!(
                "expected {n} orientations, got {}",
                d.len()
            ))),
            Some(d) => Ok(d.iter().map(|&x| Angle::new(x)).collect()),
            None if grid.granularity().is_some() => Ok(fallback),
            None => Err(CliError::Usage(
                "uneven grid: pass --init and --goal".into(),
            )),
        }
    };
    let init = pick(&args.init, random.init)?;
    let goal = pick(&args.goal, random.goal)?;
    let problem =
        emit_problem(&spec, &init, &goal, &grid, f).map_err(|e| CliError::Usage(e.to_string()))?;
    fs::create_dir_all(&args.out).map_err(domain_err)?;
    let (dp, pp) = (args.out.join("domain.pddl"), args.out.join("problem.pddl"));
    write(&dp, &emit_domain(f, &grid))?;
    write(&pp, &problem)?;
    if json {
        println!(
            "{}",
            serde_json::json!({ "domain": dp, "problem": pp, "formulation": f })
        );
    } else {
        println!("wrote {} and {}", dp.display(), pp.display());
    }
    Ok(())
}

pub fn plan(args: &PlanArgs, json: bool) -> Result<(), CliError> {
    let domain = parse_domain(&read(&args.domain)?).map_err(domain_err)?;
    let problem = parse_problem(&read(&args.problem)?).map_err(domain_err)?;
    let timeout = args.planner.timeout(300.0)?;
    let out = solve(
        &domain,
        &problem,
        &args.planner.solver(args.planner.seed),
        timeout,
    )
    .map_err(domain_err)?;
    let text = out.plan.as_ref().map(|p| p.to_plan_text());
    if let (Some(path), Some(text)) = (&args.out, &text) {
        write(path, text)?;
    }
    if json {
        println!("{}", serde_json::to_string(&out).map_err(domain_err)?);
    } else if args.out.is_none() {
        print!("{}", text.as_deref().unwrap_or(""));
    }
    eprintln!(
        "{} in {:.3} s, {} expanded",
        out.status, out.stats.elapsed_s, out.stats.expanded_nodes
    );
    match out.status {
        SolveStatus::Solved => Ok(()),
        other => Err(CliError::Domain(format!("planner returned {other}"))),
    }
}

pub fn validate_cmd(args: &ValidateArgs) -> Result<(), CliError> {
    let domain = parse_domain(&read(&args.domain)?).map_err(domain_err)?;
    let problem = parse_problem(&read(&args.problem)?).map_err(domain_err)?;
    let plan = parse_plan(&read(&args.plan)?, &domain, &problem).map_err(domain_err)?;
    let report = validate(&domain, &problem, &plan);
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(domain_err)?
    );
    if report.valid {
        Ok(())
    } else {
        Err(CliError::Domain(
            report.message.unwrap_or_else(|| "invalid plan".into()),
        ))
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let s: Scenario = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    s.validate().map_err(CliError::Usage)?;
    Ok(s)
}

pub fn exec(args: &ExecArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let cfg = ExecutorConfig {
        formulation: match args.formulation {
            Some(f) => f.single()?,
            None => scenario.formulation,
        },
        solver: args.planner.solver(args.planner.seed),
        timeout: args.planner.timeout(60.0)?,
        max_replans: args.max_replans,
        ..ExecutorConfig::default()
    };
    cfg.validate().map_err(CliError::Usage)?;
    let trace = run(&mut scenario.world(), &scenario.goal, &cfg, &mut NoHooks);
    let lines = trace.to_json_lines();
    match &args.out {
        Some(path) => write(path, &lines)?,
        None => print!("{lines}"),
    }
    match trace.terminal() {
        Some(TraceEvent::GoalReached) => {
            eprintln!("goal reached after {} events", trace.events.len());
            Ok(())
        }
        Some(TraceEvent::HumanNeeded { reason }) => {
            Err(CliError::Domain(format!("human needed: {reason}")))
        }
        _ => Err(CliError::Domain("trace has no terminal event".into())),
    }
}

pub fn bench(args: &BenchArgs, json: bool) -> Result<(), CliError> {
    let mut strategies: Vec<BenchStrategy> = args
        .strategy
        .iter()
        .map(|&s| Strategy::from(s).into())
        .collect();
    strategies.dedup();
    if let Some(cmd) = &args.planner_cmd {
        strategies.push(BenchStrategy::External(cmd.clone()));
    }
    let spec = BenchSpec {
        link_range: parse_links(&args.links)?,
        orientation_counts: args.orientations.clone(),
        formulations: args.formulation.formulations(),
        strategies,
        repeats: args.repeats,
        timeout_s: args.timeout,
        seed: args.seed,
        threads: args.threads,
    };
    spec.validate().map_err(CliError::Usage)?;
    let records = run_grid(&spec).map_err(domain_err)?;
    write_csv_file(&records, &args.out).map_err(domain_err)?;
    let summary = summarize(&spec, &records);
    if let Some(path) = &args.summary {
        write(
            path,
            &serde_json::to_string_pretty(&summary).map_err(domain_err)?,
        )?;
    }
    if json {
        println!("{}", serde_json::to_string(&summary).map_err(domain_err)?);
    } else {
        println!("links orient formulation strategy solved mean_s plan_len clustering");
        for c in &summary.cells {
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
            println!(
                "{:>5} {:>6} {:<11} {:<8} {:>2}/{:<3} {:>8.4} {:>8} {:>10}",
                c.links,
                c.orientations,
                c.formulation,
                c.strategy,
                c.solved,
                c.runs,
                c.mean_elapsed_s,
                opt(c.mean_plan_len),
                opt(c.mean_clustering)
            );
        }
        println!(
            "{} records written to {}",
            records.len(),
            args.out.display()
        );
    }
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let rt = tokio::runtime::Runtime::new().map_err(domain_err)?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(|e| {
                CliError::Usage(format!("cannot bind {}:{}: {e}", args.host, args.port))
            })?;
        eprintln!(
            "listening on http://{}",
            listener.local_addr().map_err(domain_err)?
        );
        axum::serve(listener, server::router(server::AppState::default()))
            .await
            .map_err(domain_err)
    })
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen(a) => gen(a, cli.json),
        Command::Plan(a) => plan(a, cli.json),
        Command::Validate(a) => validate_cmd(a),
        Command::Exec(a) => exec(a),
        Command::Bench(a) => bench(a, cli.json),
        Command::Serve(a) => serve(a),
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_ranges() {
        assert_eq!(parse_links("4..12").unwrap(), 4..=12);
        assert_eq!(parse_links("4..=6").unwrap(), 4..=6);
        assert_eq!(parse_links("3-5").unwrap(), 3..=5);
        assert_eq!(parse_links("7").unwrap(), 7..=7);
        assert!(parse_links("9..2").is_err());
        assert!(parse_links("x").is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "chainplan",
            "gen",
            "--wrap",
            "false",
            "--init",
            "0,90",
            "--goal",
            "90,0",
            "--links",
            "2",
        ])
        .unwrap();
        let Command::Gen(g) = cli.command else {
            panic!()
        };
        assert!(!g.wrap);
        assert_eq!(g.init, Some(vec![0, 90]));
        assert!(Cli::try_parse_from(["chainplan", "plan", "--bogus"]).is_err());
        assert!(Cli::try_parse_from(["chainplan", "bench", "--strategy", "bfs,gbfs"]).is_ok());
    }
}
