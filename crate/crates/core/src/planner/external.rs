use std::fs::{self, File};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{SolveOutcome, SolveStats, SolveStatus};
use crate::pddl::{parse_domain, parse_plan, parse_problem, PddlError};
use crate::validator::{validate, ValidationReport};

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("command template must contain {{domain}} and {{problem}}: {0}")]
    Template(String),
    #[error("planner exited with {code:?} and no plan: {stderr}")]
    PlannerCrashed { code: Option<i32>, stderr: String },
    #[error("planner produced an invalid plan: {}", .0.message.as_deref().unwrap_or("validation failed"))]
    InvalidPlanProduced(Box<ValidationReport>),
    #[error("cannot read planner output: {0}")]
    UnparsablePlan(PddlError),
    #[error("planner input: {0}")]
    Input(PddlError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn quote(path: &std::path::Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

/// Runs `command` through `sh -c` after substituting `{domain}`, `{problem}`
/// and `{plan}` with temporary file paths. The plan is read from `{plan}` if
/// the planner wrote it, otherwise from stdout, and is validated before it is
/// returned.
pub fn solve_external(
    domain_text: &str,
    problem_text: &str,
    command: &str,
    timeout: Duration,
) -> Result<SolveOutcome, ExternalError> {
    if !command.contains("{domain}") || !command.contains("{problem}") {
        return Err(ExternalError::Template(command.to_string()));
    }
    let domain = parse_domain(domain_text).map_err(ExternalError::Input)?;
    let problem = parse_problem(problem_text).map_err(ExternalError::Input)?;

    let dir = tempfile::tempdir()?;
    let (dp, pp, plan_path) = (
        dir.path().join("domain.pddl"),
        dir.path().join("problem.pddl"),
        dir.path().join("plan.txt"),
    );
    fs::write(&dp, domain_text)?;
    fs::write(&pp, problem_text)?;
    let (out_path, err_path) = (dir.path().join("stdout"), dir.path().join("stderr"));
    let script = command
        .replace("{domain}", &quote(&dp))
        .replace("{problem}", &quote(&pp))
        .replace("{plan}", &quote(&plan_path));

    let start = Instant::now();
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&script)
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(File::create(&out_path)?)
        .stderr(File::create(&err_path)?)
        .spawn()?;
    let status = loop {
        if let Some(st) = child.try_wait()? {
            break Some(st);
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let mut stats = SolveStats {
        elapsed_s: start.elapsed().as_secs_f64(),
        stdout: Some(fs::read_to_string(&out_path).unwrap_or_default()),
        stderr: Some(fs::read_to_string(&err_path).unwrap_or_default()),
        ..SolveStats::default()
    };
    let Some(status) = status else {
        return Ok(SolveOutcome {
            status: SolveStatus::Timeout,
            plan: None,
            stats,
        });
    };

    let stdout = stats.stdout.clone().unwrap_or_default();
    let text = if plan_path.exists() {
        fs::read_to_string(&plan_path)?
    } else if status.success() && stdout.lines().any(|l| l.trim_start().contains('(')) {
        stdout
    } else {
        return Err(ExternalError::PlannerCrashed {
            code: status.code(),
            stderr: stats.stderr.unwrap_or_default(),
        });
    };
    let plan = parse_plan(&text, &domain, &problem).map_err(ExternalError::UnparsablePlan)?;
    let report = validate(&domain, &problem, &plan);
    if !report.valid {
        return Err(ExternalError::InvalidPlanProduced(Box::new(report)));
    }
    stats.plan_length = Some(plan.len());
    Ok(SolveOutcome {
        status: SolveStatus::Solved,
        plan: Some(plan),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Formulation;
    use crate::object_model::{Angle, ObjectSpec, OrientationGrid};
    use crate::pddl::{emit_domain, emit_problem};

    fn texts() -> (String, String) {
        let grid = OrientationGrid::from_granularity(90, true).unwrap();
        let f = Formulation::Relative;
        let spec = ObjectSpec::uniform(1, 1.0);
        (
            emit_domain(f, &grid),
            emit_problem(&spec, &[Angle::ZERO], &[Angle::new(90)], &grid, f).unwrap(),
        )
    }

    const T: Duration = Duration::from_secs(10);

    #[test]
    fn stub_writing_plan_file() {
        let (d, p) = texts();
        let cmd = "echo '(rotateclockwise l0 l1 j1 o0 o90)' > {plan} # {domain} {problem}";
        let out = solve_external(&d, &p, cmd, T).unwrap();
        assert_eq!(out.status, SolveStatus::Solved);
        assert_eq!(out.plan.unwrap().len(), 1);
    }

    #[test]
    fn stub_printing_plan() {
        let (d, p) = texts();
        let cmd =
            "test -f {domain} && test -f {problem} && echo '1: (rotateclockwise l0 l1 j1 o0 o90)'";
        assert_eq!(
            solve_external(&d, &p, cmd, T).unwrap().status,
            SolveStatus::Solved
        );
    }

    #[test]
    fn stub_exiting_one_crashes() {
        let (d, p) = texts();
        let err =
            solve_external(&d, &p, "echo boom >&2; exit 1 # {domain} {problem}", T).unwrap_err();
        assert!(
            matches!(err, ExternalError::PlannerCrashed { code: Some(1), ref stderr } if stderr.contains("boom"))
        );
    }

    #[test]
    fn stub_with_bad_plan_is_rejected() {
        let (d, p) = texts();
        let cmd = "echo '(rotateclockwise l0 l1 j1 o90 o180)' > {plan} # {domain} {problem}";
        match solve_external(&d, &p, cmd, T) {
            Err(ExternalError::InvalidPlanProduced(r)) => assert_eq!(r.failing_step, Some(0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn slow_stub_times_out() {
        let (d, p) = texts();
        let out = solve_external(
            &d,
            &p,
            "sleep 5 # {domain} {problem}",
            Duration::from_millis(100),
        )
        .unwrap();
        assert_eq!(out.status, SolveStatus::Timeout);
    }

    #[test]
    fn template_needs_placeholders() {
        let (d, p) = texts();
        assert!(matches!(
            solve_external(&d, &p, "true", T),
            Err(ExternalError::Template(_))
        ));
    }
}
