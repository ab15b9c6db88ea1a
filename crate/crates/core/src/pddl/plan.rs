use super::sexpr::{parse_all, syntax, Sexpr};
use super::{PddlDomainAst, PddlError, PddlProblemAst};
use crate::kb::{PlanRecord, Symbol};
use crate::planner::GroundContext;

/// One action line of a plan file, before binding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanLine {
    /// 1-based line number in the source text.
    pub line: usize,
    pub name: String,
    pub args: Vec<Symbol>,
}

/// Drops an optional `N:` / `0.000:` step prefix.
fn strip_step_prefix(s: &str) -> &str {
    if let Some((head, rest)) = s.split_once(':') {
        let head = head.trim();
        if !head.is_empty() && head.chars().all(|c| c.is_ascii_digit() || c == '.') {
            return rest.trim_start();
        }
    }
    s
}

pub fn parse_plan_lines(text: &str) -> Result<Vec<PlanLine>, PddlError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split(';').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut body = strip_step_prefix(body);
        // IPC duration suffix, e.g. "(a x) [1.000]".
        if let Some(idx) = body.rfind('[') {
            if body.ends_with(']') && body[..idx].trim_end().ends_with(')') {
                body = body[..idx].trim_end();
            }
        }
        let exprs = parse_all(body).map_err(|e| match e {
            PddlError::Syntax { col, msg, .. } => PddlError::Syntax { line, col, msg },
            other => other,
        })?;
        let items = match exprs.as_slice() {
            [Sexpr::List(items, _)] => items,
            _ => {
                return Err(PddlError::Syntax {
                    line,
                    col: 1,
                    msg: "expected one '(action args...)' per line".into(),
                })
            }
        };
        let mut atoms = items.iter().map(|e| {
            e.as_atom().map(str::to_string).ok_or_else(|| {
                let p = e.pos();
                syntax(
                    super::sexpr::Pos { line, col: p.col },
                    "nested list in plan line",
                )
            })
        });
        let name = match atoms.next() {
            Some(n) => n?,
            None => {
                return Err(PddlError::Syntax {
                    line,
                    col: 1,
                    msg: "empty action".into(),
                })
            }
        };
        let args = atoms
            .map(|a| a.map(Symbol::new))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(PlanLine { line, name, args });
    }
    Ok(out)
}

/// Binds every plan line to a ground action. Objects come from `problem`,
/// which also supplies the bindings of quantified effect variables.
pub fn parse_plan(
    text: &str,
    domain: &PddlDomainAst,
    problem: &PddlProblemAst,
) -> Result<PlanRecord, PddlError> {
    let lines = parse_plan_lines(text)?;
    let ctx = GroundContext::new(domain, problem)?;
    let mut actions = Vec::with_capacity(lines.len());
    for l in lines {
        let schema = domain
            .action(&l.name)
            .ok_or_else(|| PddlError::UnknownAction {
                line: l.line,
                name: l.name.clone(),
            })?;
        if schema.params.len() != l.args.len() {
            return Err(PddlError::ArityMismatch {
                line: l.line,
                name: l.name,
                expected: schema.params.len(),
                found: l.args.len(),
            });
        }
        let action = ctx
            .instantiate(schema, &l.args)
            .map_err(|msg| PddlError::InvalidBinding { line: l.line, msg })?;
        actions.push(action);
    }
    Ok(PlanRecord::new(actions))
}

#[cfg(test)]
mod tests {
    use super::super::{build_domain, build_problem};
    use super::*;
    use crate::kb::Formulation;
    use crate::object_model::{Angle, ObjectSpec, OrientationGrid};

    fn setup(f: Formulation) -> (PddlDomainAst, PddlProblemAst) {
        let g = OrientationGrid::from_granularity(90, false).unwrap();
        let spec = ObjectSpec::uniform(2, 1.0);
        let z = [Angle::ZERO, Angle::ZERO];
        (
            build_domain(f, &g),
            build_problem(&spec, &z, &z, &g, f).unwrap(),
        )
    }

    #[test]
    fn single_line_plan() {
        let (d, p) = setup(Formulation::Relative);
        let plan = parse_plan("(rotateclockwise l1 l2 j1 o0 o90)\n", &d, &p).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(
            plan.actions[0].signature(),
            "(rotateclockwise l1 l2 j1 o0 o90)"
        );
    }

    #[test]
    fn prefixes_comments_and_case() {
        let (d, p) = setup(Formulation::Absolute);
        let text = "; produced by a planner\n0: (ROTATECLOCKWISE l1 l0 j1 o0 o90)\n\n1.000: (rotateanticlockwise l2 l1 j2 o90 o0) [1]\n; cost = 2\n";
        let plan = parse_plan(text, &d, &p).unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(plan.actions[1].name, "rotateanticlockwise");
        // One branch per possible downstream joint and orientation pair.
        assert!(!plan.actions[0].conditional.is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let (d, p) = setup(Formulation::Relative);
        assert!(matches!(
            parse_plan("(rotateclockwise l0 l1 j1 o0 o90)\n(fly l0)\n", &d, &p),
            Err(PddlError::UnknownAction { line: 2, .. })
        ));
        assert!(matches!(
            parse_plan("(rotateclockwise l0 l1 j1)", &d, &p),
            Err(PddlError::ArityMismatch {
                line: 1,
                expected: 5,
                found: 3,
                ..
            })
        ));
        assert!(matches!(
            parse_plan("(rotateclockwise l0 l0 j1 o0 o90)", &d, &p),
            Err(PddlError::InvalidBinding { line: 1, .. })
        ));
        assert!(matches!(
            parse_plan("(rotateclockwise l0 j1 j1 o0 o90)", &d, &p),
            Err(PddlError::InvalidBinding { line: 1, .. })
        ));
        assert!(matches!(
            parse_plan("(rotateclockwise (l0))", &d, &p),
            Err(PddlError::Syntax { line: 1, .. })
        ));
    }
}
