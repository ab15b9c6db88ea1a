use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{PddlDomainAst, PddlError, PddlProblemAst, Requirement, TypedObject};
use crate::kb::{
    encode_state, goal_state, ActionSchema, Atom, ConditionalEffect, Formulation, Kind, Literal,
    Predicate, Symbol, Term, TypedVar,
};
use crate::object_model::{check_on_grid, Angle, ObjectSpec, OrientationGrid};

pub const ROTATE_CLOCKWISE: &str = "rotateclockwise";
pub const ROTATE_ANTICLOCKWISE: &str = "rotateanticlockwise";

fn v(name: &str) -> Term {
    Term::Var(name.to_string())
}

fn atom(p: Predicate, args: &[&str]) -> Atom {
    Atom::new(p, args.iter().map(|a| v(a)).collect())
}

fn rotate_schema(formulation: Formulation, clockwise: bool) -> ActionSchema {
    use Predicate::*;
    let ord = |from: &str, to: &str| {
        if clockwise {
            atom(OrientationOrd, &[from, to])
        } else {
            atom(OrientationOrd, &[to, from])
        }
    };
    let mut pre = vec![
        Literal::Pos(atom(Connected, &["j1", "l1"])),
        Literal::Pos(atom(Connected, &["j1", "l2"])),
        Literal::NotEq(v("l1"), v("l2")),
    ];
    if formulation == Formulation::Absolute {
        pre.push(Literal::Pos(atom(Proximal, &["j1", "l1"])));
    }
    pre.push(Literal::Pos(atom(HasOrientation, &["j1", "o1"])));
    pre.push(Literal::Pos(ord("o1", "o2")));

    let conditional = match formulation {
        Formulation::Relative => vec![],
        Formulation::Absolute => vec![ConditionalEffect {
            forall: vec![
                TypedVar::new("j2", "joint"),
                TypedVar::new("o3", "orientation"),
                TypedVar::new("o4", "orientation"),
            ],
            when: vec![
                Literal::Pos(atom(Affected, &["j2", "l1", "j1"])),
                Literal::NotEq(v("j2"), v("j1")),
                Literal::Pos(atom(HasOrientation, &["j2", "o3"])),
                Literal::Pos(ord("o3", "o4")),
            ],
            eff_neg: vec![atom(HasOrientation, &["j2", "o3"])],
            eff_pos: vec![atom(HasOrientation, &["j2", "o4"])],
        }],
    };

    ActionSchema {
        name: if clockwise {
            ROTATE_CLOCKWISE
        } else {
            ROTATE_ANTICLOCKWISE
        }
        .to_string(),
        params: vec![
            TypedVar::new("l1", "link"),
            TypedVar::new("l2", "link"),
            TypedVar::new("j1", "joint"),
            TypedVar::new("o1", "orientation"),
            TypedVar::new("o2", "orientation"),
        ],
        pre,
        eff_neg: vec![atom(HasOrientation, &["j1", "o1"])],
        eff_pos: vec![atom(HasOrientation, &["j1", "o2"])],
        conditional,
    }
}

pub fn build_domain(formulation: Formulation, grid: &OrientationGrid) -> PddlDomainAst {
    let mut requirements: BTreeSet<Requirement> = [
        Requirement::Strips,
        Requirement::Typing,
        Requirement::NegativePreconditions,
        Requirement::Equality,
    ]
    .into();
    let mut predicates = vec![
        Predicate::Connected,
        Predicate::HasOrientation,
        Predicate::OrientationOrd,
    ];
    if formulation == Formulation::Absolute {
        requirements.insert(Requirement::ConditionalEffects);
        predicates.push(Predicate::Affected);
        predicates.push(Predicate::Proximal);
    }
    PddlDomainAst {
        name: format!("articulated-{formulation}"),
        requirements,
        types: vec!["link".into(), "joint".into(), "orientation".into()],
        constants: grid
            .values()
            .iter()
            .map(|&a| TypedObject {
                name: Symbol::orientation(a),
                ty: "orientation".into(),
            })
            .collect(),
        predicates,
        actions: vec![
            rotate_schema(formulation, true),
            rotate_schema(formulation, false),
        ],
    }
}

/// Problem from an initial and a goal configuration (absolute or relative
/// values, per `formulation`).
pub fn build_problem(
    spec: &ObjectSpec,
    init: &[Angle],
    goal: &[Angle],
    grid: &OrientationGrid,
    formulation: Formulation,
) -> Result<PddlProblemAst, PddlError> {
    let n = spec.joint_count();
    let init_state = encode_state(init, spec, grid, formulation)?;
    check_on_grid(goal, grid)?;
    if goal.len() != n {
        return Err(crate::object_model::ModelError::LengthMismatch {
            expected: n,
            found: goal.len(),
        }
        .into());
    }
    let mut objects: Vec<TypedObject> = (0..=n)
        .map(|l| TypedObject {
            name: Symbol::link(l),
            ty: "link".into(),
        })
        .collect();
    objects.extend((0..n).map(|j| TypedObject {
        name: Symbol::joint(j),
        ty: "joint".into(),
    }));
    let mut init: Vec<_> = init_state.0.into_iter().collect();
    init.sort_by_cached_key(|f| f.to_pddl());
    let mut goal: Vec<_> = goal_state(goal).0.into_iter().collect();
    goal.sort_by_cached_key(|f| f.to_pddl());
    Ok(PddlProblemAst {
        name: format!("chain-{n}-{}-{formulation}", grid.len()),
        domain: format!("articulated-{formulation}"),
        objects,
        init,
        goal,
    })
}

pub fn emit_domain(formulation: Formulation, grid: &OrientationGrid) -> String {
    render_domain(&build_domain(formulation, grid))
}

pub fn emit_problem(
    spec: &ObjectSpec,
    init: &[Angle],
    goal: &[Angle],
    grid: &OrientationGrid,
    formulation: Formulation,
) -> Result<String, PddlError> {
    Ok(render_problem(&build_problem(
        spec,
        init,
        goal,
        grid,
        formulation,
    )?))
}

/// `?a ?b - t ?c - u`, grouping runs of the same type.
fn typed_list<'a>(items: impl Iterator<Item = (String, &'a str)>) -> String {
    let mut out = String::new();
    let mut pending: Option<&str> = None;
    for (name, ty) in items {
        if let Some(prev) = pending {
            if prev != ty {
                let _ = write!(out, " - {prev} ");
            } else {
                out.push(' ');
            }
        }
        out.push_str(&name);
        pending = Some(ty);
    }
    if let Some(prev) = pending {
        let _ = write!(out, " - {prev}");
    }
    out
}

fn render_atom(a: &Atom) -> String {
    let mut s = format!("({}", a.predicate.pddl_name());
    for t in a.predicate.pddl_permutation(a.args.iter().collect()) {
        let _ = write!(s, " {t}");
    }
    s.push(')');
    s
}

fn render_literal(l: &Literal) -> String {
    match l {
        Literal::Pos(a) => render_atom(a),
        Literal::Neg(a) => format!("(not {})", render_atom(a)),
        Literal::Eq(a, b) => format!("(= {a} {b})"),
        Literal::NotEq(a, b) => format!("(not (= {a} {b}))"),
    }
}

fn render_conjunction(out: &mut String, items: &[String], indent: usize) {
    let pad = " ".repeat(indent);
    out.push_str("(and");
    for item in items {
        let _ = write!(out, "\n{pad}{item}");
    }
    out.push(')');
}

fn effect_lines(neg: &[Atom], pos: &[Atom]) -> Vec<String> {
    neg.iter()
        .map(|a| format!("(not {})", render_atom(a)))
        .chain(pos.iter().map(render_atom))
        .collect()
}

fn render_action(out: &mut String, a: &ActionSchema) {
    let _ = write!(out, "  (:action {}\n    :parameters (", a.name);
    out.push_str(&typed_list(
        a.params
            .iter()
            .map(|p| (format!("?{}", p.name), p.ty.as_str())),
    ));
    out.push_str(")\n    :precondition ");
    let pre: Vec<String> = a.pre.iter().map(render_literal).collect();
    render_conjunction(out, &pre, 6);
    out.push_str("\n    :effect ");
    let mut eff = effect_lines(&a.eff_neg, &a.eff_pos);
    for c in &a.conditional {
        let mut s = String::new();
        let body = {
            let mut b = String::new();
            render_conjunction(&mut b, &effect_lines(&c.eff_neg, &c.eff_pos), 12);
            b
        };
        let guarded = if c.when.is_empty() {
            body
        } else {
            let mut w = String::from("(when ");
            let cond: Vec<String> = c.when.iter().map(render_literal).collect();
            render_conjunction(&mut w, &cond, 12);
            let _ = write!(w, "\n          {body})");
            w
        };
        if c.forall.is_empty() {
            s.push_str(&guarded);
        } else {
            let vars = typed_list(
                c.forall
                    .iter()
                    .map(|p| (format!("?{}", p.name), p.ty.as_str())),
            );
            let _ = write!(s, "(forall ({vars})\n        {guarded})");
        }
        eff.push(s);
    }
    render_conjunction(out, &eff, 6);
    out.push_str(")\n");
}

fn predicate_decl(p: Predicate) -> String {
    let kinds = p.pddl_permutation(p.signature().to_vec());
    let mut counts = [0usize; 3];
    let params = kinds.iter().map(|k| {
        let (letter, slot) = match k {
            Kind::Joint => ("j", 0),
            Kind::Link => ("l", 1),
            Kind::Orientation => ("o", 2),
        };
        counts[slot] += 1;
        (format!("?{letter}{}", counts[slot]), k.type_name())
    });
    let params: Vec<_> = params.collect();
    format!("({} {})", p.pddl_name(), typed_list(params.into_iter()))
}

pub fn render_domain(d: &PddlDomainAst) -> String {
    let mut out = format!("(define (domain {})\n  (:requirements", d.name);
    for r in &d.requirements {
        let _ = write!(out, " {r}");
    }
    out.push_str(")\n");
    let _ = writeln!(out, "  (:types {})", d.types.join(" "));
    if !d.constants.is_empty() {
        let _ = writeln!(
            out,
            "  (:constants {})",
            typed_list(
                d.constants
                    .iter()
                    .map(|c| (c.name.to_string(), c.ty.as_str()))
            )
        );
    }
    out.push_str("  (:predicates");
    for p in &d.predicates {
        let _ = write!(out, "\n    {}", predicate_decl(*p));
    }
    out.push_str(")\n");
    for a in &d.actions {
        render_action(&mut out, a);
    }
    out.push_str(")\n");
    out
}

pub fn render_problem(p: &PddlProblemAst) -> String {
    let mut out = format!("(define (problem {})\n  (:domain {})\n", p.name, p.domain);
    let _ = writeln!(
        out,
        "  (:objects {})",
        typed_list(
            p.objects
                .iter()
                .map(|o| (o.name.to_string(), o.ty.as_str()))
        )
    );
    out.push_str("  (:init");
    for f in &p.init {
        let _ = write!(out, "\n    {}", f.to_pddl());
    }
    out.push_str(")\n  (:goal ");
    let goal: Vec<String> = p.goal.iter().map(|f| f.to_pddl()).collect();
    render_conjunction(&mut out, &goal, 4);
    out.push_str("))\n");
    out
}
