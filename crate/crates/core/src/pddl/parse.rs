use std::collections::{BTreeSet, HashSet};

use super::sexpr::{parse_one, syntax, Pos, Sexpr};
use super::{PddlDomainAst, PddlError, PddlProblemAst, Requirement, TypedObject};
use crate::kb::{
    ActionSchema, Atom, ConditionalEffect, GroundPredicate, Literal, Predicate, Symbol, Term,
    TypedVar,
};

fn unsupported(token: &str, pos: Pos) -> PddlError {
    PddlError::UnsupportedFeature {
        token: token.to_string(),
        line: pos.line,
        col: pos.col,
    }
}

fn expect_list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], PddlError> {
    e.as_list()
        .ok_or_else(|| syntax(e.pos(), format!("expected {what}")))
}

fn expect_atom<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_atom()
        .ok_or_else(|| syntax(e.pos(), format!("expected {what}")))
}

/// `(define (<kind> name) sections...)`; returns the name and the sections.
fn header<'a>(e: &'a Sexpr, kind: &str) -> Result<(String, &'a [Sexpr]), PddlError> {
    let items = expect_list(e, "(define ...)")?;
    match items.first().and_then(Sexpr::as_atom) {
        Some("define") => {}
        _ => return Err(syntax(e.pos(), "expected (define ...)")),
    }
    let decl = items
        .get(1)
        .ok_or_else(|| syntax(e.pos(), format!("missing ({kind} <name>)")))?;
    let d = expect_list(decl, "declaration")?;
    if d.len() != 2 || d[0].as_atom() != Some(kind) {
        return Err(syntax(decl.pos(), format!("expected ({kind} <name>)")));
    }
    Ok((expect_atom(&d[1], "name")?.to_string(), &items[2..]))
}

struct TypedEntry {
    name: String,
    ty: String,
    pos: Pos,
}

fn typed_list(items: &[Sexpr]) -> Result<Vec<TypedEntry>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut iter = items.iter();
    while let Some(item) = iter.next() {
        let name = expect_atom(item, "name")?;
        if name == "-" {
            let ty_expr = iter
                .next()
                .ok_or_else(|| syntax(item.pos(), "missing type after '-'"))?;
            if ty_expr.head() == Some("either") {
                return Err(unsupported("either", ty_expr.pos()));
            }
            let ty = expect_atom(ty_expr, "type name")?;
            if pending.is_empty() {
                return Err(syntax(item.pos(), "type without names"));
            }
            out.extend(pending.drain(..).map(|(name, pos)| TypedEntry {
                name,
                ty: ty.to_string(),
                pos,
            }));
        } else {
            pending.push((name.to_string(), item.pos()));
        }
    }
    out.extend(pending.into_iter().map(|(name, pos)| TypedEntry {
        name,
        ty: "object".into(),
        pos,
    }));
    Ok(out)
}

fn vars(items: &[Sexpr]) -> Result<Vec<TypedVar>, PddlError> {
    typed_list(items)?
        .into_iter()
        .map(|e| match e.name.strip_prefix('?') {
            Some(v) if !v.is_empty() => Ok(TypedVar::new(v, &e.ty)),
            _ => Err(syntax(
                e.pos,
                format!("expected a variable, found '{}'", e.name),
            )),
        })
        .collect()
}

struct Scope<'a> {
    vars: HashSet<String>,
    constants: &'a HashSet<String>,
    predicates: &'a [Predicate],
}

impl Scope<'_> {
    fn term(&self, e: &Sexpr) -> Result<Term, PddlError> {
        let s = expect_atom(e, "term")?;
        match s.strip_prefix('?') {
            Some(v) if self.vars.contains(v) => Ok(Term::Var(v.to_string())),
            Some(v) => Err(syntax(e.pos(), format!("unbound variable ?{v}"))),
            None if self.constants.contains(s) => Ok(Term::Const(Symbol::new(s))),
            None => Err(syntax(e.pos(), format!("undeclared constant '{s}'"))),
        }
    }

    fn atom(&self, e: &Sexpr) -> Result<Atom, PddlError> {
        let items = expect_list(e, "atom")?;
        let name = items
            .first()
            .map(|h| expect_atom(h, "predicate name"))
            .transpose()?
            .ok_or_else(|| syntax(e.pos(), "empty atom"))?;
        let predicate = Predicate::from_pddl_name(name)
            .filter(|p| self.predicates.contains(p))
            .ok_or_else(|| syntax(e.pos(), format!("undeclared predicate '{name}'")))?;
        if items.len() - 1 != predicate.arity() {
            return Err(syntax(
                e.pos(),
                format!("'{name}' takes {} argument(s)", predicate.arity()),
            ));
        }
        let args = items[1..]
            .iter()
            .map(|t| self.term(t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Atom::new(predicate, predicate.pddl_permutation(args)))
    }

    fn literal(&self, e: &Sexpr) -> Result<Literal, PddlError> {
        match e.head() {
            Some("not") => {
                let items = expect_list(e, "negation")?;
                if items.len() != 2 {
                    return Err(syntax(e.pos(), "(not ...) takes one argument"));
                }
                match self.literal(&items[1])? {
                    Literal::Pos(a) => Ok(Literal::Neg(a)),
                    Literal::Eq(a, b) => Ok(Literal::NotEq(a, b)),
                    _ => Err(syntax(items[1].pos(), "nested negation")),
                }
            }
            Some("=") => {
                let items = expect_list(e, "equality")?;
                if items.len() != 3 {
                    return Err(syntax(e.pos(), "(= ...) takes two arguments"));
                }
                Ok(Literal::Eq(self.term(&items[1])?, self.term(&items[2])?))
            }
            Some(h @ ("or" | "imply" | "exists" | "forall" | "when" | "preference")) => {
                Err(unsupported(h, e.pos()))
            }
            Some(h @ ("<" | ">" | "<=" | ">=")) => Err(unsupported(h, e.pos())),
            _ => Ok(Literal::Pos(self.atom(e)?)),
        }
    }

    fn conjunction(&self, e: &Sexpr, out: &mut Vec<Literal>) -> Result<(), PddlError> {
        if e.head() == Some("and") {
            for c in &expect_list(e, "conjunction")?[1..] {
                self.conjunction(c, out)?;
            }
            Ok(())
        } else if e.as_list().is_some_and(|l| l.is_empty()) {
            Ok(())
        } else {
            out.push(self.literal(e)?);
            Ok(())
        }
    }

    /// Plain add/delete effects.
    fn simple_effects(
        &self,
        e: &Sexpr,
        neg: &mut Vec<Atom>,
        pos: &mut Vec<Atom>,
    ) -> Result<(), PddlError> {
        match e.head() {
            Some("and") => {
                for c in &expect_list(e, "effect")?[1..] {
                    self.simple_effects(c, neg, pos)?;
                }
                Ok(())
            }
            Some("not") => match self.literal(e)? {
                Literal::Neg(a) => {
                    neg.push(a);
                    Ok(())
                }
                _ => Err(syntax(e.pos(), "only atoms may be deleted")),
            },
            Some(h @ ("forall" | "when")) => Err(unsupported(h, e.pos())),
            Some(h @ ("increase" | "decrease" | "assign" | "scale-up" | "scale-down")) => {
                Err(unsupported(h, e.pos()))
            }
            _ => {
                pos.push(self.atom(e)?);
                Ok(())
            }
        }
    }

    fn when(&self, e: &Sexpr, forall: Vec<TypedVar>) -> Result<ConditionalEffect, PddlError> {
        let items = expect_list(e, "when")?;
        if items.len() != 3 {
            return Err(syntax(e.pos(), "(when <condition> <effect>)"));
        }
        let mut when = Vec::new();
        self.conjunction(&items[1], &mut when)?;
        let (mut eff_neg, mut eff_pos) = (Vec::new(), Vec::new());
        self.simple_effects(&items[2], &mut eff_neg, &mut eff_pos)?;
        Ok(ConditionalEffect {
            forall,
            when,
            eff_neg,
            eff_pos,
        })
    }

    fn effects(&mut self, e: &Sexpr, schema: &mut ActionSchema) -> Result<(), PddlError> {
        match e.head() {
            Some("and") => {
                for c in &expect_list(e, "effect")?[1..] {
                    self.effects(c, schema)?;
                }
                Ok(())
            }
            Some("forall") => {
                let items = expect_list(e, "forall")?;
                if items.len() != 3 {
                    return Err(syntax(e.pos(), "(forall (<vars>) <effect>)"));
                }
                let bound = vars(expect_list(&items[1], "variable list")?)?;
                let added: Vec<String> = bound
                    .iter()
                    .filter(|v| self.vars.insert(v.name.clone()))
                    .map(|v| v.name.clone())
                    .collect();
                let body = &items[2];
                let result = if body.head() == Some("when") {
                    self.when(body, bound)
                } else {
                    let (mut eff_neg, mut eff_pos) = (Vec::new(), Vec::new());
                    self.simple_effects(body, &mut eff_neg, &mut eff_pos)
                        .map(|_| ConditionalEffect {
                            forall: bound,
                            when: vec![],
                            eff_neg,
                            eff_pos,
                        })
                };
                for v in added {
                    self.vars.remove(&v);
                }
                schema.conditional.push(result?);
                Ok(())
            }
            Some("when") => {
                let c = self.when(e, vec![])?;
                schema.conditional.push(c);
                Ok(())
            }
            _ => self.simple_effects(e, &mut schema.eff_neg, &mut schema.eff_pos),
        }
    }
}

fn parse_action(
    items: &[Sexpr],
    pos: Pos,
    constants: &HashSet<String>,
    predicates: &[Predicate],
) -> Result<ActionSchema, PddlError> {
    let name = items
        .get(1)
        .map(|n| expect_atom(n, "action name"))
        .transpose()?
        .ok_or_else(|| syntax(pos, "missing action name"))?;
    let mut schema = ActionSchema {
        name: name.to_string(),
        params: vec![],
        pre: vec![],
        eff_neg: vec![],
        eff_pos: vec![],
        conditional: vec![],
    };
    let mut precondition = None;
    let mut effect = None;
    let mut rest = items[2..].iter();
    while let Some(kw) = rest.next() {
        let key = expect_atom(kw, "action keyword")?;
        let value = rest
            .next()
            .ok_or_else(|| syntax(kw.pos(), format!("missing value for {key}")))?;
        match key {
            ":parameters" => schema.params = vars(expect_list(value, "parameter list")?)?,
            ":precondition" => precondition = Some(value),
            ":effect" => effect = Some(value),
            other => return Err(unsupported(other, kw.pos())),
        }
    }
    let mut scope = Scope {
        vars: schema.params.iter().map(|p| p.name.clone()).collect(),
        constants,
        predicates,
    };
    if let Some(p) = precondition {
        scope.conjunction(p, &mut schema.pre)?;
    }
    if let Some(e) = effect {
        scope.effects(e, &mut schema)?;
    }
    Ok(schema)
}

pub fn parse_domain(text: &str) -> Result<PddlDomainAst, PddlError> {
    let top = parse_one(text)?;
    let (name, sections) = header(&top, "domain")?;
    let mut domain = PddlDomainAst {
        name,
        requirements: BTreeSet::new(),
        types: vec![],
        constants: vec![],
        predicates: vec![],
        actions: vec![],
    };
    let mut constant_names = HashSet::new();
    for section in sections {
        let items = expect_list(section, "domain section")?;
        let key = items
            .first()
            .map(|k| expect_atom(k, "section keyword"))
            .transpose()?
            .unwrap_or("");
        match key {
            ":requirements" => {
                for r in &items[1..] {
                    let kw = expect_atom(r, "requirement")?;
                    let req =
                        Requirement::from_keyword(kw).ok_or_else(|| unsupported(kw, r.pos()))?;
                    domain.requirements.insert(req);
                }
            }
            ":types" => {
                for t in typed_list(&items[1..])? {
                    if t.ty != "object" {
                        return Err(unsupported(
                            &format!("subtype {} - {}", t.name, t.ty),
                            t.pos,
                        ));
                    }
                    domain.types.push(t.name);
                }
            }
            ":constants" => {
                for c in typed_list(&items[1..])? {
                    if c.ty != "object" && !domain.types.contains(&c.ty) {
                        return Err(PddlError::TypeMismatch(format!(
                            "constant {} has undeclared type {}",
                            c.name, c.ty
                        )));
                    }
                    constant_names.insert(c.name.clone());
                    domain.constants.push(TypedObject {
                        name: Symbol::new(&c.name),
                        ty: c.ty,
                    });
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    let decl = expect_list(p, "predicate declaration")?;
                    let pname = decl
                        .first()
                        .map(|n| expect_atom(n, "predicate name"))
                        .transpose()?
                        .ok_or_else(|| syntax(p.pos(), "empty predicate declaration"))?;
                    let predicate = Predicate::from_pddl_name(pname)
                        .ok_or_else(|| unsupported(pname, p.pos()))?;
                    let params = vars(&decl[1..])?;
                    let kinds = predicate.pddl_permutation(predicate.signature().to_vec());
                    if params.len() != kinds.len()
                        || params
                            .iter()
                            .zip(&kinds)
                            .any(|(v, k)| v.ty != k.type_name())
                    {
                        return Err(PddlError::TypeMismatch(format!(
                            "predicate {pname} must be declared over ({})",
                            kinds
                                .iter()
                                .map(|k| k.type_name())
                                .collect::<Vec<_>>()
                                .join(" ")
                        )));
                    }
                    domain.predicates.push(predicate);
                }
            }
            ":action" => {
                let action =
                    parse_action(items, section.pos(), &constant_names, &domain.predicates)?;
                domain.actions.push(action);
            }
            other => {
                let token = if other.is_empty() { "(...)" } else { other };
                return Err(unsupported(token, section.pos()));
            }
        }
    }
    Ok(domain)
}

fn ground_atom(e: &Sexpr) -> Result<GroundPredicate, PddlError> {
    let items = expect_list(e, "ground atom")?;
    let name = items
        .first()
        .map(|n| expect_atom(n, "predicate name"))
        .transpose()?
        .ok_or_else(|| syntax(e.pos(), "empty atom"))?;
    if matches!(
        name,
        "not" | "or" | "and" | "imply" | "exists" | "forall" | "=" | "at"
    ) {
        return Err(unsupported(name, e.pos()));
    }
    let predicate = Predicate::from_pddl_name(name).ok_or_else(|| unsupported(name, e.pos()))?;
    let args = items[1..]
        .iter()
        .map(|a| {
            let s = expect_atom(a, "object name")?;
            if s.starts_with('?') {
                return Err(syntax(a.pos(), "variables are not allowed in problems"));
            }
            Ok(Symbol::new(s))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if args.len() != predicate.arity() {
        return Err(syntax(
            e.pos(),
            format!("'{name}' takes {} argument(s)", predicate.arity()),
        ));
    }
    Ok(GroundPredicate::new(
        predicate,
        predicate.pddl_permutation(args),
    ))
}

pub fn parse_problem(text: &str) -> Result<PddlProblemAst, PddlError> {
    let top = parse_one(text)?;
    let (name, sections) = header(&top, "problem")?;
    let mut problem = PddlProblemAst {
        name,
        domain: String::new(),
        objects: vec![],
        init: vec![],
        goal: vec![],
    };
    for section in sections {
        let items = expect_list(section, "problem section")?;
        let key = items
            .first()
            .map(|k| expect_atom(k, "section keyword"))
            .transpose()?
            .unwrap_or("");
        match key {
            ":domain" => {
                problem.domain = items
                    .get(1)
                    .map(|d| expect_atom(d, "domain name"))
                    .transpose()?
                    .ok_or_else(|| syntax(section.pos(), "missing domain name"))?
                    .to_string();
            }
            ":objects" => {
                problem
                    .objects
                    .extend(typed_list(&items[1..])?.into_iter().map(|o| TypedObject {
                        name: Symbol::new(&o.name),
                        ty: o.ty,
                    }));
            }
            ":init" => {
                for f in &items[1..] {
                    problem.init.push(ground_atom(f)?);
                }
            }
            ":goal" => {
                let g = items
                    .get(1)
                    .ok_or_else(|| syntax(section.pos(), "missing goal"))?;
                if g.head() == Some("and") {
                    for f in &expect_list(g, "goal")?[1..] {
                        problem.goal.push(ground_atom(f)?);
                    }
                } else {
                    problem.goal.push(ground_atom(g)?);
                }
            }
            other => {
                let token = if other.is_empty() { "(...)" } else { other };
                return Err(unsupported(token, section.pos()));
            }
        }
    }
    Ok(problem)
}
