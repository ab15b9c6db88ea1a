use std::collections::{BTreeSet, HashMap, HashSet};

use crate::kb::{
    ActionSchema, Atom, GroundAction, GroundBranch, GroundPredicate, Literal, Predicate, State,
    Symbol, Term, TypedVar,
};
use crate::pddl::{PddlDomainAst, PddlError, PddlProblemAst};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundingResult {
    /// Sorted by signature; the index is the action's lexicographic rank.
    pub ground_actions: Vec<GroundAction>,
    pub initial: State,
    pub goal: State,
}

type Binding = Vec<(String, Symbol)>;

fn lookup<'a>(binding: &'a Binding, var: &str) -> Option<&'a Symbol> {
    binding.iter().rev().find(|(v, _)| v == var).map(|(_, s)| s)
}

fn resolve(term: &Term, binding: &Binding) -> Option<Symbol> {
    match term {
        Term::Var(v) => lookup(binding, v).cloned(),
        Term::Const(c) => Some(c.clone()),
    }
}

fn ground_atom(atom: &Atom, binding: &Binding) -> Option<GroundPredicate> {
    let args = atom
        .args
        .iter()
        .map(|t| resolve(t, binding))
        .collect::<Option<Vec<_>>>()?;
    Some(GroundPredicate::new(atom.predicate, args))
}

fn literal_vars(lit: &Literal) -> Vec<&str> {
    let terms: Vec<&Term> = match lit {
        Literal::Pos(a) | Literal::Neg(a) => a.args.iter().collect(),
        Literal::Eq(a, b) | Literal::NotEq(a, b) => vec![a, b],
    };
    terms
        .into_iter()
        .filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
        .collect()
}

/// Typed objects of a problem plus the facts no action can change.
pub struct GroundContext {
    by_type: HashMap<String, Vec<Symbol>>,
    type_of: HashMap<Symbol, String>,
    static_preds: BTreeSet<Predicate>,
    static_facts: HashSet<GroundPredicate>,
}

impl GroundContext {
    pub fn new(domain: &PddlDomainAst, problem: &PddlProblemAst) -> Result<Self, PddlError> {
        let declared: HashSet<&str> = domain
            .types
            .iter()
            .map(String::as_str)
            .chain(std::iter::once("object"))
            .collect();
        let mut by_type: HashMap<String, Vec<Symbol>> = HashMap::new();
        let mut type_of: HashMap<Symbol, String> = HashMap::new();
        for o in domain.constants.iter().chain(&problem.objects) {
            if !declared.contains(o.ty.as_str()) {
                return Err(PddlError::TypeMismatch(format!(
                    "object {} has undeclared type {}",
                    o.name, o.ty
                )));
            }
            match type_of.get(&o.name) {
                Some(t) if *t == o.ty => continue,
                Some(t) => {
                    return Err(PddlError::TypeMismatch(format!(
                        "object {} declared as both {t} and {}",
                        o.name, o.ty
                    )))
                }
                None => {}
            }
            type_of.insert(o.name.clone(), o.ty.clone());
            by_type
                .entry(o.ty.clone())
                .or_default()
                .push(o.name.clone());
            if o.ty != "object" {
                by_type
                    .entry("object".into())
                    .or_default()
                    .push(o.name.clone());
            }
        }
        for schema in &domain.actions {
            let vars = schema
                .params
                .iter()
                .chain(schema.conditional.iter().flat_map(|c| &c.forall));
            for v in vars {
                if !declared.contains(v.ty.as_str()) {
                    return Err(PddlError::TypeMismatch(format!(
                        "{}: variable ?{} has undeclared type {}",
                        schema.name, v.name, v.ty
                    )));
                }
            }
        }
        let ctx_types = |fact: &GroundPredicate| -> Result<(), PddlError> {
            for (arg, kind) in fact.args.iter().zip(fact.name.signature()) {
                match type_of.get(arg) {
                    Some(t) if t == kind.type_name() || t == "object" => {}
                    Some(t) => {
                        return Err(PddlError::TypeMismatch(format!(
                            "{fact}: {arg} is a {t}, expected {}",
                            kind.type_name()
                        )))
                    }
                    None => {
                        return Err(PddlError::TypeMismatch(format!(
                            "{fact}: unknown object {arg}"
                        )))
                    }
                }
            }
            Ok(())
        };
        for fact in problem.init.iter().chain(&problem.goal) {
            ctx_types(fact)?;
        }

        let mut fluent = BTreeSet::new();
        for schema in &domain.actions {
            let effects = schema.eff_neg.iter().chain(&schema.eff_pos).chain(
                schema
                    .conditional
                    .iter()
                    .flat_map(|c| c.eff_neg.iter().chain(&c.eff_pos)),
            );
            fluent.extend(effects.map(|a| a.predicate));
        }
        let static_preds: BTreeSet<Predicate> = Predicate::ALL
            .into_iter()
            .filter(|p| !fluent.contains(p))
            .collect();
        let static_facts = problem
            .init
            .iter()
            .filter(|f| static_preds.contains(&f.name))
            .cloned()
            .collect();
        Ok(GroundContext {
            by_type,
            type_of,
            static_preds,
            static_facts,
        })
    }

    fn objects(&self, ty: &str) -> &[Symbol] {
        self.by_type.get(ty).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `Some(false)` when the literal is decided false by equality or the
    /// static facts; `None` while some variable is unbound.
    fn decide(&self, lit: &Literal, binding: &Binding, use_statics: bool) -> Option<bool> {
        match lit {
            Literal::Eq(a, b) => Some(resolve(a, binding)? == resolve(b, binding)?),
            Literal::NotEq(a, b) => Some(resolve(a, binding)? != resolve(b, binding)?),
            Literal::Pos(atom) | Literal::Neg(atom) => {
                let fact = ground_atom(atom, binding)?;
                if !use_statics || !self.static_preds.contains(&atom.predicate) {
                    return Some(true);
                }
                let holds = self.static_facts.contains(&fact);
                Some(if matches!(lit, Literal::Pos(_)) {
                    holds
                } else {
                    !holds
                })
            }
        }
    }

    /// Depth-first enumeration of `vars` with each literal checked as soon as
    /// its last variable is bound.
    fn enumerate(
        &self,
        vars: &[TypedVar],
        lits: &[Literal],
        use_statics: bool,
        binding: &mut Binding,
        out: &mut dyn FnMut(&Binding),
    ) {
        let mut ready: Vec<Vec<&Literal>> = vec![Vec::new(); vars.len() + 1];
        for lit in lits {
            let depth = literal_vars(lit)
                .iter()
                .filter_map(|v| vars.iter().rposition(|tv| tv.name == *v))
                .max()
                .map_or(0, |d| d + 1);
            ready[depth].push(lit);
        }
        if ready[0]
            .iter()
            .any(|l| self.decide(l, binding, use_statics) == Some(false))
        {
            return;
        }
        self.descend(vars, &ready, 0, use_statics, binding, out);
    }

    fn descend(
        &self,
        vars: &[TypedVar],
        ready: &[Vec<&Literal>],
        depth: usize,
        use_statics: bool,
        binding: &mut Binding,
        out: &mut dyn FnMut(&Binding),
    ) {
        if depth == vars.len() {
            out(binding);
            return;
        }
        for obj in self.objects(&vars[depth].ty) {
            binding.push((vars[depth].name.clone(), obj.clone()));
            let ok = ready[depth + 1]
                .iter()
                .all(|l| self.decide(l, binding, use_statics) != Some(false));
            if ok {
                self.descend(vars, ready, depth + 1, use_statics, binding, out);
            }
            binding.pop();
        }
    }

    fn build(&self, schema: &ActionSchema, binding: &mut Binding) -> GroundAction {
        let mut action = GroundAction::noop(&schema.name);
        action.args = schema
            .params
            .iter()
            .map(|p| lookup(binding, &p.name).cloned().expect("bound parameter"))
            .collect();
        for lit in &schema.pre {
            match lit {
                Literal::Pos(a) => {
                    action.pre.insert(ground_atom(a, binding).expect("bound"));
                }
                Literal::Neg(a) => {
                    action
                        .pre_neg
                        .insert(ground_atom(a, binding).expect("bound"));
                }
                Literal::Eq(..) | Literal::NotEq(..) => {}
            }
        }
        action.eff_neg = schema
            .eff_neg
            .iter()
            .map(|a| ground_atom(a, binding).expect("bound"))
            .collect();
        action.eff_pos = schema
            .eff_pos
            .iter()
            .map(|a| ground_atom(a, binding).expect("bound"))
            .collect();
        for cond in &schema.conditional {
            let mut branches = Vec::new();
            self.enumerate(&cond.forall, &cond.when, true, binding, &mut |b| {
                let mut br = GroundBranch {
                    when_pos: BTreeSet::new(),
                    when_neg: BTreeSet::new(),
                    eff_neg: cond
                        .eff_neg
                        .iter()
                        .map(|a| ground_atom(a, b).expect("bound"))
                        .collect(),
                    eff_pos: cond
                        .eff_pos
                        .iter()
                        .map(|a| ground_atom(a, b).expect("bound"))
                        .collect(),
                };
                for lit in &cond.when {
                    match lit {
                        Literal::Pos(a) => {
                            br.when_pos.insert(ground_atom(a, b).expect("bound"));
                        }
                        Literal::Neg(a) => {
                            br.when_neg.insert(ground_atom(a, b).expect("bound"));
                        }
                        Literal::Eq(..) | Literal::NotEq(..) => {}
                    }
                }
                branches.push(br);
            });
            action.conditional.extend(branches);
        }
        action
    }

    /// All bindings of every schema whose static preconditions hold, sorted
    /// by signature.
    pub fn ground_all(&self, domain: &PddlDomainAst) -> Vec<GroundAction> {
        let mut out = Vec::new();
        for schema in &domain.actions {
            let mut bindings = Vec::new();
            self.enumerate(
                &schema.params,
                &schema.pre,
                true,
                &mut Vec::new(),
                &mut |b| bindings.push(b.clone()),
            );
            for mut b in bindings {
                out.push(self.build(schema, &mut b));
            }
        }
        out.sort_by_cached_key(GroundAction::signature);
        out
    }

    /// Binds `schema` to explicit arguments. Objects must exist with the
    /// parameter types and equality constraints must hold; other
    /// preconditions are left for execution to check.
    pub fn instantiate(
        &self,
        schema: &ActionSchema,
        args: &[Symbol],
    ) -> Result<GroundAction, String> {
        if args.len() != schema.params.len() {
            return Err(format!(
                "{} takes {} argument(s), got {}",
                schema.name,
                schema.params.len(),
                args.len()
            ));
        }
        let mut binding = Binding::new();
        for (p, a) in schema.params.iter().zip(args) {
            match self.type_of.get(a) {
                None => return Err(format!("unknown object {a}")),
                Some(t) if p.ty != "object" && *t != p.ty => {
                    return Err(format!("{a} is a {t}, but ?{} expects {}", p.name, p.ty))
                }
                Some(_) => binding.push((p.name.clone(), a.clone())),
            }
        }
        for lit in &schema.pre {
            if matches!(lit, Literal::Eq(..) | Literal::NotEq(..))
                && self.decide(lit, &binding, false) == Some(false)
            {
                let show = |t: &Term| {
                    resolve(t, &binding).map_or_else(|| t.to_string(), |s| s.to_string())
                };
                let text = match lit {
                    Literal::Eq(a, b) => format!("(= {} {})", show(a), show(b)),
                    Literal::NotEq(a, b) => format!("(not (= {} {}))", show(a), show(b)),
                    _ => unreachable!(),
                };
                return Err(format!("equality constraint {text} fails"));
            }
        }
        Ok(self.build(schema, &mut binding))
    }
}

pub fn ground(
    domain: &PddlDomainAst,
    problem: &PddlProblemAst,
) -> Result<GroundingResult, PddlError> {
    let ctx = GroundContext::new(domain, problem)?;
    Ok(GroundingResult {
        ground_actions: ctx.ground_all(domain),
        initial: problem.init_state(),
        goal: problem.goal_state(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{static_facts, transition, Formulation};
    use crate::object_model::{Angle, ObjectSpec, OrientationGrid};
    use crate::pddl::{build_domain, build_problem, TypedObject};

    fn task(links: usize, grid: &OrientationGrid, f: Formulation) -> GroundingResult {
        let spec = ObjectSpec::uniform(links, 1.0);
        let z = vec![grid.values()[0]; links];
        ground(
            &build_domain(f, grid),
            &build_problem(&spec, &z, &z, grid, f).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn relative_clockwise_count_matches_enumeration() {
        let grid = OrientationGrid::from_granularity(90, false).unwrap();
        let g = task(2, &grid, Formulation::Relative);
        let statics = static_facts(2, &grid, Formulation::Relative);
        // Oracle: every joint with two distinct connected links, times every
        // ascending adjacent pair.
        let mut expected = 0;
        for j in 0..2 {
            let links: Vec<usize> = (0..=2)
                .filter(|&l| statics.contains(&GroundPredicate::connected(j, l)))
                .collect();
            let ordered_link_pairs = links.len() * (links.len() - 1);
            expected += ordered_link_pairs * statics.facts_of(Predicate::OrientationOrd).count();
        }
        let cw = g
            .ground_actions
            .iter()
            .filter(|a| a.name == "rotateclockwise")
            .count();
        assert_eq!(cw, expected);
        assert_eq!(cw, 2 * 2 * 3);
    }

    #[test]
    fn absolute_branches_follow_affected_facts() {
        let grid = OrientationGrid::from_granularity(90, true).unwrap();
        let g = task(3, &grid, Formulation::Absolute);
        let statics = static_facts(3, &grid, Formulation::Absolute);
        let pairs = statics.facts_of(Predicate::OrientationOrd).count();
        for a in &g.ground_actions {
            let j = a.joint().unwrap();
            let downstream = statics
                .facts_of(Predicate::Affected)
                .filter(|f| f.args[2] == Symbol::joint(j) && f.args[1] == a.args[0])
                .count();
            assert_eq!(a.conditional.len(), downstream * pairs, "{a}");
            let joints: BTreeSet<_> = a
                .conditional
                .iter()
                .map(|b| b.eff_pos.iter().next().unwrap().args[0].clone())
                .collect();
            assert_eq!(joints.len(), downstream);
        }
        // Proximal pins the held link upstream: one link pair per joint.
        assert_eq!(g.ground_actions.len(), 3 * 2 * 4);
    }

    #[test]
    fn unknown_object_type_is_rejected() {
        let grid = OrientationGrid::from_granularity(90, false).unwrap();
        let f = Formulation::Relative;
        let spec = ObjectSpec::uniform(1, 1.0);
        let mut p = build_problem(&spec, &[Angle::ZERO], &[Angle::ZERO], &grid, f).unwrap();
        p.objects.push(TypedObject {
            name: Symbol::new("gripper"),
            ty: "tool".into(),
        });
        assert!(matches!(
            ground(&build_domain(f, &grid), &p),
            Err(PddlError::TypeMismatch(_))
        ));
    }

    #[test]
    fn ground_actions_are_sorted_and_apply() {
        let grid = OrientationGrid::from_granularity(90, true).unwrap();
        let g = task(2, &grid, Formulation::Absolute);
        let sigs: Vec<String> = g
            .ground_actions
            .iter()
            .map(GroundAction::signature)
            .collect();
        let mut sorted = sigs.clone();
        sorted.sort();
        assert_eq!(sigs, sorted);
        let applicable: Vec<_> = g
            .ground_actions
            .iter()
            .filter(|a| a.applicable(&g.initial))
            .collect();
        assert_eq!(applicable.len(), 4);
        for a in applicable {
            transition(&g.initial, a).unwrap();
        }
    }
}
