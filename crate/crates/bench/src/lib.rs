//! Shared fixtures for the criterion benches.

use chainplan_core::benchmark::generate_instance;
use chainplan_core::pddl::{build_domain, build_problem};
use chainplan_core::{Formulation, PddlDomainAst, PddlProblemAst};

/// Domain and problem of a reproducible random instance.
pub fn fixture(
    links: usize,
    orientations: u16,
    formulation: Formulation,
    seed: u64,
) -> (PddlDomainAst, PddlProblemAst) {
    let inst = generate_instance(links, orientations, seed);
    let domain = build_domain(formulation, &inst.grid);
    let problem = build_problem(&inst.spec, &inst.init, &inst.goal, &inst.grid, formulation)
        .expect("generated instances are on-grid");
    (domain, problem)
}
