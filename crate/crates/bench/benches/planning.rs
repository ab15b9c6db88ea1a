use std::hint::black_box;
use std::time::Duration;

use chainplan_bench::fixture;
use chainplan_core::kb::transition;
use chainplan_core::pddl::{parse_domain, parse_problem, render_domain, render_problem};
use chainplan_core::planner::{ground, solve_bfs, solve_gbfs};
use chainplan_core::Formulation;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const TIMEOUT: Duration = Duration::from_secs(60);

fn grounding(c: &mut Criterion) {
    let mut g = c.benchmark_group("ground");
    for f in Formulation::BOTH {
        for links in [4, 8, 12] {
            let (d, p) = fixture(links, 8, f, 7);
            g.bench_with_input(
                BenchmarkId::new(f.to_string(), links),
                &(d, p),
                |b, (d, p)| b.iter(|| ground(black_box(d), black_box(p)).unwrap()),
            );
        }
    }
    g.finish();
}

fn search(c: &mut Criterion) {
    let mut g = c.benchmark_group("gbfs");
    g.sample_size(20);
    for f in Formulation::BOTH {
        for links in [4, 8] {
            let (d, p) = fixture(links, 8, f, 7);
            let gr = ground(&d, &p).unwrap();
            g.bench_with_input(BenchmarkId::new(f.to_string(), links), &gr, |b, gr| {
                b.iter(|| solve_gbfs(black_box(gr), TIMEOUT, 0))
            });
        }
    }
    g.finish();

    let mut g = c.benchmark_group("bfs");
    g.sample_size(10);
    let (d, p) = fixture(4, 4, Formulation::Relative, 7);
    let gr = ground(&d, &p).unwrap();
    g.bench_function("relative/4", |b| {
        b.iter(|| solve_bfs(black_box(&gr), TIMEOUT))
    });
    g.finish();
}

fn step(c: &mut Criterion) {
    let (d, p) = fixture(8, 8, Formulation::Relative, 7);
    let gr = ground(&d, &p).unwrap();
    let action = gr
        .ground_actions
        .iter()
        .find(|a| a.applicable(&gr.initial))
        .unwrap()
        .clone();
    c.bench_function("transition/relative/8", |b| {
        b.iter(|| transition(black_box(&gr.initial), black_box(&action)).unwrap())
    });
}

fn codec(c: &mut Criterion) {
    let (d, p) = fixture(12, 12, Formulation::Absolute, 7);
    let (dt, pt) = (render_domain(&d), render_problem(&p));
    c.bench_function("parse/domain", |b| {
        b.iter(|| parse_domain(black_box(&dt)).unwrap())
    });
    c.bench_function("parse/problem/12x12", |b| {
        b.iter(|| parse_problem(black_box(&pt)).unwrap())
    });
}

criterion_group!(benches, grounding, search, step, codec);
criterion_main!(benches);
