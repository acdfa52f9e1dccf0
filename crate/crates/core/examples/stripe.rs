//! Iteration counts of every method on the stripe fixture.
//!
//! cargo run --release -p inpaint-core --example stripe [n] [hole]

use inpaint_core::bbs::{bbs_run, BbsConfig};
use inpaint_core::energy::GradientKind;
use inpaint_core::fixtures;
use inpaint_core::flow::{harmonic_init, minimize, SolverConfig};
use inpaint_core::grid::extract_domain;
use inpaint_core::operators::build_operators;
use inpaint_core::precond::factor_preconditioner;
use std::time::Instant;

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let n = args.next().unwrap_or(64);
    let hole = args.next().unwrap_or(16);
    let (img, mask) = fixtures::stripe(n, hole);
    let d = extract_domain(&img, &mask).unwrap();
    let ops = build_operators(&d, d.shape()).unwrap();
    let fact = factor_preconditioner(&d).unwrap();
    let init = harmonic_init(&img, &d, &SolverConfig::default()).unwrap();
    println!("method  stop        iters  |F|^2 initial  |F|^2 final  ms");
    for kind in [
        GradientKind::EulerLagrange,
        GradientKind::Sobolev(1),
        GradientKind::Sobolev(2),
        GradientKind::Sobolev(3),
    ] {
        let t = Instant::now();
        let cfg = SolverConfig {
            log_every: 0,
            ..SolverConfig::with_kind(kind)
        };
        let s = minimize(&init, &d, &ops, &fact, &cfg).unwrap();
        print_row(&kind.to_string(), &s, t);
    }
    let t = Instant::now();
    let s = bbs_run(&init, &d, &BbsConfig { log_every: 0, ..Default::default() }).unwrap();
    print_row("bbs", &s, t);
}

fn print_row(name: &str, s: &inpaint_core::flow::Solution, t: Instant) {
    println!(
        "{name:<7} {:<11} {:>5}  {:>13.3e}  {:>11.3e}  {}",
        s.stop.to_string(),
        s.trace.iterations(),
        s.trace.initial_residual2().unwrap(),
        s.trace.final_residual2().unwrap(),
        t.elapsed().as_millis()
    );
}
