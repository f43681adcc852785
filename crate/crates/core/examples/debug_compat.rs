//! Debug harness: one compatibility solve + restoration walk on a problem.

use trf::benchmarks::{initial_point, make_problem};
use trf::nlp::AugLagSolver;
use trf::problem::{BbCategory, BlackBoxCache, EvaluationLedger};
use trf::rm::{build_rm, taylor_stencil, RmForm};
use trf::subproblems::compatibility_step;

fn main() {
    env_logger::init();
    let name = std::env::args().nth(1).unwrap_or_else(|| "welded_beam".into());
    let p = make_problem(&name).unwrap();
    let x0 = initial_point(&name).unwrap();
    let x = p.split(&x0).unwrap();
    let ledger = EvaluationLedger::new();
    let cache = BlackBoxCache::new();
    let (lo, hi) = p.w_bounds();

    let stencil = taylor_stencil(&x.w, 0.5, &lo, &hi);
    let values: Vec<_> = stencil
        .iter()
        .map(|s| cache.eval(&p, s, &ledger, BbCategory::Sampling).unwrap())
        .collect();
    let rm = build_rm(RmForm::TaylorFirstOrder, &stencil, &values, &x.w, 0.5).unwrap();

    println!("y0 = {:?}", x.y.as_slice());
    println!("t(w0) = {:?}", values[0].as_slice());
    println!("r jacobian at center:\n{}", rm.jacobian(&x.w));

    let solver = AugLagSolver::default();
    for delta in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let c = compatibility_step(&p, &rm, &x, delta, 0.8, 1.2, 0.5, &solver, 1e-8);
        println!(
            "delta={delta:6.2} radius={:.3} alpha={:.6e} status={:?} kkt=({:.1e},{:.1e},{:.1e}) inner={} |d|={:.4}",
            c.radius,
            c.alpha,
            c.solution.status,
            c.solution.kkt.stationarity,
            c.solution.kkt.feasibility,
            c.solution.kkt.complementarity,
            c.solution.inner_iterations,
            c.d.amax(),
        );
        let xs = &c.solution.x;
        println!("  x* = {:?}", xs.as_slice());
        println!("  g(x*) = {:?}", p.ineq_value(xs).as_slice());
        println!("  mu = {:?}", c.solution.mu_ineq.as_slice());
        println!("  r(w*) = {:?}", rm.predict(&xs.rows(0, p.n_w).into_owned()).as_slice());
    }
}
