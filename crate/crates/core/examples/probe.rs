//! Quick probe: run every bundled benchmark with a chosen RM form/strategy
//! and print the outcome. Used during development; kept as a usage example.

use trf::benchmarks::{initial_point, make_problem, reference_solution, PROBLEM_NAMES};
use trf::driver::{run, AlgorithmParams, RunOptions, Strategy};
use trf::rm::RmForm;

fn main() {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let form = args
        .get(1)
        .and_then(|s| RmForm::parse(s))
        .unwrap_or(RmForm::TaylorFirstOrder);
    let strategy = args
        .get(2)
        .and_then(|s| Strategy::parse(s))
        .unwrap_or(Strategy::Funnel);
    let only: Option<&str> = args.get(3).map(|s| s.as_str());

    for name in PROBLEM_NAMES {
        if let Some(o) = only {
            if o != name {
                continue;
            }
        }
        let problem = make_problem(name).unwrap();
        let x0 = initial_point(name).unwrap();
        let params = AlgorithmParams::<f64>::default();
        let mut opts = RunOptions::new(form, strategy, x0);
        opts.seed = 42;
        let start = std::time::Instant::now();
        let report = run(&problem, &params, opts);
        if std::env::var("PROBE_TAIL").is_ok() {
            for r in report.trace.iter().rev().take(8).rev() {
                println!(
                    "  k={} {} f={:.9e} th={:.3e} chi={:.3e} D={:.3e} s={:.3e} phi={:?} sn={:.3e} ftr={:.9e} thtr={:.3e} thsw={:.3e}",
                    r.k, r.step_type.name(), r.f, r.theta, r.chi, r.delta, r.sigma,
                    r.phi, r.step_norm, r.f_trial, r.theta_trial, r.theta_switch
                );
            }
        }
        let (reference, tol) = reference_solution(name).unwrap();
        println!(
            "{name:14} {:18} f={:>12.4} (ref {reference:>10.2} ±{tol:.3}) θ={:.2e} χ={:.2e} it={:4} [f/θ/rej/rest {}/{}/{}/{}] bb={:5} {:6.2}s",
            report.status.name(),
            report.f,
            report.theta,
            report.chi,
            report.iterations,
            report.counts.f_type,
            report.counts.theta_type,
            report.counts.rejected,
            report.counts.restoration,
            report.black_box_evals,
            start.elapsed().as_secs_f64()
        );
    }
}
