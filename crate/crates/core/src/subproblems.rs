//! Assembly of the three inner subproblems the driver solves each iteration:
//! the criticality LP, the compatibility problem and the trust-region
//! subproblem (TRSP).
//!
//! The trust region and the step constraint of the criticality problem use
//! the ∞-norm, so the criticality problem is a plain LP and the other two are
//! box-constrained NLPs for the bundled augmented-Lagrangian solver. The
//! trust-region ball restricts the `(w, z)` components; the `y` components
//! follow the surrogate link `y = r(w)` (fixed at `y^k` in the compatibility
//! problem).

use log::warn;

use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::nlp::{NlpSolution, NlpSolver, NlpSpec, NlpStatus, TrustRegion};
use crate::problem::{EvaluationLedger, GreyBoxProblem, Point};
use crate::rm::ReducedModel;
use crate::scalar::{cst, Real};
use crate::{Matrix, Vector};

/// ∞-norm of the `(w, z)` components of a full-length step vector.
pub fn wz_norm<T: Real>(problem: &GreyBoxProblem<T>, s: &Vector<T>) -> T {
    let mut m = T::zero();
    for i in 0..problem.n_w {
        m = m.max(s[i].abs());
    }
    for i in (problem.n_w + problem.n_y)..problem.dim() {
        m = m.max(s[i].abs());
    }
    m
}

fn wz_mask<T: Real>(problem: &GreyBoxProblem<T>) -> Vec<bool> {
    (0..problem.dim())
        .map(|i| i < problem.n_w || i >= problem.n_w + problem.n_y)
        .collect()
}

/// Criticality measure χ: |min ∇fᵀv| over the linearised constraints with
/// ‖v‖∞ ≤ 1, intersected with the linearised bounds.
///
/// Returns `(χ, degenerate)`; a degenerate (infeasible) linearisation yields
/// χ = 0 with the flag set, and a warning is logged.
pub fn criticality_measure<T: Real>(
    problem: &GreyBoxProblem<T>,
    rm: &ReducedModel<T>,
    x: &Point<T>,
    ledger: &EvaluationLedger,
) -> (T, bool) {
    let xv = x.assemble();
    let gb = match problem.evaluate_glass_box(&xv, ledger) {
        Ok(gb) => gb,
        Err(e) => {
            warn!("criticality: glass-box evaluation failed ({e}); reporting chi = 0");
            return (T::zero(), true);
        }
    };
    let n = problem.dim();
    let n_link = problem.n_y;
    let m_eq = problem.n_eq() + n_link;

    let mut a_eq = Matrix::<T>::zeros(m_eq, n);
    let b_eq = Vector::<T>::zeros(m_eq);
    for i in 0..problem.n_eq() {
        for j in 0..n {
            a_eq[(i, j)] = gb.jac_h[(i, j)];
        }
    }
    if n_link > 0 {
        let jr = rm.jacobian(&x.w);
        for o in 0..n_link {
            for d in 0..problem.n_w {
                a_eq[(problem.n_eq() + o, d)] = -jr[(o, d)];
            }
            a_eq[(problem.n_eq() + o, problem.n_w + o)] = T::one();
        }
    }

    let m_ub = problem.n_ineq();
    let mut a_ub = Matrix::<T>::zeros(m_ub, n);
    let mut b_ub = Vector::<T>::zeros(m_ub);
    for i in 0..m_ub {
        for j in 0..n {
            a_ub[(i, j)] = gb.jac_g[(i, j)];
        }
        b_ub[i] = -gb.g[i];
    }

    let one = T::one();
    let mut lower = Vector::<T>::zeros(n);
    let mut upper = Vector::<T>::zeros(n);
    let plo = problem.lower();
    let phi = problem.upper();
    for i in 0..n {
        let mut lo = -one;
        let mut hi = one;
        if plo[i].is_finite() {
            lo = lo.max(plo[i] - xv[i]);
        }
        if phi[i].is_finite() {
            hi = hi.min(phi[i] - xv[i]);
        }
        if lo > hi {
            let mid = (lo + hi) * cst::<T>(0.5);
            lo = mid;
            hi = mid;
        }
        lower[i] = lo;
        upper[i] = hi;
    }

    let lp = LpProblem {
        c: gb.grad_f,
        a_eq,
        b_eq,
        a_ub,
        b_ub,
        lower,
        upper,
    };
    match solve_lp(&lp) {
        Ok(sol) if sol.status == LpStatus::Optimal => (sol.value.abs(), false),
        Ok(_) => {
            warn!("criticality LP infeasible (degenerate active set); reporting chi = 0");
            (T::zero(), true)
        }
        Err(e) => {
            warn!("criticality LP error ({e}); reporting chi = 0");
            (T::zero(), true)
        }
    }
}

/// Result of the compatibility problem at the current iterate.
#[derive(Debug, Clone)]
pub struct Compatibility<T: Real> {
    /// Feasible displacement d = x̃ − x^k with d_y = 0.
    pub d: Vector<T>,
    /// α = ‖y^k − r(w̃)‖ at the solution.
    pub alpha: T,
    pub solution: NlpSolution<T>,
    /// Shrunken radius κ_Δ·Δ·min(1, κ_μ·Δ^μ) actually used.
    pub radius: T,
}

/// Solve the compatibility problem: minimise ‖y^k − r(w)‖ over (w, z) inside
/// the shrunken trust region, holding y fixed at y^k, subject to the glass
/// constraints.
#[allow(clippy::too_many_arguments)]
pub fn compatibility_step<T: Real>(
    problem: &GreyBoxProblem<T>,
    rm: &ReducedModel<T>,
    x: &Point<T>,
    delta_tr: T,
    kappa_delta: T,
    kappa_mu: T,
    mu_exp: T,
    solver: &dyn NlpSolver<T>,
    tol: T,
) -> Compatibility<T> {
    let radius = kappa_delta * delta_tr * (T::one().min(kappa_mu * delta_tr.powf(mu_exp)));
    let xv = x.assemble();
    let n = problem.dim();
    let n_w = problem.n_w;
    let y_k = x.y.clone();

    let mut lower = problem.lower().clone();
    let mut upper = problem.upper().clone();
    for o in 0..problem.n_y {
        lower[n_w + o] = y_k[o];
        upper[n_w + o] = y_k[o];
    }

    let objective = {
        let y_k = y_k.clone();
        move |v: &Vector<T>| -> (T, Vector<T>) {
            let w = v.rows(0, n_w).into_owned();
            let r = rm.predict(&w);
            let jr = rm.jacobian(&w);
            let resid = &y_k - &r;
            let val = resid.dot(&resid) * cst::<T>(0.5);
            let gw = -(jr.transpose() * &resid);
            let mut grad = Vector::zeros(n);
            for d in 0..n_w {
                grad[d] = gw[d];
            }
            (val, grad)
        }
    };

    let spec = NlpSpec {
        n,
        objective: Box::new(objective),
        eq: if problem.n_eq() > 0 {
            Some(Box::new(move |v: &Vector<T>| {
                (problem.eq_value(v), problem.eq_jac(v))
            }))
        } else {
            None
        },
        ineq: if problem.n_ineq() > 0 {
            Some(Box::new(move |v: &Vector<T>| {
                (problem.ineq_value(v), problem.ineq_jac(v))
            }))
        } else {
            None
        },
        lower,
        upper,
        trust: Some(TrustRegion {
            center: xv.clone(),
            radius,
            mask: wz_mask(problem),
        }),
        x0: xv.clone(),
    };

    let solution = solver.solve(&spec, tol);
    let w_star = solution.x.rows(0, n_w).into_owned();
    let alpha = if problem.n_y > 0 {
        (&y_k - rm.predict(&w_star)).norm()
    } else {
        T::zero()
    };
    let mut d = &solution.x - &xv;
    for o in 0..problem.n_y {
        d[n_w + o] = T::zero();
    }
    Compatibility {
        d,
        alpha,
        solution,
        radius,
    }
}

/// Solve the restoration problem: minimise ‖y − r(w)‖ over the full point
/// (y free, unlike the compatibility check) inside the Δ-ball on (w, z),
/// subject to the glass constraints. Its solution projects the auxiliaries
/// onto the current surrogate while restoring glass feasibility, which is
/// how the restoration phase actually reduces the infeasibility measure.
pub fn restoration_step<T: Real>(
    problem: &GreyBoxProblem<T>,
    rm: &ReducedModel<T>,
    x: &Point<T>,
    delta_tr: T,
    solver: &dyn NlpSolver<T>,
    tol: T,
) -> Compatibility<T> {
    let xv = x.assemble();
    let n = problem.dim();
    let n_w = problem.n_w;
    let n_y = problem.n_y;

    let objective = move |v: &Vector<T>| -> (T, Vector<T>) {
        let w = v.rows(0, n_w).into_owned();
        let r = rm.predict(&w);
        let jr = rm.jacobian(&w);
        let mut resid = Vector::zeros(n_y);
        for o in 0..n_y {
            resid[o] = v[n_w + o] - r[o];
        }
        let val = resid.dot(&resid) * cst::<T>(0.5);
        let gw = -(jr.transpose() * &resid);
        let mut grad = Vector::zeros(n);
        for d in 0..n_w {
            grad[d] = gw[d];
        }
        for o in 0..n_y {
            grad[n_w + o] = resid[o];
        }
        (val, grad)
    };

    let spec = NlpSpec {
        n,
        objective: Box::new(objective),
        eq: if problem.n_eq() > 0 {
            Some(Box::new(move |v: &Vector<T>| {
                (problem.eq_value(v), problem.eq_jac(v))
            }))
        } else {
            None
        },
        ineq: if problem.n_ineq() > 0 {
            Some(Box::new(move |v: &Vector<T>| {
                (problem.ineq_value(v), problem.ineq_jac(v))
            }))
        } else {
            None
        },
        lower: problem.lower().clone(),
        upper: problem.upper().clone(),
        trust: Some(TrustRegion {
            center: xv.clone(),
            radius: delta_tr,
            mask: wz_mask(problem),
        }),
        x0: xv.clone(),
    };

    let solution = solver.solve(&spec, tol);
    let w_star = solution.x.rows(0, n_w).into_owned();
    let alpha = if n_y > 0 {
        let r = rm.predict(&w_star);
        let mut resid = Vector::zeros(n_y);
        for o in 0..n_y {
            resid[o] = solution.x[n_w + o] - r[o];
        }
        resid.norm()
    } else {
        T::zero()
    };
    let d = &solution.x - &xv;
    Compatibility {
        d,
        alpha,
        solution,
        radius: delta_tr,
    }
}

/// Result of the trust-region subproblem.
#[derive(Debug, Clone)]
pub struct TrspResult<T: Real> {
    pub s: Vector<T>,
    pub x_s: Point<T>,
    pub f_s: T,
    pub solution: NlpSolution<T>,
}

/// Solve the TRSP: minimise f over the glass constraints, the link
/// `y = r(w)` and the trust region, warm-started at `x^k + d`.
///
/// The solution is safeguarded against objective regressions: if the inner
/// solver ends above the (feasible) warm start, the warm start is returned.
pub fn solve_trsp<T: Real>(
    problem: &GreyBoxProblem<T>,
    rm: &ReducedModel<T>,
    x: &Point<T>,
    d: &Vector<T>,
    delta_tr: T,
    solver: &dyn NlpSolver<T>,
    tol: T,
) -> TrspResult<T> {
    let xv = x.assemble();
    let n = problem.dim();
    let n_w = problem.n_w;
    let n_y = problem.n_y;
    let n_eq = problem.n_eq();

    let mut x0 = &xv + d;
    let plo = problem.lower();
    let phi = problem.upper();
    for i in 0..n {
        x0[i] = x0[i].max(plo[i]).min(phi[i]);
    }

    let eq = move |v: &Vector<T>| -> (Vector<T>, Matrix<T>) {
        let h = problem.eq_value(v);
        let jh = problem.eq_jac(v);
        let mut vals = Vector::zeros(n_eq + n_y);
        let mut jac = Matrix::zeros(n_eq + n_y, n);
        for i in 0..n_eq {
            vals[i] = h[i];
            for j in 0..n {
                jac[(i, j)] = jh[(i, j)];
            }
        }
        if n_y > 0 {
            let w = v.rows(0, n_w).into_owned();
            let r = rm.predict(&w);
            let jr = rm.jacobian(&w);
            for o in 0..n_y {
                vals[n_eq + o] = v[n_w + o] - r[o];
                for dd in 0..n_w {
                    jac[(n_eq + o, dd)] = -jr[(o, dd)];
                }
                jac[(n_eq + o, n_w + o)] = T::one();
            }
        }
        (vals, jac)
    };

    let spec = NlpSpec {
        n,
        objective: Box::new(move |v: &Vector<T>| {
            (problem.objective_value(v), problem.objective_grad(v))
        }),
        eq: Some(Box::new(eq)),
        ineq: if problem.n_ineq() > 0 {
            Some(Box::new(move |v: &Vector<T>| {
                (problem.ineq_value(v), problem.ineq_jac(v))
            }))
        } else {
            None
        },
        lower: plo.clone(),
        upper: phi.clone(),
        trust: Some(TrustRegion {
            center: xv.clone(),
            radius: delta_tr,
            mask: wz_mask(problem),
        }),
        x0: x0.clone(),
    };

    let mut solution = solver.solve(&spec, tol);

    // Sufficient-decrease safeguard relative to the feasible warm start.
    if solution.status != NlpStatus::NumericFailure {
        let f_warm = problem.objective_value(&x0);
        if solution.objective > f_warm && warm_start_feasible(problem, rm, &x0, tol) {
            solution.x = x0.clone();
            solution.objective = f_warm;
        }
    }

    let x_s = problem.split(&solution.x).expect("solver preserves dimensions");
    let s = &solution.x - &xv;
    let f_s = solution.objective;
    TrspResult {
        s,
        x_s,
        f_s,
        solution,
    }
}

fn warm_start_feasible<T: Real>(
    problem: &GreyBoxProblem<T>,
    rm: &ReducedModel<T>,
    x0: &Vector<T>,
    tol: T,
) -> bool {
    // The objective safeguard may only bind against a start that is feasible
    // at the solver's own tolerance; otherwise a needed feasibility
    // correction (which can raise f) would be discarded.
    let feas_tol = tol;
    let h = problem.eq_value(x0);
    if h.iter().any(|v| v.abs() > feas_tol) {
        return false;
    }
    let g = problem.ineq_value(x0);
    if g.iter().any(|v| *v > feas_tol) {
        return false;
    }
    if problem.n_y > 0 {
        let w = x0.rows(0, problem.n_w).into_owned();
        let r = rm.predict(&w);
        for o in 0..problem.n_y {
            if (x0[problem.n_w + o] - r[o]).abs() > feas_tol {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlp::AugLagSolver;
    use crate::problem::{BbCategory, EvaluationLedger};
    use crate::rm::{build_rm, taylor_stencil, RmForm};

    /// Exact reduced model of an affine black box t(w) = a·w + b.
    fn affine_rm(a: f64, b: f64, center: f64, sigma: f64) -> ReducedModel<f64> {
        let c = Vector::from_column_slice(&[center]);
        let lo = Vector::from_column_slice(&[-1e6]);
        let hi = Vector::from_column_slice(&[1e6]);
        let stencil = taylor_stencil(&c, sigma, &lo, &hi);
        let values: Vec<_> = stencil
            .iter()
            .map(|w| Vector::from_column_slice(&[a * w[0] + b]))
            .collect();
        build_rm(RmForm::TaylorFirstOrder, &stencil, &values, &c, sigma).unwrap()
    }

    fn glass_z_problem() -> GreyBoxProblem<f64> {
        // single glass variable, f = z, no constraints, no black box
        GreyBoxProblem::builder("glass-z", 0, 0, 1)
            .objective(|x| x[0])
            .objective_grad(|x| {
                let mut g = Vector::zeros(x.len());
                g[0] = 1.0;
                g
            })
            .bounds(
                Vector::from_column_slice(&[-10.0]),
                Vector::from_column_slice(&[10.0]),
            )
            .build()
    }

    #[test]
    fn criticality_zero_gradient() {
        // f = (z)² at z = 0: ∇f = 0 → χ = 0
        let p = GreyBoxProblem::<f64>::builder("flat", 0, 0, 1)
            .objective(|x| x[0] * x[0])
            .objective_grad(|x| Vector::from_column_slice(&[2.0 * x[0]]))
            .bounds(
                Vector::from_column_slice(&[-10.0]),
                Vector::from_column_slice(&[10.0]),
            )
            .build();
        let rm = affine_rm(0.0, 0.0, 0.0, 0.5);
        let ledger = EvaluationLedger::new();
        let x = Point::new(Vector::zeros(0), Vector::zeros(0), Vector::from_column_slice(&[0.0]));
        let (chi, degen) = criticality_measure(&p, &rm, &x, &ledger);
        assert!(!degen);
        assert!(chi.abs() < 1e-9);
    }

    #[test]
    fn criticality_unit_gradient() {
        // f = z, unconstrained interior: v* = −1 → χ = 1
        let p = glass_z_problem();
        let rm = affine_rm(0.0, 0.0, 0.0, 0.5);
        let ledger = EvaluationLedger::new();
        let x = Point::new(Vector::zeros(0), Vector::zeros(0), Vector::from_column_slice(&[0.0]));
        let (chi, _) = criticality_measure(&p, &rm, &x, &ledger);
        assert!((chi - 1.0).abs() < 1e-9, "chi = {chi}");
    }

    #[test]
    fn criticality_link_row_halves_w_range() {
        // f = y, link v_y = 2 v_w, |v|∞ ≤ 1 → v_w = −1/2, χ = 1
        let p = GreyBoxProblem::<f64>::builder("linked", 1, 1, 0)
            .objective(|x| x[1])
            .objective_grad(|x| {
                let mut g = Vector::zeros(x.len());
                g[1] = 1.0;
                g
            })
            .black_box(|w| Vector::from_column_slice(&[2.0 * w[0]]))
            .bounds(
                Vector::from_column_slice(&[-100.0, -100.0]),
                Vector::from_column_slice(&[100.0, 100.0]),
            )
            .build();
        let rm = affine_rm(2.0, 0.0, 0.0, 0.5);
        let ledger = EvaluationLedger::new();
        let x = Point::new(
            Vector::from_column_slice(&[0.0]),
            Vector::from_column_slice(&[0.0]),
            Vector::zeros(0),
        );
        let (chi, _) = criticality_measure(&p, &rm, &x, &ledger);
        assert!((chi - 1.0).abs() < 1e-9, "chi = {chi}");
    }

    #[test]
    fn compatibility_zero_when_rm_matches_y() {
        // r(w^k) = y^k exactly → α = 0, d = 0
        let p = GreyBoxProblem::<f64>::builder("exact", 1, 1, 0)
            .objective(|x| x[1])
            .objective_grad(|x| {
                let mut g = Vector::zeros(x.len());
                g[1] = 1.0;
                g
            })
            .black_box(|w| Vector::from_column_slice(&[w[0]]))
            .bounds(
                Vector::from_column_slice(&[-5.0, -5.0]),
                Vector::from_column_slice(&[5.0, 5.0]),
            )
            .build();
        let rm = affine_rm(1.0, 0.0, 1.0, 0.5);
        let x = Point::new(
            Vector::from_column_slice(&[1.0]),
            Vector::from_column_slice(&[1.0]),
            Vector::zeros(0),
        );
        let solver = AugLagSolver::default();
        let c = compatibility_step(&p, &rm, &x, 1.0, 0.8, 1.2, 0.5, &solver, 1e-8);
        assert!(c.alpha < 1e-8, "alpha = {}", c.alpha);
        assert!(c.d.amax() < 1e-6);
    }

    #[test]
    fn compatibility_shrunken_radius_limits_match() {
        // y^k = 2, r(w) = w, w^k = 0: radius = 0.8·1·min(1, 1.2) = 0.8
        // → w* = 0.8, α = 1.2
        let p = GreyBoxProblem::<f64>::builder("gap", 1, 1, 0)
            .objective(|x| x[1])
            .objective_grad(|x| {
                let mut g = Vector::zeros(x.len());
                g[1] = 1.0;
                g
            })
            .black_box(|w| Vector::from_column_slice(&[w[0]]))
            .bounds(
                Vector::from_column_slice(&[-5.0, -5.0]),
                Vector::from_column_slice(&[5.0, 5.0]),
            )
            .build();
        let rm = affine_rm(1.0, 0.0, 0.0, 0.5);
        let x = Point::new(
            Vector::from_column_slice(&[0.0]),
            Vector::from_column_slice(&[2.0]),
            Vector::zeros(0),
        );
        let solver = AugLagSolver::default();
        let c = compatibility_step(&p, &rm, &x, 1.0, 0.8, 1.2, 0.5, &solver, 1e-8);
        assert!((c.radius - 0.8).abs() < 1e-12);
        assert!((c.alpha - 1.2).abs() < 1e-6, "alpha = {}", c.alpha);
        assert!((c.d[0] - 0.8).abs() < 1e-6, "d_w = {}", c.d[0]);
        // incompatible at the default threshold
        assert!(c.alpha > 1e-4);
    }

    #[test]
    fn trsp_glass_only_ball_constrained() {
        // min (z−1)², Δ = 0.5, z^k = 0 → s_z = 0.5
        let p = GreyBoxProblem::<f64>::builder("ball", 0, 0, 1)
            .objective(|x| (x[0] - 1.0) * (x[0] - 1.0))
            .objective_grad(|x| Vector::from_column_slice(&[2.0 * (x[0] - 1.0)]))
            .bounds(
                Vector::from_column_slice(&[-10.0]),
                Vector::from_column_slice(&[10.0]),
            )
            .build();
        let rm = affine_rm(0.0, 0.0, 0.0, 0.5);
        let x = Point::new(Vector::zeros(0), Vector::zeros(0), Vector::from_column_slice(&[0.0]));
        let solver = AugLagSolver::default();
        let r = solve_trsp(&p, &rm, &x, &Vector::zeros(1), 0.5, &solver, 1e-8);
        assert!((r.s[0] - 0.5).abs() < 1e-7, "s = {}", r.s[0]);
        assert!((r.f_s - 0.25).abs() < 1e-7);
    }

    #[test]
    fn trsp_quadratic_link() {
        // f = y, r(w) = w², w^k = 1, Δ = 0.5, w ∈ [0, 2] → w* = 0.5, y* = 0.25
        let p = GreyBoxProblem::<f64>::builder("sq", 1, 1, 0)
            .objective(|x| x[1])
            .objective_grad(|x| {
                let mut g = Vector::zeros(x.len());
                g[1] = 1.0;
                g
            })
            .black_box(|w| Vector::from_column_slice(&[w[0] * w[0]]))
            .bounds(
                Vector::from_column_slice(&[0.0, -10.0]),
                Vector::from_column_slice(&[2.0, 10.0]),
            )
            .build();
        // quadratic RM reproducing w² exactly
        let c = Vector::from_column_slice(&[1.0]);
        let (lo, hi) = p.w_bounds();
        let samples = crate::rm::sample_design(&c, 0.5, RmForm::Quadratic, 3, &lo, &hi).unwrap();
        let values: Vec<_> = samples
            .iter()
            .map(|w| Vector::from_column_slice(&[w[0] * w[0]]))
            .collect();
        let rm = build_rm(RmForm::Quadratic, &samples, &values, &c, 0.5).unwrap();
        let x = Point::new(
            Vector::from_column_slice(&[1.0]),
            Vector::from_column_slice(&[1.0]),
            Vector::zeros(0),
        );
        let solver = AugLagSolver::default();
        let r = solve_trsp(&p, &rm, &x, &Vector::zeros(2), 0.5, &solver, 1e-8);
        assert!((r.x_s.w[0] - 0.5).abs() < 1e-6, "w = {}", r.x_s.w[0]);
        assert!((r.x_s.y[0] - 0.25).abs() < 1e-6, "y = {}", r.x_s.y[0]);
        // step restricted to the (w, z) ball, y moved further than Δ
        assert!(wz_norm(&p, &r.s) <= 0.5 + 1e-8);
        assert!(r.s[1].abs() > 0.5);
    }

    #[test]
    fn trsp_stationary_start_stays_put() {
        let p = glass_z_problem();
        let rm = affine_rm(0.0, 0.0, 0.0, 0.5);
        // minimiser of f = z over z ∈ [−10, 10] with ball 0.5 around −10
        let x = Point::new(Vector::zeros(0), Vector::zeros(0), Vector::from_column_slice(&[-10.0]));
        let solver = AugLagSolver::default();
        let r = solve_trsp(&p, &rm, &x, &Vector::zeros(1), 0.5, &solver, 1e-8);
        assert!(r.s.amax() < 1e-8, "stationary start must not move");
    }

    #[test]
    fn infeasibility_matches_examples() {
        use crate::problem::{infeasibility, BlackBoxCache};
        let p = GreyBoxProblem::<f64>::builder("theta", 1, 1, 0)
            .objective(|x| x[1])
            .objective_grad(|x| {
                let mut g = Vector::zeros(x.len());
                g[1] = 1.0;
                g
            })
            .black_box(|w| Vector::from_column_slice(&[w[0] + 0.1]))
            .bounds(
                Vector::from_column_slice(&[-5.0, -5.0]),
                Vector::from_column_slice(&[5.0, 5.0]),
            )
            .build();
        let rm = affine_rm(1.0, 0.0, 0.0, 0.5); // r(w) = w
        let ledger = EvaluationLedger::new();
        let cache = BlackBoxCache::new();
        let x = Point::new(
            Vector::from_column_slice(&[0.3]),
            Vector::from_column_slice(&[0.0]),
            Vector::zeros(0),
        );
        let theta = infeasibility(&rm, &p, &x, &ledger, &cache, BbCategory::Theta).unwrap();
        assert!((theta - 0.1).abs() < 1e-12);
        assert_eq!(ledger.black_box_calls(), 1);
        // cached: second call costs nothing
        let _ = infeasibility(&rm, &p, &x, &ledger, &cache, BbCategory::Theta).unwrap();
        assert_eq!(ledger.black_box_calls(), 1);
    }
}
