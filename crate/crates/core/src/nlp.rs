//! Bundled constrained-NLP subsolver and the pluggable solver contract.
//!
//! The bundled method is an augmented-Lagrangian outer loop with a projected
//! quasi-Newton (dense BFGS) inner solve. Inequalities enter through the
//! Rockafellar form of the augmented Lagrangian, which is the slack-variable
//! formulation with the slacks eliminated in closed form; bound constraints
//! and the ∞-norm trust region are handled by projection. Variables are
//! rescaled internally to the unit box spanned by their (trust-region
//! restricted) bounds so the inner solver never sees raw physical units.
//!
//! Everything is deterministic: identical specs produce identical solutions.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::scalar::{cst, Real};
use crate::{Matrix, Vector};

/// Objective callable: value and gradient.
pub type ObjFn<'a, T> = Box<dyn Fn(&Vector<T>) -> (T, Vector<T>) + 'a>;
/// Constraint callable: values and Jacobian (rows = constraints).
pub type ConFn<'a, T> = Box<dyn Fn(&Vector<T>) -> (Vector<T>, Matrix<T>) + 'a>;

/// Uniform carrier for the three subproblems the driver solves.
pub struct NlpSpec<'a, T: Real> {
    pub n: usize,
    pub objective: ObjFn<'a, T>,
    /// h(x) = 0, empty allowed.
    pub eq: Option<ConFn<'a, T>>,
    /// g(x) ≤ 0, empty allowed.
    pub ineq: Option<ConFn<'a, T>>,
    pub lower: Vector<T>,
    pub upper: Vector<T>,
    /// Optional ∞-norm trust region folded into the bounds before solving.
    /// A mask entry of `false` exempts that variable from the ball.
    pub trust: Option<TrustRegion<T>>,
    pub x0: Vector<T>,
}

#[derive(Debug, Clone)]
pub struct TrustRegion<T: Real> {
    pub center: Vector<T>,
    pub radius: T,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlpStatus {
    Solved,
    Infeasible,
    MaxInner,
    NumericFailure,
}

/// KKT residuals of a candidate solution, each a scalar.
#[derive(Debug, Clone, Copy)]
pub struct KktResidual<T: Real> {
    /// ∞-norm of the projected Lagrangian gradient.
    pub stationarity: T,
    /// max(‖h‖∞, ‖max(0, g)‖∞).
    pub feasibility: T,
    /// max |μ_i g_i(x)|.
    pub complementarity: T,
}

impl<T: Real> KktResidual<T> {
    pub fn max(&self) -> T {
        self.stationarity.max(self.feasibility).max(self.complementarity)
    }
}

#[derive(Debug, Clone)]
pub struct NlpSolution<T: Real> {
    pub status: NlpStatus,
    pub x: Vector<T>,
    pub objective: T,
    pub kkt: KktResidual<T>,
    pub lambda_eq: Vector<T>,
    pub mu_ineq: Vector<T>,
    pub inner_iterations: usize,
}

/// Solver-plugin contract: third-party NLP engines implement this and are
/// selected by name in the config.
pub trait NlpSolver<T: Real>: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, spec: &NlpSpec<'_, T>, tol: T) -> NlpSolution<T>;
}

/// Registry of available subsolvers, keyed by config name.
pub fn solver_registry<T: Real>() -> BTreeMap<&'static str, Arc<dyn NlpSolver<T>>> {
    let mut m: BTreeMap<&'static str, Arc<dyn NlpSolver<T>>> = BTreeMap::new();
    m.insert("bundled", Arc::new(AugLagSolver::default()));
    m
}

pub fn solver_by_name<T: Real>(name: &str) -> Option<Arc<dyn NlpSolver<T>>> {
    solver_registry::<T>().remove(name)
}

/// Convenience entry point using the bundled solver.
pub fn solve_nlp<T: Real>(spec: &NlpSpec<'_, T>, tol: T) -> NlpSolution<T> {
    AugLagSolver::default().solve(spec, tol)
}

/// The bundled augmented-Lagrangian solver.
#[derive(Debug, Clone)]
pub struct AugLagSolver {
    pub max_outer: usize,
    pub max_inner: usize,
    pub initial_penalty: f64,
    pub max_penalty: f64,
}

impl Default for AugLagSolver {
    fn default() -> Self {
        Self {
            max_outer: 40,
            max_inner: 500,
            initial_penalty: 10.0,
            max_penalty: 1e12,
        }
    }
}

struct Scaled<T: Real> {
    lower: Vector<T>,
    span: Vector<T>,
}

impl<T: Real> Scaled<T> {
    fn new(lower: &Vector<T>, upper: &Vector<T>) -> Self {
        let n = lower.len();
        let mut lo = Vector::zeros(n);
        let mut span = Vector::zeros(n);
        for i in 0..n {
            if lower[i].is_finite() && upper[i].is_finite() && upper[i] > lower[i] {
                lo[i] = lower[i];
                span[i] = upper[i] - lower[i];
            } else {
                lo[i] = T::zero();
                span[i] = T::one();
            }
        }
        Self { lower: lo, span }
    }

    fn to_internal(&self, x: &Vector<T>) -> Vector<T> {
        let mut u = x.clone();
        for i in 0..x.len() {
            u[i] = (x[i] - self.lower[i]) / self.span[i];
        }
        u
    }

    fn to_external(&self, u: &Vector<T>) -> Vector<T> {
        let mut x = u.clone();
        for i in 0..u.len() {
            x[i] = self.lower[i] + u[i] * self.span[i];
        }
        x
    }

    /// Chain rule: ∂f/∂u = span ∘ ∂f/∂x.
    fn grad_to_internal(&self, g: &Vector<T>) -> Vector<T> {
        let mut gi = g.clone();
        for i in 0..g.len() {
            gi[i] *= self.span[i];
        }
        gi
    }
}

impl AugLagSolver {
    fn effective_bounds<T: Real>(spec: &NlpSpec<'_, T>) -> (Vector<T>, Vector<T>) {
        let mut lo = spec.lower.clone();
        let mut hi = spec.upper.clone();
        if let Some(tr) = &spec.trust {
            for i in 0..spec.n {
                if tr.mask[i] {
                    lo[i] = lo[i].max(tr.center[i] - tr.radius);
                    hi[i] = hi[i].min(tr.center[i] + tr.radius);
                }
            }
        }
        for i in 0..spec.n {
            if hi[i] < lo[i] {
                // keep a consistent (pinned) box if the trust region and
                // bounds barely disagree through rounding
                let mid = (hi[i] + lo[i]) * cst::<T>(0.5);
                lo[i] = mid;
                hi[i] = mid;
            }
        }
        (lo, hi)
    }
}

impl<T: Real> NlpSolver<T> for AugLagSolver {
    fn name(&self) -> &'static str {
        "bundled"
    }

    fn solve(&self, spec: &NlpSpec<'_, T>, tol: T) -> NlpSolution<T> {
        let n = spec.n;
        let (lo, hi) = Self::effective_bounds(spec);
        let scale = Scaled::new(&lo, &hi);
        let ulo = scale.to_internal(&lo);
        let uhi = scale.to_internal(&hi);

        let project = |u: &mut Vector<T>| {
            for i in 0..n {
                u[i] = u[i].max(ulo[i]).min(uhi[i]);
            }
        };

        let mut u = scale.to_internal(&spec.x0);
        project(&mut u);

        let m_eq = spec
            .eq
            .as_ref()
            .map(|h| h(&spec.x0).0.len())
            .unwrap_or(0);
        let m_in = spec
            .ineq
            .as_ref()
            .map(|g| g(&spec.x0).0.len())
            .unwrap_or(0);

        let mut lambda = Vector::<T>::zeros(m_eq);
        let mut mu = Vector::<T>::zeros(m_in);
        let mut rho = cst::<T>(self.initial_penalty);

        // Augmented Lagrangian value/gradient in internal coordinates.
        // max(0, μ + ρ g) is the Rockafellar multiplier estimate. When
        // `with_gn` is set, also assemble the Gauss-Newton curvature
        // ρ·(J_hᵀJ_h + Σ_active ∇g_i∇g_iᵀ), which dominates the augmented
        // Hessian once the penalty grows, plus the penalty-free Lagrangian
        // gradient whose secant differences estimate the remaining
        // curvature.
        let eval_al = |u: &Vector<T>,
                       lambda: &Vector<T>,
                       mu: &Vector<T>,
                       rho: T,
                       with_gn: bool|
         -> Option<AlEval<T>> {
            let x = scale.to_external(u);
            let (f, grad_f) = (spec.objective)(&x);
            if !f.is_finite() {
                return None;
            }
            let mut val = f;
            let mut grad = grad_f.clone();
            let mut grad_base = grad_f;
            let mut gn = if with_gn {
                Some(Matrix::<T>::zeros(n, n))
            } else {
                None
            };
            if let Some(hfn) = &spec.eq {
                let (h, jh) = hfn(&x);
                for i in 0..m_eq {
                    if !h[i].is_finite() {
                        return None;
                    }
                    val += lambda[i] * h[i] + rho * cst::<T>(0.5) * h[i] * h[i];
                }
                let w = lambda + &h * rho;
                grad += jh.transpose() * w;
                grad_base += jh.transpose() * lambda;
                if let Some(gn) = gn.as_mut() {
                    // scaled rows: (J S)ᵀ(J S), S = diag(span)
                    let mut jhs = jh;
                    for r in 0..m_eq {
                        for c in 0..n {
                            jhs[(r, c)] *= scale.span[c];
                        }
                    }
                    *gn += jhs.transpose() * jhs * rho;
                }
            }
            if let Some(gfn) = &spec.ineq {
                let (g, jg) = gfn(&x);
                let mut w = Vector::<T>::zeros(m_in);
                for i in 0..m_in {
                    if !g[i].is_finite() {
                        return None;
                    }
                    let act = (mu[i] + rho * g[i]).max(T::zero());
                    val += (act * act - mu[i] * mu[i]) / (rho * cst::<T>(2.0));
                    w[i] = act;
                }
                grad += jg.transpose() * &w;
                grad_base += jg.transpose() * mu;
                if let Some(gn) = gn.as_mut() {
                    for i in 0..m_in {
                        if w[i] > T::zero() {
                            let mut row = jg.row(i).transpose().into_owned();
                            for c in 0..n {
                                row[c] *= scale.span[c];
                            }
                            *gn += &row * row.transpose() * rho;
                        }
                    }
                }
            }
            if !val.is_finite() || grad.iter().any(|v| !v.is_finite()) {
                return None;
            }
            Some(AlEval {
                val,
                grad: scale.grad_to_internal(&grad),
                grad_base: scale.grad_to_internal(&grad_base),
                gn,
            })
        };

        let feas_of = |u: &Vector<T>| -> (T, Vector<T>, Vector<T>) {
            let x = scale.to_external(u);
            let h = spec.eq.as_ref().map(|hf| hf(&x).0).unwrap_or_else(|| Vector::zeros(0));
            let g = spec
                .ineq
                .as_ref()
                .map(|gf| gf(&x).0)
                .unwrap_or_else(|| Vector::zeros(0));
            let mut feas = T::zero();
            for v in h.iter() {
                feas = feas.max(v.abs());
            }
            for v in g.iter() {
                feas = feas.max((*v).max(T::zero()));
            }
            (feas, h, g)
        };

        let mut omega = cst::<T>(1.0) / cst::<T>(self.initial_penalty);
        let mut eta = cst::<T>(0.1) / cst::<T>(self.initial_penalty).powf(cst(0.1));
        let omega_floor = tol * cst::<T>(0.5);
        let eta_floor = tol * cst::<T>(0.5);

        let mut total_inner = 0usize;
        let mut numeric_failure = false;
        let mut hit_inner_cap = false;

        for _outer in 0..self.max_outer {
            let inner_tol = omega.max(omega_floor);
            match project_gauss_newton(
                &mut u,
                |v, with_gn| eval_al(v, &lambda, &mu, rho, with_gn),
                &ulo,
                &uhi,
                inner_tol,
                self.max_inner,
            ) {
                InnerResult::Converged(it) => total_inner += it,
                InnerResult::MaxIter(it) => {
                    total_inner += it;
                    hit_inner_cap = true;
                }
                InnerResult::NumericFailure => {
                    numeric_failure = true;
                    break;
                }
            }

            let (feas, h, g) = feas_of(&u);
            if feas <= eta.max(eta_floor) {
                // multiplier update
                for i in 0..m_eq {
                    lambda[i] += rho * h[i];
                }
                for i in 0..m_in {
                    mu[i] = (mu[i] + rho * g[i]).max(T::zero());
                }
                let one = T::one();
                eta = eta / rho.powf(cst(0.9));
                omega = omega / rho.max(one);
            } else {
                rho *= cst::<T>(10.0);
                if rho > cst(self.max_penalty) {
                    break;
                }
                eta = cst::<T>(0.1) / rho.powf(cst(0.1));
                omega = cst::<T>(1.0) / rho;
            }

            // convergence test with the updated multipliers
            if let Some(ev) = eval_al(&u, &lambda, &mu, rho, false) {
                let mut pg = T::zero();
                for i in 0..n {
                    let step = (u[i] - ev.grad[i]).max(ulo[i]).min(uhi[i]) - u[i];
                    pg = pg.max(step.abs());
                }
                let (feas2, _, g2) = feas_of(&u);
                let mut compl = T::zero();
                for i in 0..m_in {
                    compl = compl.max((mu[i] * g2[i]).abs());
                }
                if pg <= tol && feas2 <= tol && compl <= tol {
                    break;
                }
            } else {
                numeric_failure = true;
                break;
            }
        }

        let x = scale.to_external(&u);
        let (fval, _) = (spec.objective)(&x);
        let (feas, _h, g) = feas_of(&u);
        let stationarity = match eval_al(&u, &lambda, &mu, rho, false) {
            Some(ev) => {
                let mut pg = T::zero();
                for i in 0..n {
                    let step = (u[i] - ev.grad[i]).max(ulo[i]).min(uhi[i]) - u[i];
                    pg = pg.max(step.abs());
                }
                pg
            }
            None => cst(f64::NAN),
        };
        let mut compl = T::zero();
        for i in 0..m_in {
            compl = compl.max((mu[i] * g[i]).abs());
        }
        let kkt = KktResidual {
            stationarity,
            feasibility: feas,
            complementarity: compl,
        };
        let status = if numeric_failure || !stationarity.is_finite() {
            NlpStatus::NumericFailure
        } else if kkt.max() <= tol {
            NlpStatus::Solved
        } else if feas > tol.max(cst(1e-6)) && rho >= cst(self.max_penalty) {
            NlpStatus::Infeasible
        } else if hit_inner_cap {
            NlpStatus::MaxInner
        } else if feas > tol.max(cst(1e-6)) {
            NlpStatus::Infeasible
        } else {
            NlpStatus::MaxInner
        };

        NlpSolution {
            status,
            x,
            objective: fval,
            kkt,
            lambda_eq: lambda,
            mu_ineq: mu,
            inner_iterations: total_inner,
        }
    }
}

enum InnerResult {
    Converged(usize),
    MaxIter(usize),
    NumericFailure,
}

/// One augmented-Lagrangian evaluation in internal coordinates.
struct AlEval<T: Real> {
    val: T,
    grad: Vector<T>,
    /// Gradient without the ρ-proportional terms (multipliers held fixed);
    /// its secant differences estimate the curvature the Gauss-Newton term
    /// misses.
    grad_base: Vector<T>,
    gn: Option<Matrix<T>>,
}

/// Projected damped Gauss-Newton with Armijo backtracking on the box
/// `[lo, hi]`.
///
/// The model Hessian is the penalty's Gauss-Newton curvature plus adaptive
/// Levenberg damping ν·I. Components whose bound is active with an outward
/// gradient are frozen out of the linear solve; the step is projected back
/// onto the box. Damping shrinks on full steps and grows when the line
/// search struggles, which also covers any objective curvature missing from
/// the Gauss-Newton term.
fn project_gauss_newton<T: Real>(
    u: &mut Vector<T>,
    f: impl Fn(&Vector<T>, bool) -> Option<AlEval<T>>,
    lo: &Vector<T>,
    hi: &Vector<T>,
    tol: T,
    max_iter: usize,
) -> InnerResult {
    let n = u.len();
    let Some(mut cur) = f(u, true) else {
        return InnerResult::NumericFailure;
    };
    let act_tol = T::eps().powf(cst(0.5));
    let nu_floor = cst::<T>(1e-10);
    let mut nu = cst::<T>(1e-4);
    // scalar secant estimate of the curvature missing from the GN term
    let mut gamma = T::one();

    for it in 0..max_iter {
        // projected-gradient optimality measure
        let mut pg = T::zero();
        for i in 0..n {
            let step = (u[i] - cur.grad[i]).max(lo[i]).min(hi[i]) - u[i];
            pg = pg.max(step.abs());
        }
        if pg <= tol {
            return InnerResult::Converged(it);
        }

        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let span = (hi[i] - lo[i]).max(T::one());
                let at_lo = u[i] - lo[i] <= act_tol * span;
                let at_hi = hi[i] - u[i] <= act_tol * span;
                !((at_lo && cur.grad[i] > T::zero()) || (at_hi && cur.grad[i] < T::zero()))
            })
            .collect();
        if free.is_empty() {
            return InnerResult::Converged(it);
        }

        let gn = cur.gn.as_ref().expect("curvature requested");
        let nf = free.len();
        let mut accepted = None;
        // damping escalation: solve, test descent + line search; on failure
        // raise ν and retry with the same curvature data
        for _damp_round in 0..12 {
            let mut m = Matrix::<T>::zeros(nf, nf);
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    m[(a, b)] = gn[(i, j)];
                }
                m[(a, a)] += nu + gamma;
            }
            let mut rhs = Vector::<T>::zeros(nf);
            for (a, &i) in free.iter().enumerate() {
                rhs[a] = -cur.grad[i];
            }
            let d_free = match m.cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => {
                    nu = (nu * cst(100.0)).max(cst(1e-8));
                    continue;
                }
            };
            let mut d = Vector::<T>::zeros(n);
            for (a, &i) in free.iter().enumerate() {
                d[i] = d_free[a];
            }
            if !(d.dot(&cur.grad) < T::zero()) {
                nu *= cst(100.0);
                continue;
            }
            // variables live in unit boxes internally; a longer step is
            // curvature the model does not know about (kills null-space
            // blowups when the Gauss-Newton term is rank-deficient)
            let dmax = d.amax();
            if dmax > T::one() {
                d /= dmax;
            }

            let c1 = cst::<T>(1e-4);
            let mut alpha = T::one();
            for _ in 0..40 {
                let mut trial = &*u + &d * alpha;
                for i in 0..n {
                    trial[i] = trial[i].max(lo[i]).min(hi[i]);
                }
                let delta = &trial - &*u;
                if delta.amax() == T::zero() {
                    break;
                }
                if let Some(next) = f(&trial, true) {
                    if next.val <= cur.val + (c1 * cur.grad.dot(&delta)).min(T::zero()) {
                        accepted = Some((trial, next, delta, alpha));
                        break;
                    }
                }
                alpha *= cst(0.5);
            }
            if accepted.is_some() {
                break;
            }
            nu *= cst(10.0);
        }

        let Some((trial, next, s, alpha)) = accepted else {
            // stalled: no descent realisable from here
            return InnerResult::Converged(it);
        };
        // secant update of the missing-curvature estimate
        let y_base = &next.grad_base - &cur.grad_base;
        let ss = s.dot(&s);
        if ss > T::zero() {
            let g_raw = s.dot(&y_base) / ss;
            if g_raw.is_finite() && g_raw > T::zero() {
                gamma = g_raw.max(cst(1e-8)).min(cst(1e12));
            }
        }
        if alpha >= T::one() {
            nu = (nu * cst(0.25)).max(nu_floor);
        } else if alpha <= cst(0.25) {
            nu *= cst(4.0);
        }
        if it % 20 == 19 {
            log::trace!(
                "inner it={it} f={:e} pg={pg:e} alpha={alpha:e} nu={nu:e} gamma={gamma:e} free={nf}",
                cur.val
            );
        }
        *u = trial;
        cur = next;
    }
    InnerResult::MaxIter(max_iter)
}
