//! Grey-box problem abstraction: variable partition, evaluation with
//! derivative access, black-box accounting and the infeasibility measure.
//!
//! A problem owns glass-box callables (objective, equality and inequality
//! constraints, each with analytic first derivatives) over the full variable
//! vector `x = [w, y, z]`, plus an opaque black-box map `t(w)` whose outputs
//! the auxiliary variables `y` must eventually match.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use thiserror::Error;

use crate::rm::ReducedModel;
use crate::scalar::{as_f64, cst, Real};
use crate::{Matrix, Vector};

/// Evaluation failures surfaced by problem callables.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// An output contained NaN or an infinity; the caller must shrink the
    /// region it is probing.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    /// A black-box input lay outside the declared `w` box.
    #[error("black-box input {index} outside its bounds")]
    BoundsViolation { index: usize },
    /// A vector had the wrong length for this problem.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// What a black-box evaluation was charged for, used by the ledger breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbCategory {
    /// Design/stencil/validation points consumed while building or checking
    /// a reduced model.
    Sampling,
    /// Infeasibility-measure evaluations at trial points and centers.
    Theta,
    /// Evaluations consumed inside the restoration phase.
    Restoration,
}

/// Thread-safe counters for problem evaluations.
///
/// `black_box_calls` counts exactly the number of `t(w)` invocations, which
/// is the "external evaluations" metric reported for every run.
#[derive(Debug, Default)]
pub struct EvaluationLedger {
    black_box_calls: AtomicU64,
    glass_box_calls: AtomicU64,
    wall_nanos: AtomicU64,
    sampling_calls: AtomicU64,
    theta_calls: AtomicU64,
    restoration_calls: AtomicU64,
}

impl EvaluationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn black_box_calls(&self) -> u64 {
        self.black_box_calls.load(Ordering::Relaxed)
    }

    pub fn glass_box_calls(&self) -> u64 {
        self.glass_box_calls.load(Ordering::Relaxed)
    }

    /// Accumulated seconds spent inside black-box callables.
    pub fn wall_time_s(&self) -> f64 {
        self.wall_nanos.load(Ordering::Relaxed) as f64 * 1e-9
    }

    pub fn calls_in(&self, cat: BbCategory) -> u64 {
        match cat {
            BbCategory::Sampling => self.sampling_calls.load(Ordering::Relaxed),
            BbCategory::Theta => self.theta_calls.load(Ordering::Relaxed),
            BbCategory::Restoration => self.restoration_calls.load(Ordering::Relaxed),
        }
    }

    pub fn record_glass_box(&self) {
        self.glass_box_calls.fetch_add(1, Ordering::Relaxed);
    }

    fn record_black_box(&self, cat: BbCategory, nanos: u64) {
        self.black_box_calls.fetch_add(1, Ordering::Relaxed);
        self.wall_nanos.fetch_add(nanos, Ordering::Relaxed);
        match cat {
            BbCategory::Sampling => self.sampling_calls.fetch_add(1, Ordering::Relaxed),
            BbCategory::Theta => self.theta_calls.fetch_add(1, Ordering::Relaxed),
            BbCategory::Restoration => self.restoration_calls.fetch_add(1, Ordering::Relaxed),
        };
    }
}

/// A point split into its black-box inputs `w`, coupled outputs `y` and pure
/// glass-box variables `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T: Real> {
    pub w: Vector<T>,
    pub y: Vector<T>,
    pub z: Vector<T>,
}

impl<T: Real> Point<T> {
    pub fn new(w: Vector<T>, y: Vector<T>, z: Vector<T>) -> Self {
        Self { w, y, z }
    }

    /// Concatenate into the full decision vector `[w, y, z]`.
    pub fn assemble(&self) -> Vector<T> {
        let n = self.w.len() + self.y.len() + self.z.len();
        let mut x = Vector::zeros(n);
        x.rows_mut(0, self.w.len()).copy_from(&self.w);
        x.rows_mut(self.w.len(), self.y.len()).copy_from(&self.y);
        x.rows_mut(self.w.len() + self.y.len(), self.z.len())
            .copy_from(&self.z);
        x
    }

    pub fn dim(&self) -> usize {
        self.w.len() + self.y.len() + self.z.len()
    }
}

type ScalarFn<T> = Arc<dyn Fn(&Vector<T>) -> T + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>;
type VecFn<T> = Arc<dyn Fn(&Vector<T>) -> Vector<T> + Send + Sync>;
type JacFn<T> = Arc<dyn Fn(&Vector<T>) -> Matrix<T> + Send + Sync>;

/// Glass-box values and first derivatives at one point.
#[derive(Debug, Clone)]
pub struct GlassBoxEval<T: Real> {
    pub f: T,
    pub grad_f: Vector<T>,
    pub h: Vector<T>,
    pub jac_h: Matrix<T>,
    pub g: Vector<T>,
    pub jac_g: Matrix<T>,
}

/// A constrained grey-box optimisation problem.
///
/// Variables are ordered `[w, y, z]`; bounds cover the full vector and must
/// be finite on every `w` component (sampling needs a bounded box).
pub struct GreyBoxProblem<T: Real> {
    pub name: String,
    pub n_w: usize,
    pub n_y: usize,
    pub n_z: usize,
    n_eq: usize,
    n_ineq: usize,
    objective: ScalarFn<T>,
    objective_grad: GradFn<T>,
    eq: VecFn<T>,
    eq_jac: JacFn<T>,
    ineq: VecFn<T>,
    ineq_jac: JacFn<T>,
    black_box: VecFn<T>,
    lower: Vector<T>,
    upper: Vector<T>,
}

impl<T: Real> GreyBoxProblem<T> {
    pub fn builder(name: impl Into<String>, n_w: usize, n_y: usize, n_z: usize) -> Builder<T> {
        Builder::new(name, n_w, n_y, n_z)
    }

    pub fn dim(&self) -> usize {
        self.n_w + self.n_y + self.n_z
    }

    pub fn n_eq(&self) -> usize {
        self.n_eq
    }

    pub fn n_ineq(&self) -> usize {
        self.n_ineq
    }

    pub fn lower(&self) -> &Vector<T> {
        &self.lower
    }

    pub fn upper(&self) -> &Vector<T> {
        &self.upper
    }

    /// Bounds restricted to the `w` components.
    pub fn w_bounds(&self) -> (Vector<T>, Vector<T>) {
        (
            self.lower.rows(0, self.n_w).into_owned(),
            self.upper.rows(0, self.n_w).into_owned(),
        )
    }

    pub fn split(&self, x: &Vector<T>) -> Result<Point<T>, EvalError> {
        if x.len() != self.dim() {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(Point {
            w: x.rows(0, self.n_w).into_owned(),
            y: x.rows(self.n_w, self.n_y).into_owned(),
            z: x.rows(self.n_w + self.n_y, self.n_z).into_owned(),
        })
    }

    /// Evaluate all glass-box callables and their first derivatives at `x`.
    pub fn evaluate_glass_box(
        &self,
        x: &Vector<T>,
        ledger: &EvaluationLedger,
    ) -> Result<GlassBoxEval<T>, EvalError> {
        if x.len() != self.dim() {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        ledger.record_glass_box();
        let f = (self.objective)(x);
        let grad_f = (self.objective_grad)(x);
        let h = (self.eq)(x);
        let jac_h = (self.eq_jac)(x);
        let g = (self.ineq)(x);
        let jac_g = (self.ineq_jac)(x);
        if !f.is_finite() || grad_f.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite("objective"));
        }
        if h.iter().any(|v| !v.is_finite()) || jac_h.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite("equality constraints"));
        }
        if g.iter().any(|v| !v.is_finite()) || jac_g.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite("inequality constraints"));
        }
        Ok(GlassBoxEval {
            f,
            grad_f,
            h,
            jac_h,
            g,
            jac_g,
        })
    }

    pub fn objective_value(&self, x: &Vector<T>) -> T {
        (self.objective)(x)
    }

    pub fn objective_grad(&self, x: &Vector<T>) -> Vector<T> {
        (self.objective_grad)(x)
    }

    pub fn eq_value(&self, x: &Vector<T>) -> Vector<T> {
        (self.eq)(x)
    }

    pub fn eq_jac(&self, x: &Vector<T>) -> Matrix<T> {
        (self.eq_jac)(x)
    }

    pub fn ineq_value(&self, x: &Vector<T>) -> Vector<T> {
        (self.ineq)(x)
    }

    pub fn ineq_jac(&self, x: &Vector<T>) -> Matrix<T> {
        (self.ineq_jac)(x)
    }

    /// Evaluate the black box at `w`, charging exactly one call to `ledger`.
    pub fn evaluate_black_box(
        &self,
        w: &Vector<T>,
        ledger: &EvaluationLedger,
        cat: BbCategory,
    ) -> Result<Vector<T>, EvalError> {
        if w.len() != self.n_w {
            return Err(EvalError::DimensionMismatch {
                expected: self.n_w,
                got: w.len(),
            });
        }
        for i in 0..self.n_w {
            let tol = cst::<T>(1e-9) * (T::one() + self.lower[i].abs().max(self.upper[i].abs()));
            if w[i] < self.lower[i] - tol || w[i] > self.upper[i] + tol {
                return Err(EvalError::BoundsViolation { index: i });
            }
        }
        let start = Instant::now();
        let t = (self.black_box)(w);
        ledger.record_black_box(cat, start.elapsed().as_nanos() as u64);
        if t.len() != self.n_y {
            return Err(EvalError::DimensionMismatch {
                expected: self.n_y,
                got: t.len(),
            });
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite("black box"));
        }
        Ok(t)
    }
}

/// Memoises `t(w)` per exact `w` bit pattern.
///
/// Lives for one outer iteration: the driver clears it whenever the iterate
/// moves, so coincident sampling and θ evaluations are charged once.
#[derive(Default)]
pub struct BlackBoxCache<T: Real> {
    map: Mutex<HashMap<Vec<u64>, Vector<T>>>,
}

impl<T: Real> BlackBoxCache<T> {
    pub fn new() -> Self {
        Self {
            map: Mutex::new(HashMap::new()),
        }
    }

    pub fn clear(&self) {
        self.map.lock().unwrap().clear();
    }

    fn key(w: &Vector<T>) -> Vec<u64> {
        w.iter().map(|v| as_f64(*v).to_bits()).collect()
    }

    /// Cached `t(w)`; evaluates (and charges) only on a miss.
    pub fn eval(
        &self,
        problem: &GreyBoxProblem<T>,
        w: &Vector<T>,
        ledger: &EvaluationLedger,
        cat: BbCategory,
    ) -> Result<Vector<T>, EvalError> {
        let key = Self::key(w);
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let t = problem.evaluate_black_box(w, ledger, cat)?;
        self.map.lock().unwrap().insert(key, t.clone());
        Ok(t)
    }
}

/// Infeasibility measure θ: the mismatch `‖r(w) − t(w)‖₂` between the
/// reduced-model prediction and the true black-box response at `x`'s `w`.
pub fn infeasibility<T: Real>(
    rm: &ReducedModel<T>,
    problem: &GreyBoxProblem<T>,
    x: &Point<T>,
    ledger: &EvaluationLedger,
    cache: &BlackBoxCache<T>,
    cat: BbCategory,
) -> Result<T, EvalError> {
    if problem.n_y == 0 {
        return Ok(T::zero());
    }
    let t = cache.eval(problem, &x.w, ledger, cat)?;
    let r = rm.predict(&x.w);
    Ok((r - t).norm())
}

/// Mismatch `‖y − t(w)‖₂` between the auxiliary variables and the true
/// black-box response; coincides with [`infeasibility`] at any point that
/// satisfies the subproblem link `y = r(w)`.
pub fn point_infeasibility<T: Real>(
    problem: &GreyBoxProblem<T>,
    x: &Point<T>,
    ledger: &EvaluationLedger,
    cache: &BlackBoxCache<T>,
    cat: BbCategory,
) -> Result<T, EvalError> {
    if problem.n_y == 0 {
        return Ok(T::zero());
    }
    let t = cache.eval(problem, &x.w, ledger, cat)?;
    Ok((&x.y - t).norm())
}

/// Builder for [`GreyBoxProblem`]. Derivative callables may be omitted, in
/// which case central finite differences (step `1e-6·(1+|x_i|)`) stand in.
pub struct Builder<T: Real> {
    name: String,
    n_w: usize,
    n_y: usize,
    n_z: usize,
    n_eq: usize,
    n_ineq: usize,
    objective: Option<ScalarFn<T>>,
    objective_grad: Option<GradFn<T>>,
    eq: Option<VecFn<T>>,
    eq_jac: Option<JacFn<T>>,
    ineq: Option<VecFn<T>>,
    ineq_jac: Option<JacFn<T>>,
    black_box: Option<VecFn<T>>,
    lower: Option<Vector<T>>,
    upper: Option<Vector<T>>,
}

impl<T: Real> Builder<T> {
    fn new(name: impl Into<String>, n_w: usize, n_y: usize, n_z: usize) -> Self {
        Self {
            name: name.into(),
            n_w,
            n_y,
            n_z,
            n_eq: 0,
            n_ineq: 0,
            objective: None,
            objective_grad: None,
            eq: None,
            eq_jac: None,
            ineq: None,
            ineq_jac: None,
            black_box: None,
            lower: None,
            upper: None,
        }
    }

    pub fn objective(
        mut self,
        f: impl Fn(&Vector<T>) -> T + Send + Sync + 'static,
    ) -> Self {
        self.objective = Some(Arc::new(f));
        self
    }

    pub fn objective_grad(
        mut self,
        g: impl Fn(&Vector<T>) -> Vector<T> + Send + Sync + 'static,
    ) -> Self {
        self.objective_grad = Some(Arc::new(g));
        self
    }

    pub fn eq_constraints(
        mut self,
        n_eq: usize,
        h: impl Fn(&Vector<T>) -> Vector<T> + Send + Sync + 'static,
    ) -> Self {
        self.n_eq = n_eq;
        self.eq = Some(Arc::new(h));
        self
    }

    pub fn eq_jacobian(
        mut self,
        j: impl Fn(&Vector<T>) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        self.eq_jac = Some(Arc::new(j));
        self
    }

    pub fn ineq_constraints(
        mut self,
        n_ineq: usize,
        g: impl Fn(&Vector<T>) -> Vector<T> + Send + Sync + 'static,
    ) -> Self {
        self.n_ineq = n_ineq;
        self.ineq = Some(Arc::new(g));
        self
    }

    pub fn ineq_jacobian(
        mut self,
        j: impl Fn(&Vector<T>) -> Matrix<T> + Send + Sync + 'static,
    ) -> Self {
        self.ineq_jac = Some(Arc::new(j));
        self
    }

    pub fn black_box(
        mut self,
        t: impl Fn(&Vector<T>) -> Vector<T> + Send + Sync + 'static,
    ) -> Self {
        self.black_box = Some(Arc::new(t));
        self
    }

    pub fn bounds(mut self, lower: Vector<T>, upper: Vector<T>) -> Self {
        self.lower = Some(lower);
        self.upper = Some(upper);
        self
    }

    pub fn build(self) -> GreyBoxProblem<T> {
        let n = self.n_w + self.n_y + self.n_z;
        let n_eq = self.n_eq;
        let n_ineq = self.n_ineq;
        let lower = self.lower.unwrap_or_else(|| {
            Vector::from_element(n, cst::<T>(f64::NEG_INFINITY))
        });
        let upper = self
            .upper
            .unwrap_or_else(|| Vector::from_element(n, cst::<T>(f64::INFINITY)));
        assert_eq!(lower.len(), n, "lower bounds must cover [w, y, z]");
        assert_eq!(upper.len(), n, "upper bounds must cover [w, y, z]");
        for i in 0..self.n_w {
            assert!(
                lower[i].is_finite() && upper[i].is_finite(),
                "w bounds must be finite (sampling needs a bounded box)"
            );
        }

        let objective = self.objective.expect("objective is required");
        let objective_grad = self.objective_grad.unwrap_or_else(|| {
            let f = Arc::clone(&objective);
            Arc::new(move |x: &Vector<T>| fd_gradient(&|v| f(v), x))
        });
        let eq: VecFn<T> = self
            .eq
            .unwrap_or_else(|| Arc::new(|_x: &Vector<T>| Vector::zeros(0)));
        let eq_jac = self.eq_jac.unwrap_or_else(|| {
            let h = Arc::clone(&eq);
            Arc::new(move |x: &Vector<T>| fd_jacobian(&|v| h(v), x, n_eq))
        });
        let ineq: VecFn<T> = self
            .ineq
            .unwrap_or_else(|| Arc::new(|_x: &Vector<T>| Vector::zeros(0)));
        let ineq_jac = self.ineq_jac.unwrap_or_else(|| {
            let g = Arc::clone(&ineq);
            Arc::new(move |x: &Vector<T>| fd_jacobian(&|v| g(v), x, n_ineq))
        });
        let black_box = self
            .black_box
            .unwrap_or_else(|| Arc::new(|_w: &Vector<T>| Vector::zeros(0)));

        GreyBoxProblem {
            name: self.name,
            n_w: self.n_w,
            n_y: self.n_y,
            n_z: self.n_z,
            n_eq,
            n_ineq,
            objective,
            objective_grad,
            eq,
            eq_jac,
            ineq,
            ineq_jac,
            black_box,
            lower,
            upper,
        }
    }
}

/// Central finite-difference gradient with step `1e-6·(1+|x_i|)`.
pub fn fd_gradient<T: Real>(f: &dyn Fn(&Vector<T>) -> T, x: &Vector<T>) -> Vector<T> {
    let n = x.len();
    let mut g = Vector::zeros(n);
    let mut xp = x.clone();
    for i in 0..n {
        let h = cst::<T>(1e-6) * (T::one() + x[i].abs());
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (cst::<T>(2.0) * h);
    }
    g
}

/// Central finite-difference Jacobian (rows = outputs).
pub fn fd_jacobian<T: Real>(
    f: &dyn Fn(&Vector<T>) -> Vector<T>,
    x: &Vector<T>,
    m: usize,
) -> Matrix<T> {
    let n = x.len();
    let mut jac = Matrix::zeros(m, n);
    let mut xp = x.clone();
    for i in 0..n {
        let h = cst::<T>(1e-6) * (T::one() + x[i].abs());
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        let col = (fp - fm) / (cst::<T>(2.0) * h);
        jac.set_column(i, &col);
    }
    jac
}

/// Relative mismatch between declared derivatives and central differences at
/// `x`; used by the benchmark self-checks.
pub fn max_gradient_mismatch<T: Real>(problem: &GreyBoxProblem<T>, x: &Vector<T>) -> T {
    let rel = |a: T, b: T| (a - b).abs() / (T::one() + a.abs().max(b.abs()));
    let mut worst = T::zero();

    let analytic = problem.objective_grad(x);
    let fd = fd_gradient(&|v: &Vector<T>| problem.objective_value(v), x);
    for i in 0..x.len() {
        worst = worst.max(rel(analytic[i], fd[i]));
    }

    if problem.n_eq() > 0 {
        let analytic = problem.eq_jac(x);
        let fd = fd_jacobian(&|v: &Vector<T>| problem.eq_value(v), x, problem.n_eq());
        for i in 0..analytic.nrows() {
            for j in 0..analytic.ncols() {
                worst = worst.max(rel(analytic[(i, j)], fd[(i, j)]));
            }
        }
    }
    if problem.n_ineq() > 0 {
        let analytic = problem.ineq_jac(x);
        let fd = fd_jacobian(&|v: &Vector<T>| problem.ineq_value(v), x, problem.n_ineq());
        for i in 0..analytic.nrows() {
            for j in 0..analytic.ncols() {
                worst = worst.max(rel(analytic[(i, j)], fd[(i, j)]));
            }
        }
    }
    worst
}
