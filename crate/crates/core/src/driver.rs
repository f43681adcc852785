//! The outer trust-region algorithm: reduced-model management, termination
//! and criticality checks, compatibility/restoration, TRSP solves, step
//! classification and all state updates, with per-iteration trace records.

use std::time::Instant;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::filter::FilterSet;
use crate::funnel::{
    classify_step, init_funnel, reduction_ratio, update_funnel, update_tr_f_type,
    update_tr_theta_type, AcceptanceParams, FunnelState, StepDecision, StepKind,
};
use crate::nlp::{AugLagSolver, NlpSolver, NlpStatus};
use crate::problem::{
    point_infeasibility, BbCategory, BlackBoxCache, EvaluationLedger, GreyBoxProblem, Point,
};
use crate::rm::{
    build_rm, sample_design, taylor_stencil, verify_fully_linear, FullyLinearParams, ReducedModel,
    RmForm,
};
use crate::scalar::{cst, Real};
use crate::subproblems::{compatibility_step, criticality_measure, solve_trsp, wz_norm};
use crate::Vector;

/// All tuning constants of the outer algorithm, config-overridable.
#[derive(Debug, Clone, Copy)]
pub struct AlgorithmParams<T: Real> {
    pub gamma_c: T,
    pub gamma_e: T,
    pub eta1: T,
    pub eta2: T,
    pub mu: T,
    pub gamma_s: T,
    pub kappa_delta: T,
    pub kappa_mu: T,
    pub kappa_phi: T,
    pub delta: T,
    pub tau: T,
    pub kappa_f: T,
    pub phi_min: T,
    pub eta: T,
    pub xi: T,
    pub psi: T,
    pub delta_min: T,
    pub eps_theta: T,
    pub eps_chi: T,
    pub eps_comp: T,
    pub eps_delta: T,
    pub delta0: T,
    pub sigma0: T,
    pub fully_linear: FullyLinearParams<T>,
    pub subsolver_tol: T,
    pub restoration_budget: usize,
}

impl<T: Real> Default for AlgorithmParams<T> {
    fn default() -> Self {
        Self {
            gamma_c: cst(0.5),
            gamma_e: cst(2.0),
            eta1: cst(0.25),
            eta2: cst(0.75),
            mu: cst(0.5),
            gamma_s: cst(2.0),
            kappa_delta: cst(0.8),
            kappa_mu: cst(1.2),
            kappa_phi: cst(10.0),
            delta: cst(0.01),
            tau: cst(0.75),
            kappa_f: cst(0.3),
            phi_min: cst(1e-4),
            eta: cst(1e-4),
            xi: cst(0.5),
            psi: cst(0.5),
            delta_min: cst(1e-6),
            eps_theta: cst(1e-8),
            eps_chi: cst(1e-4),
            eps_comp: cst(1e-4),
            eps_delta: cst(1e-6),
            delta0: cst(1.0),
            sigma0: cst(0.5),
            fully_linear: FullyLinearParams::default(),
            subsolver_tol: cst(1e-8),
            restoration_budget: 50,
        }
    }
}

/// A violated parameter-domain constraint, reported with the constraint text.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parameter {name} violates its domain: {constraint}")]
pub struct ParamError {
    pub name: &'static str,
    pub constraint: &'static str,
}

impl<T: Real> AlgorithmParams<T> {
    /// Check every domain constraint of the initialisation step.
    pub fn validate(&self) -> Result<(), ParamError> {
        let one = T::one();
        let zero = T::zero();
        let fail = |name, constraint| Err(ParamError { name, constraint });
        if !(self.gamma_c > zero && self.gamma_c < one) {
            return fail("gamma_c", "must lie in (0,1)");
        }
        if !(self.gamma_e > one) {
            return fail("gamma_e", "must be > 1");
        }
        if !(self.eta1 > zero && self.eta1 <= self.eta2 && self.eta2 < one) {
            return fail("eta1/eta2", "must satisfy 0 < eta1 <= eta2 < 1");
        }
        if !(self.mu > zero && self.mu < one) {
            return fail("mu", "must lie in (0,1)");
        }
        if !(self.gamma_s > one / (one + self.mu)) {
            return fail("gamma_s", "must be > 1/(1+mu)");
        }
        if !(self.kappa_delta > zero && self.kappa_delta < one) {
            return fail("kappa_delta", "must lie in (0,1)");
        }
        if !(self.kappa_phi > one) {
            return fail("kappa_phi", "must be > 1");
        }
        if !(self.delta > zero && self.delta < one) {
            return fail("delta", "must lie in (0,1)");
        }
        if !(self.tau > zero && self.tau < one) {
            return fail("tau", "must lie in (0,1)");
        }
        if !(self.kappa_f > zero && self.kappa_f < one) {
            return fail("kappa_f", "must lie in (0,1)");
        }
        if !(self.phi_min > zero) {
            return fail("phi_min", "must be > 0");
        }
        if !(self.eta > zero && self.eta < one) {
            return fail("eta", "must lie in (0,1)");
        }
        if !(self.kappa_mu > one) {
            return fail("kappa_mu", "must be > 1");
        }
        if !(self.xi > zero) {
            return fail("xi", "must be > 0");
        }
        if !(self.psi > zero && self.psi < one) {
            return fail("psi", "must lie in (0,1)");
        }
        if !(self.delta_min > zero) {
            return fail("delta_min", "must be > 0");
        }
        if !(self.eps_theta > zero) {
            return fail("eps_theta", "must be > 0");
        }
        if !(self.eps_chi > zero) {
            return fail("eps_chi", "must be > 0");
        }
        if !(self.eps_comp > zero) {
            return fail("eps_comp", "must be > 0");
        }
        if !(self.eps_delta >= self.delta_min) {
            return fail("eps_delta", "must be >= delta_min");
        }
        if !(self.delta0 > zero) {
            return fail("delta0", "must be > 0");
        }
        if !(self.sigma0 > zero) {
            return fail("sigma0", "must be > 0");
        }
        if !(self.fully_linear.kappa_g > zero) {
            return fail("kappa_g", "must be > 0");
        }
        if !(self.fully_linear.kappa_h > zero) {
            return fail("kappa_h", "must be > 0");
        }
        if self.fully_linear.n_validation == 0 {
            return fail("n_validation", "must be >= 1");
        }
        if !(self.subsolver_tol > zero) {
            return fail("subsolver_tol", "must be > 0");
        }
        Ok(())
    }
}

/// Globalisation strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Funnel,
    Filter,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Funnel => "funnel",
            Strategy::Filter => "filter",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "funnel" => Some(Strategy::Funnel),
            "filter" => Some(Strategy::Filter),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepType {
    FType,
    ThetaType,
    Rejected,
    Restoration,
}

impl StepType {
    pub fn name(self) -> &'static str {
        match self {
            StepType::FType => "f",
            StepType::ThetaType => "theta",
            StepType::Rejected => "rejected",
            StepType::Restoration => "restoration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    CriticalPoint,
    SlowProgress,
    RestorationFailed,
    BudgetExhausted,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::CriticalPoint => "critical_point",
            Status::SlowProgress => "slow_progress",
            Status::RestorationFailed => "restoration_failed",
            Status::BudgetExhausted => "budget_exhausted",
        }
    }
}

/// One row of the iteration trace. `f`, `theta`, `delta`, `sigma` and `phi`
/// are the post-update state; the `_trial` columns carry the candidate that
/// was classified, and `theta_switch` the RM-vs-truth mismatch at the center
/// used by the switching test and the ρ denominator.
#[derive(Debug, Clone)]
pub struct TraceRecord<T: Real> {
    pub k: usize,
    pub step_type: StepType,
    pub f: T,
    pub theta: T,
    pub chi: T,
    pub delta: T,
    pub sigma: T,
    pub phi: Option<T>,
    pub step_norm: T,
    pub bb_evals: u64,
    pub wall_s: f64,
    pub f_trial: T,
    pub theta_trial: T,
    pub theta_switch: T,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepCounts {
    pub f_type: usize,
    pub theta_type: usize,
    pub rejected: usize,
    pub restoration: usize,
}

impl StepCounts {
    pub fn total(&self) -> usize {
        self.f_type + self.theta_type + self.rejected + self.restoration
    }
}

/// Final outcome of a run plus the full per-iteration trace.
#[derive(Debug, Clone)]
pub struct SolverReport<T: Real> {
    pub status: Status,
    pub problem: String,
    pub rm_form: RmForm,
    pub strategy: Strategy,
    pub x: Vector<T>,
    pub f: T,
    pub theta: T,
    pub chi: T,
    pub iterations: usize,
    pub counts: StepCounts,
    pub black_box_evals: u64,
    pub glass_box_evals: u64,
    pub bb_sampling: u64,
    pub bb_theta: u64,
    pub bb_restoration: u64,
    pub wall_s: f64,
    pub trace: Vec<TraceRecord<T>>,
}

/// Per-run options (everything that is not a tuning constant).
pub struct RunOptions<T: Real> {
    pub rm_form: RmForm,
    pub strategy: Strategy,
    pub x0: Vector<T>,
    pub seed: u64,
    pub max_iter: usize,
    pub max_bb_evals: u64,
    /// Record real wall-clock seconds in trace rows (defeats byte-identical
    /// trace reproducibility; reports always carry real timings).
    pub timing_in_trace: bool,
    pub subsolver: std::sync::Arc<dyn NlpSolver<T>>,
}

impl<T: Real> RunOptions<T> {
    pub fn new(rm_form: RmForm, strategy: Strategy, x0: Vector<T>) -> Self {
        Self {
            rm_form,
            strategy,
            x0,
            seed: 0,
            max_iter: 1000,
            max_bb_evals: 1_000_000,
            timing_in_trace: false,
            subsolver: std::sync::Arc::new(AugLagSolver::default()),
        }
    }
}

/// Termination decision for the current state.
#[allow(clippy::too_many_arguments)]
pub fn check_termination<T: Real>(
    theta: T,
    theta_prev: Option<T>,
    chi: T,
    sigma: T,
    delta_tr: T,
    delta_prev: Option<T>,
    k: usize,
    bb_evals: u64,
    p: &AlgorithmParams<T>,
    max_iter: usize,
    max_bb_evals: u64,
) -> Option<Status> {
    if theta <= p.eps_theta && chi <= p.eps_chi && sigma <= p.eps_delta {
        return Some(Status::CriticalPoint);
    }
    if let (Some(tp), Some(dp)) = (theta_prev, delta_prev) {
        if theta <= p.eps_theta && tp <= p.eps_theta && delta_tr <= p.delta_min && dp <= p.delta_min
        {
            return Some(Status::SlowProgress);
        }
    }
    if k >= max_iter || bb_evals >= max_bb_evals {
        return Some(Status::BudgetExhausted);
    }
    None
}

/// Sampling-radius contraction when the criticality test χ < ξσ fires.
pub fn criticality_update<T: Real>(sigma_prev: T, chi: T, xi: T, delta_min: T) -> T {
    sigma_prev.min(chi / xi).max(delta_min)
}

enum Globalizer<T: Real> {
    Funnel(FunnelState<T>),
    Filter(FilterSet<T>),
}

impl<T: Real> Globalizer<T> {
    fn phi(&self) -> Option<T> {
        match self {
            Globalizer::Funnel(f) => Some(f.phi),
            Globalizer::Filter(_) => None,
        }
    }

    fn gate(&self, f_trial: T, theta_trial: T) -> bool {
        match self {
            Globalizer::Funnel(f) => theta_trial <= f.phi,
            Globalizer::Filter(f) => f.acceptable(f_trial, theta_trial),
        }
    }
}

struct DriverState<'p, T: Real> {
    problem: &'p GreyBoxProblem<T>,
    params: AlgorithmParams<T>,
    opts: RunOptions<T>,
    ledger: EvaluationLedger,
    cache: BlackBoxCache<T>,
    rng: ChaCha8Rng,
    x: Point<T>,
    f: T,
    theta: T,
    chi: T,
    delta: T,
    sigma: T,
    glob: Globalizer<T>,
    rm: Option<ReducedModel<T>>,
    /// (center, σ) the current model was last certified (or conceded) at;
    /// avoids re-running the certification loop on unchanged state.
    rm_checked_at: Option<(Vector<T>, T)>,
    theta_switch: T,
    k: usize,
    counts: StepCounts,
    trace: Vec<TraceRecord<T>>,
    prev_theta: Option<T>,
    prev_delta: Option<T>,
    started: Instant,
}

impl<'p, T: Real> DriverState<'p, T> {
    fn budget_left(&self) -> bool {
        self.k < self.opts.max_iter && self.ledger.black_box_calls() < self.opts.max_bb_evals
    }

    fn emit(
        &mut self,
        step_type: StepType,
        step_norm: T,
        f_trial: T,
        theta_trial: T,
        cb: &mut dyn FnMut(&TraceRecord<T>),
    ) {
        let rec = TraceRecord {
            k: self.k,
            step_type,
            f: self.f,
            theta: self.theta,
            chi: self.chi,
            delta: self.delta,
            sigma: self.sigma,
            phi: self.glob.phi(),
            step_norm,
            bb_evals: self.ledger.black_box_calls(),
            wall_s: if self.opts.timing_in_trace {
                self.started.elapsed().as_secs_f64()
            } else {
                0.0
            },
            f_trial,
            theta_trial,
            theta_switch: self.theta_switch,
        };
        cb(&rec);
        match step_type {
            StepType::FType => self.counts.f_type += 1,
            StepType::ThetaType => self.counts.theta_type += 1,
            StepType::Rejected => self.counts.rejected += 1,
            StepType::Restoration => self.counts.restoration += 1,
        }
        self.trace.push(rec);
        self.k += 1;
    }

    /// Build (or re-certify) the reduced model at the current iterate and
    /// sampling radius. Up to five attempts: fresh seeds at the current σ
    /// first, then σ-halvings. If no attempt certifies, the attempt with the
    /// smallest residual-to-bound ratio is kept with a warning; a hopeless
    /// certificate (both sides scale as σ²) must not stall the run — the
    /// funnel gate remains the acceptance safety net.
    fn ensure_rm(&mut self) -> Result<(), Status> {
        if self.problem.n_y == 0 {
            if self.rm.is_none() {
                self.rm = Some(empty_rm(&self.x.w, self.sigma));
                self.theta_switch = T::zero();
            }
            return Ok(());
        }
        if let Some((c, s)) = &self.rm_checked_at {
            if *c == self.x.w && *s == self.sigma {
                return Ok(());
            }
        }
        if let Some(rm) = &self.rm {
            if rm.center == self.x.w && rm.sigma != self.sigma {
                // radius shrank (criticality update): re-certify before rebuilding
                let seed = self.rng.gen();
                if let Ok(rep) = verify_fully_linear(
                    rm,
                    self.problem,
                    self.sigma,
                    &self.params.fully_linear,
                    &self.ledger,
                    &self.cache,
                    seed,
                ) {
                    if rep.pass {
                        let sigma = self.sigma;
                        if let Some(rm) = self.rm.as_mut() {
                            rm.sigma = sigma;
                        }
                        self.rm_checked_at = Some((self.x.w.clone(), sigma));
                        return Ok(());
                    }
                }
            }
        }

        let (lo, hi) = self.problem.w_bounds();
        let entry_sigma = self.sigma;
        let mut best: Option<(ReducedModel<T>, T)> = None;
        let mut certified = false;
        for attempt in 0..5u32 {
            let sigma_try = if attempt >= 3 {
                (entry_sigma * cst::<T>(0.5).powi(attempt as i32 - 2)).max(self.params.delta_min)
            } else {
                entry_sigma
            };
            let seed: u64 = self.rng.gen();
            let samples = if self.opts.rm_form == RmForm::TaylorFirstOrder {
                taylor_stencil(&self.x.w, sigma_try, &lo, &hi)
            } else {
                match sample_design(&self.x.w, sigma_try, self.opts.rm_form, seed, &lo, &hi) {
                    Ok(s) => s,
                    Err(_) => continue,
                }
            };
            let mut values = Vec::with_capacity(samples.len());
            let mut failed = false;
            for s in &samples {
                match self
                    .cache
                    .eval(self.problem, s, &self.ledger, BbCategory::Sampling)
                {
                    Ok(v) => values.push(v),
                    Err(_) => {
                        failed = true;
                        break;
                    }
                }
            }
            if failed {
                continue;
            }
            let rm = match build_rm(self.opts.rm_form, &samples, &values, &self.x.w, sigma_try) {
                Ok(rm) => rm,
                Err(_) => continue,
            };
            let seed2: u64 = self.rng.gen();
            let Ok(rep) = verify_fully_linear(
                &rm,
                self.problem,
                sigma_try,
                &self.params.fully_linear,
                &self.ledger,
                &self.cache,
                seed2,
            ) else {
                continue;
            };
            let ratio = rep.max_residual / rep.bound.max(T::eps());
            let better = best.as_ref().map_or(true, |(_, r)| ratio < *r);
            if better {
                best = Some((rm, ratio));
            }
            if rep.pass {
                certified = true;
                self.sigma = sigma_try;
                break;
            }
        }
        match best {
            Some((rm, ratio)) => {
                if !certified {
                    warn!(
                        "model certification failed after 5 attempts (residual {:.2}x bound); continuing uncertified",
                        ratio
                    );
                    self.sigma = rm.sigma;
                }
                self.rm_checked_at = Some((self.x.w.clone(), self.sigma));
                self.theta_switch = self.center_mismatch(&rm);
                self.rm = Some(rm);
                Ok(())
            }
            None => {
                warn!("reduced-model construction failed repeatedly");
                Err(Status::RestorationFailed)
            }
        }
    }

    /// ‖t(w^k) − r^k(w^k)‖, served from the iteration cache (the center is in
    /// the sample set, so this charges nothing new).
    fn center_mismatch(&self, rm: &ReducedModel<T>) -> T {
        if self.problem.n_y == 0 {
            return T::zero();
        }
        match self
            .cache
            .eval(self.problem, &self.x.w, &self.ledger, BbCategory::Theta)
        {
            Ok(t) => (rm.predict(&self.x.w) - t).norm(),
            Err(_) => cst(f64::INFINITY),
        }
    }

    fn classify(&self, f_trial: T, theta_trial: T) -> StepDecision {
        let acceptance = AcceptanceParams {
            delta: self.params.delta,
            gamma_s: self.params.gamma_s,
            eta: self.params.eta,
            tau: self.params.tau,
        };
        match &self.glob {
            Globalizer::Funnel(funnel) => classify_step(
                self.f,
                f_trial,
                self.theta_switch,
                theta_trial,
                funnel.phi,
                self.delta,
                &acceptance,
            ),
            Globalizer::Filter(filter) => {
                // Filter strategy: the funnel gate and the θ sufficient
                // decrease are both replaced by filter acceptability; the
                // switching and Armijo tests are reused unchanged.
                let gate = filter.acceptable(f_trial, theta_trial);
                if !gate {
                    return StepDecision {
                        kind: StepKind::Rejected,
                        gate,
                        switching: None,
                        armijo: None,
                        theta_sufficient: None,
                    };
                }
                let drop = self.f - f_trial;
                let switching =
                    drop >= self.params.delta * self.theta_switch.powf(self.params.gamma_s);
                if switching {
                    let armijo = drop >= self.params.eta * self.delta;
                    StepDecision {
                        kind: if armijo { StepKind::FType } else { StepKind::Rejected },
                        gate,
                        switching: Some(true),
                        armijo: Some(armijo),
                        theta_sufficient: None,
                    }
                } else {
                    StepDecision {
                        kind: StepKind::ThetaType,
                        gate,
                        switching: Some(false),
                        armijo: None,
                        theta_sufficient: Some(true),
                    }
                }
            }
        }
    }

    fn move_to(&mut self, x_new: Point<T>, f_new: T, theta_new: T) {
        self.x = x_new;
        self.f = f_new;
        self.theta = theta_new;
        self.cache.clear();
    }

    fn final_report(mut self, status: Status) -> SolverReport<T> {
        let wall = self.started.elapsed().as_secs_f64();
        SolverReport {
            status,
            problem: self.problem.name.clone(),
            rm_form: self.opts.rm_form,
            strategy: self.opts.strategy,
            x: self.x.assemble(),
            f: self.f,
            theta: self.theta,
            chi: self.chi,
            iterations: self.counts.total(),
            counts: self.counts,
            black_box_evals: self.ledger.black_box_calls(),
            glass_box_evals: self.ledger.glass_box_calls(),
            bb_sampling: self.ledger.calls_in(BbCategory::Sampling),
            bb_theta: self.ledger.calls_in(BbCategory::Theta),
            bb_restoration: self.ledger.calls_in(BbCategory::Restoration),
            wall_s: wall,
            trace: std::mem::take(&mut self.trace),
        }
    }
}

fn empty_rm<T: Real>(center: &Vector<T>, sigma: T) -> ReducedModel<T> {
    // zero-output placeholder for problems without a black box
    let samples = vec![center.clone()];
    let values = vec![Vector::zeros(0)];
    build_rm(RmForm::TaylorFirstOrder, &samples, &values, center, sigma)
        .expect("trivial model construction cannot fail")
}

/// Run the solver on `problem` with validated parameters.
pub fn run<T: Real>(
    problem: &GreyBoxProblem<T>,
    params: &AlgorithmParams<T>,
    opts: RunOptions<T>,
) -> SolverReport<T> {
    run_with_callback(problem, params, opts, |_| {})
}

/// As [`run`], streaming each trace record to `cb` as it is produced.
pub fn run_with_callback<T: Real>(
    problem: &GreyBoxProblem<T>,
    params: &AlgorithmParams<T>,
    opts: RunOptions<T>,
    mut cb: impl FnMut(&TraceRecord<T>),
) -> SolverReport<T> {
    params.validate().expect("parameters must be validated before run()");

    let ledger = EvaluationLedger::new();
    let cache = BlackBoxCache::new();
    let rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut x0 = opts.x0.clone();
    let plo = problem.lower();
    let phi_b = problem.upper();
    for i in 0..problem.dim() {
        x0[i] = x0[i].max(plo[i]).min(phi_b[i]);
    }
    let x = problem.split(&x0).expect("x0 must match problem dimensions");
    let f0 = problem.objective_value(&x0);
    let theta0 = point_infeasibility(problem, &x, &ledger, &cache, BbCategory::Theta)
        .unwrap_or_else(|_| cst(f64::INFINITY));

    let glob = match opts.strategy {
        Strategy::Funnel => Globalizer::Funnel(init_funnel(theta0, params.phi_min, params.kappa_phi)),
        Strategy::Filter => Globalizer::Filter(FilterSet::default()),
    };

    let delta0 = params.delta0;
    let sigma0 = params.sigma0.min(delta0);
    let mut effective = *params;
    effective.subsolver_tol = params.subsolver_tol.min(params.eps_theta * cst(0.1));
    let mut st = DriverState {
        problem,
        params: effective,
        opts,
        ledger,
        cache,
        rng,
        x,
        f: f0,
        theta: theta0,
        chi: cst(f64::INFINITY),
        delta: delta0,
        sigma: sigma0,
        glob,
        rm: None,
        rm_checked_at: None,
        theta_switch: T::zero(),
        k: 0,
        counts: StepCounts::default(),
        trace: Vec::new(),
        prev_theta: None,
        prev_delta: None,
        started: Instant::now(),
    };

    let status = loop {
        if !st.budget_left() {
            break Status::BudgetExhausted;
        }

        // step 2: κ-fully-linear reduced model at the current iterate
        if let Err(s) = st.ensure_rm() {
            break s;
        }
        let rm = st.rm.as_ref().expect("ensure_rm leaves a model");
        st.theta_switch = st.center_mismatch(rm);

        // step 3: criticality and termination
        let (chi, _degenerate) = criticality_measure(problem, rm, &st.x, &st.ledger);
        st.chi = chi;
        if let Some(s) = check_termination(
            st.theta,
            st.prev_theta,
            st.chi,
            st.sigma,
            st.delta,
            st.prev_delta,
            st.k,
            st.ledger.black_box_calls(),
            &st.params,
            st.opts.max_iter,
            st.opts.max_bb_evals,
        ) {
            break s;
        }
        st.prev_theta = Some(st.theta);
        st.prev_delta = Some(st.delta);
        if st.chi < st.params.xi * st.sigma {
            st.sigma = criticality_update(st.sigma, st.chi, st.params.xi, st.params.delta_min);
        }

        // step 4: compatibility, with restoration as the fallback
        let mut comp = compatibility_step(
            problem,
            st.rm.as_ref().unwrap(),
            &st.x,
            st.delta,
            st.params.kappa_delta,
            st.params.kappa_mu,
            st.params.mu,
            &*st.opts.subsolver,
            st.params.subsolver_tol,
        );
        if comp.alpha > st.params.eps_comp
            || comp.solution.status == NlpStatus::NumericFailure
        {
            match restoration(&mut st, comp, &mut cb) {
                Ok(c) => comp = c,
                Err(s) => break s,
            }
        }

        // step 5: TRSP warm-started at the compatible point
        let rm = st.rm.as_ref().unwrap();
        let trsp = solve_trsp(
            problem,
            rm,
            &st.x,
            &comp.d,
            st.delta,
            &*st.opts.subsolver,
            st.params.subsolver_tol,
        );
        let step_norm = wz_norm(problem, &trsp.s);

        // step 6: trial-point evaluations
        let f_trial = trsp.f_s;
        let theta_trial =
            match point_infeasibility(problem, &trsp.x_s, &st.ledger, &st.cache, BbCategory::Theta)
            {
                Ok(t) => t,
                Err(_) => cst(f64::INFINITY), // fails the gate, step rejected
            };

        // steps 7-11: classification and state updates
        let decision = st.classify(f_trial, theta_trial);
        let delta_old = st.delta;
        match decision.kind {
            StepKind::FType => {
                st.move_to(trsp.x_s, f_trial, theta_trial);
                st.delta = update_tr_f_type(step_norm, delta_old, st.params.gamma_e)
                    .max(st.params.delta_min);
                st.emit(StepType::FType, step_norm, f_trial, theta_trial, &mut cb);
            }
            StepKind::ThetaType => {
                let rho = reduction_ratio(st.theta, theta_trial, st.theta_switch, st.params.eps_theta);
                st.move_to(trsp.x_s, f_trial, theta_trial);
                st.sigma = st.sigma.min(st.params.psi * delta_old);
                st.delta = update_tr_theta_type(
                    rho,
                    step_norm,
                    delta_old,
                    st.params.gamma_c,
                    st.params.gamma_e,
                    st.params.eta1,
                    st.params.eta2,
                )
                .max(st.params.delta_min);
                st.sigma = st.sigma.min(st.delta);
                match &mut st.glob {
                    Globalizer::Funnel(funnel) => {
                        *funnel = update_funnel(*funnel, theta_trial, st.params.kappa_f);
                    }
                    Globalizer::Filter(filter) => filter.augment(f_trial, theta_trial),
                }
                st.emit(StepType::ThetaType, step_norm, f_trial, theta_trial, &mut cb);
            }
            StepKind::Rejected => {
                st.delta = (st.params.gamma_c * step_norm).max(st.params.delta_min);
                st.sigma = st.sigma.min(st.params.psi * delta_old).min(st.delta);
                st.emit(StepType::Rejected, step_norm, f_trial, theta_trial, &mut cb);
            }
        }
    };

    st.final_report(status)
}

/// Restoration phase: repair feasibility by projecting the auxiliaries onto
/// the current surrogate (the restoration subproblem frees `y`), adjusting
/// the trust region with the reduction-ratio test and rebuilding the model,
/// until a compatible subproblem satisfying the acceptance gate exists or
/// the pass budget runs out.
///
/// The trust region moves both ways: an infeasible restoration solve means
/// the ball cannot even hold the glass constraints, so Δ grows; a
/// well-agreeing pass at the ball boundary also grows Δ; poor agreement
/// shrinks it.
fn restoration<T: Real>(
    st: &mut DriverState<'_, T>,
    comp0: crate::subproblems::Compatibility<T>,
    cb: &mut dyn FnMut(&TraceRecord<T>),
) -> Result<crate::subproblems::Compatibility<T>, Status> {
    let mut passes = 0usize;
    let mut comp = comp0;
    loop {
        // admissibility of the compatibility point (y pinned at y^k there)
        let x_tilde = st
            .problem
            .split(&(st.x.assemble() + &comp.d))
            .expect("compatibility preserves dimensions");
        let theta_tilde = point_infeasibility(
            st.problem,
            &x_tilde,
            &st.ledger,
            &st.cache,
            BbCategory::Restoration,
        )
        .unwrap_or_else(|_| cst(f64::INFINITY));
        let f_tilde = st.problem.objective_value(&x_tilde.assemble());
        let gate = st.glob.gate(f_tilde, theta_tilde);
        let subsolver_ok = matches!(
            comp.solution.status,
            NlpStatus::Solved | NlpStatus::MaxInner
        );

        if comp.alpha <= st.params.eps_comp && subsolver_ok && gate {
            return Ok(comp);
        }

        if passes >= st.params.restoration_budget {
            return Err(Status::RestorationFailed);
        }
        if !st.budget_left() {
            return Err(Status::BudgetExhausted);
        }
        passes += 1;

        // one restoration pass: move y (and w, z) toward surrogate/glass
        // feasibility inside the Δ-ball
        let rest = crate::subproblems::restoration_step(
            st.problem,
            st.rm.as_ref().unwrap(),
            &st.x,
            st.delta,
            &*st.opts.subsolver,
            st.params.subsolver_tol,
        );
        let x_rest = st
            .problem
            .split(&(st.x.assemble() + &rest.d))
            .expect("restoration preserves dimensions");
        let theta_rest = point_infeasibility(
            st.problem,
            &x_rest,
            &st.ledger,
            &st.cache,
            BbCategory::Restoration,
        )
        .unwrap_or_else(|_| cst(f64::INFINITY));
        let f_rest = st.problem.objective_value(&x_rest.assemble());
        let rest_ok = matches!(
            rest.solution.status,
            NlpStatus::Solved | NlpStatus::MaxInner
        );
        let rest_gate = st.glob.gate(f_rest, theta_rest);

        let rho = reduction_ratio(st.theta, theta_rest, st.theta_switch, st.params.eps_theta);
        let step_norm = wz_norm(st.problem, &rest.d);
        if !rest_ok {
            // the ball is too tight for the glass constraints themselves
            st.delta = st.params.gamma_e * st.delta;
        } else if rho < st.params.eta1 {
            st.delta = (st.params.gamma_c * st.delta).max(st.params.delta_min);
        } else if rho >= st.params.eta2 {
            st.delta = (st.params.gamma_e * step_norm).max(st.delta);
        }

        log::debug!(
            "restoration pass {passes}: alpha={:e} rest_alpha={:e} theta_rest={:e} rho={:e} delta={:e} rest_status={:?} gate={rest_gate}",
            comp.alpha, rest.alpha, theta_rest, rho, st.delta, rest.solution.status
        );
        if rest_ok && rest_gate && rest.d.amax() > T::zero() {
            st.move_to(x_rest, f_rest, theta_rest);
        }
        st.sigma = st.sigma.min(st.params.psi * st.delta).min(st.delta);

        if let Err(s) = st.ensure_rm() {
            return Err(s);
        }
        let rm = st.rm.as_ref().unwrap();
        st.theta_switch = st.center_mismatch(rm);
        let (chi, _) = criticality_measure(st.problem, rm, &st.x, &st.ledger);
        st.chi = chi;

        st.emit(StepType::Restoration, step_norm, f_rest, theta_rest, cb);

        comp = compatibility_step(
            st.problem,
            st.rm.as_ref().unwrap(),
            &st.x,
            st.delta,
            st.params.kappa_delta,
            st.params.kappa_mu,
            st.params.mu,
            &*st.opts.subsolver,
            st.params.subsolver_tol,
        );
    }
}
