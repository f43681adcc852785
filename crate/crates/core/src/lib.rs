//! Trust-region solver library for constrained grey-box optimisation.
//!
//! A grey-box problem mixes explicit algebraic (glass-box) equations, with
//! analytic derivatives, and opaque black-box maps `t(w)` that can only be
//! sampled. The solver builds local reduced models (surrogates) of `t` inside
//! a sampling region, solves trust-region subproblems against the glass-box
//! algebra plus the surrogate link `y = r(w)`, and globalises with either a
//! funnel (a single monotone bound on the surrogate infeasibility) or a
//! classical filter of `(f, θ)` pairs.
//!
//! The crate is organised as:
//!
//! * [`problem`] — the grey-box problem abstraction, point partition and
//!   evaluation ledger;
//! * [`rm`] — the five reduced-model forms (linear, quadratic, simple
//!   quadratic, Gaussian process, first-order Taylor) and their accuracy
//!   certification;
//! * [`lp`] / [`nlp`] — the bundled dense-simplex LP and augmented-Lagrangian
//!   NLP subsolvers, plus the pluggable solver contract;
//! * [`subproblems`] — criticality, compatibility and trust-region
//!   subproblem assembly;
//! * [`funnel`] / [`filter`] — the two globalisation strategies;
//! * [`driver`] — the outer algorithm, iteration traces and run reports;
//! * [`benchmarks`] — six bundled grey-box test problems with reference
//!   solutions.
//!
//! Numeric kernels are generic over the scalar type through the [`Real`]
//! trait (implemented for `f32` and `f64`); the bundled benchmarks and the
//! concrete aliases below are `f64`.

pub mod benchmarks;
pub mod driver;
pub mod filter;
pub mod funnel;
pub mod lp;
pub mod nlp;
pub mod problem;
pub mod rm;
pub mod scalar;
pub mod subproblems;

pub use driver::{run, AlgorithmParams, RunOptions, SolverReport, Status, StepType, TraceRecord};
pub use filter::FilterSet;
pub use funnel::FunnelState;
pub use problem::{EvaluationLedger, GreyBoxProblem, Point};
pub use rm::{ReducedModel, RmForm};
pub use scalar::Real;

/// Dense vector alias used throughout the crate.
pub type Vector<T> = nalgebra::DVector<T>;
/// Dense matrix alias used throughout the crate.
pub type Matrix<T> = nalgebra::DMatrix<T>;

/// Concrete double-precision aliases; the bundled benchmarks and CLI use these.
pub type Vec64 = Vector<f64>;
pub type Mat64 = Matrix<f64>;
pub type Problem64 = GreyBoxProblem<f64>;
pub type Params64 = AlgorithmParams<f64>;
pub type Report64 = SolverReport<f64>;
