//! Local reduced models of the black box over a sampling region.
//!
//! Five forms are supported: linear, full quadratic, simple quadratic
//! (no interaction terms), noise-free Gaussian-process regression with a
//! squared-exponential kernel, and a first-order Taylor expansion built from
//! central differences of the black box. Polynomial forms are least-squares
//! fits that interpolate exactly when the design size equals the basis size
//! (which is how the default design sizes are chosen); the GP interpolates by
//! construction.
//!
//! All fitting happens in the scaled coordinates `u = (w − center)/σ`, which
//! keeps the design matrices well conditioned regardless of the physical
//! units of `w`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::problem::{BbCategory, BlackBoxCache, EvalError, EvaluationLedger, GreyBoxProblem};
use crate::scalar::{cst, Real};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RmForm {
    Linear,
    Quadratic,
    SimpleQuadratic,
    GaussianProcess,
    TaylorFirstOrder,
}

impl RmForm {
    pub const ALL: [RmForm; 5] = [
        RmForm::Linear,
        RmForm::Quadratic,
        RmForm::SimpleQuadratic,
        RmForm::GaussianProcess,
        RmForm::TaylorFirstOrder,
    ];

    /// Number of design points the sampler produces for this form.
    pub fn sample_count(self, n_w: usize) -> usize {
        match self {
            RmForm::Linear | RmForm::TaylorFirstOrder => n_w + 1,
            RmForm::Quadratic => (n_w + 1) * (n_w + 2) / 2,
            RmForm::SimpleQuadratic | RmForm::GaussianProcess => 2 * n_w + 1,
        }
    }

    fn basis_size(self, n_w: usize) -> usize {
        match self {
            RmForm::Linear => n_w + 1,
            RmForm::Quadratic => (n_w + 1) * (n_w + 2) / 2,
            RmForm::SimpleQuadratic => 2 * n_w + 1,
            RmForm::GaussianProcess | RmForm::TaylorFirstOrder => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RmForm::Linear => "linear",
            RmForm::Quadratic => "quadratic",
            RmForm::SimpleQuadratic => "simple_quadratic",
            RmForm::GaussianProcess => "gp",
            RmForm::TaylorFirstOrder => "taylor",
        }
    }

    pub fn parse(s: &str) -> Option<RmForm> {
        match s {
            "linear" => Some(RmForm::Linear),
            "quadratic" => Some(RmForm::Quadratic),
            "simple_quadratic" => Some(RmForm::SimpleQuadratic),
            "gp" => Some(RmForm::GaussianProcess),
            "taylor" => Some(RmForm::TaylorFirstOrder),
            _ => None,
        }
    }
}

impl std::fmt::Display for RmForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum RmError {
    #[error("design is rank-deficient for the requested form")]
    DegenerateGeometry,
    #[error("fit is numerically singular")]
    SingularFit,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("sample/value bookkeeping mismatch")]
    Dims,
}

/// Constants of the model-accuracy certificate and how many fresh points the
/// zeroth-order check uses.
#[derive(Debug, Clone, Copy)]
pub struct FullyLinearParams<T: Real> {
    pub kappa_g: T,
    pub kappa_h: T,
    pub n_validation: usize,
}

impl<T: Real> Default for FullyLinearParams<T> {
    fn default() -> Self {
        Self {
            kappa_g: cst(10.0),
            kappa_h: cst(10.0),
            n_validation: 2,
        }
    }
}

#[derive(Debug, Clone)]
enum Coeffs<T: Real> {
    /// Coefficients over the scaled monomial basis, one column per output.
    Poly { coef: Matrix<T> },
    /// Kriging weights over the scaled training set, plus the constant mean
    /// that was subtracted before fitting.
    Gp {
        train: Matrix<T>,
        alpha: Matrix<T>,
        mean: Vector<T>,
    },
    /// Value and Jacobian of the expansion at the center.
    Taylor { t0: Vector<T>, jac: Matrix<T> },
}

/// A fitted local surrogate `r(w) ≈ t(w)` with value and Jacobian queries.
#[derive(Debug, Clone)]
pub struct ReducedModel<T: Real> {
    pub form: RmForm,
    pub center: Vector<T>,
    pub sigma: T,
    pub samples: Vec<Vector<T>>,
    pub values: Vec<Vector<T>>,
    n_y: usize,
    coeffs: Coeffs<T>,
}

fn poly_basis<T: Real>(form: RmForm, u: &Vector<T>) -> Vector<T> {
    let n = u.len();
    let mut phi = Vec::with_capacity(form.basis_size(n));
    phi.push(T::one());
    for i in 0..n {
        phi.push(u[i]);
    }
    match form {
        RmForm::Linear => {}
        RmForm::SimpleQuadratic => {
            for i in 0..n {
                phi.push(u[i] * u[i]);
            }
        }
        RmForm::Quadratic => {
            for i in 0..n {
                for j in i..n {
                    phi.push(u[i] * u[j]);
                }
            }
        }
        _ => unreachable!("not a polynomial form"),
    }
    Vector::from_vec(phi)
}

/// Partial derivatives of the basis w.r.t. the scaled coordinates,
/// `dphi[(k, d)] = ∂φ_k/∂u_d`.
fn poly_basis_grad<T: Real>(form: RmForm, u: &Vector<T>) -> Matrix<T> {
    let n = u.len();
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(form.basis_size(n));
    rows.push(vec![T::zero(); n]);
    for i in 0..n {
        let mut r = vec![T::zero(); n];
        r[i] = T::one();
        rows.push(r);
    }
    match form {
        RmForm::Linear => {}
        RmForm::SimpleQuadratic => {
            for i in 0..n {
                let mut r = vec![T::zero(); n];
                r[i] = cst::<T>(2.0) * u[i];
                rows.push(r);
            }
        }
        RmForm::Quadratic => {
            for i in 0..n {
                for j in i..n {
                    let mut r = vec![T::zero(); n];
                    if i == j {
                        r[i] = cst::<T>(2.0) * u[i];
                    } else {
                        r[i] = u[j];
                        r[j] = u[i];
                    }
                    rows.push(r);
                }
            }
        }
        _ => unreachable!("not a polynomial form"),
    }
    let nb = rows.len();
    Matrix::from_fn(nb, n, |k, d| rows[k][d])
}

fn scaled<T: Real>(w: &Vector<T>, center: &Vector<T>, sigma: T) -> Vector<T> {
    (w - center) / sigma
}

fn design_matrix<T: Real>(
    form: RmForm,
    samples: &[Vector<T>],
    center: &Vector<T>,
    sigma: T,
) -> Matrix<T> {
    let nb = form.basis_size(center.len());
    let mut phi = Matrix::zeros(samples.len(), nb);
    for (i, s) in samples.iter().enumerate() {
        let row = poly_basis(form, &scaled(s, center, sigma));
        for k in 0..nb {
            phi[(i, k)] = row[k];
        }
    }
    phi
}

fn condition_number<T: Real>(m: &Matrix<T>) -> T {
    let svd = m.clone().svd(false, false);
    let mut max = T::zero();
    let mut min = cst::<T>(f64::INFINITY);
    for s in svd.singular_values.iter() {
        max = max.max(*s);
        min = min.min(*s);
    }
    if min <= T::zero() {
        cst(f64::INFINITY)
    } else {
        max / min
    }
}

/// Draw the design for `form`: the center plus uniform points in the ∞-ball
/// of radius `sigma`, clipped to the `w` box. Deterministic per seed.
pub fn sample_design<T: Real>(
    center: &Vector<T>,
    sigma: T,
    form: RmForm,
    seed: u64,
    lower_w: &Vector<T>,
    upper_w: &Vector<T>,
) -> Result<Vec<Vector<T>>, RmError> {
    assert!(sigma > T::zero(), "sampling radius must be positive");
    let n = center.len();
    let p = form.sample_count(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clip = |v: T, i: usize| v.max(lower_w[i]).min(upper_w[i]);

    let mut pts = Vec::with_capacity(p);
    let mut c = center.clone();
    for i in 0..n {
        c[i] = clip(c[i], i);
    }
    pts.push(c);
    while pts.len() < p {
        let mut w = center.clone();
        for i in 0..n {
            let d: f64 = rng.gen_range(-1.0..=1.0);
            w[i] = clip(center[i] + cst::<T>(d) * sigma, i);
        }
        pts.push(w);
    }

    match form {
        RmForm::Linear | RmForm::Quadratic | RmForm::SimpleQuadratic => {
            let phi = design_matrix(form, &pts, center, sigma);
            if condition_number(&phi) > cst(1e12) {
                return Err(RmError::DegenerateGeometry);
            }
        }
        RmForm::GaussianProcess => {
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    if (&pts[i] - &pts[j]).amax() <= T::eps() * cst(16.0) {
                        return Err(RmError::DegenerateGeometry);
                    }
                }
            }
        }
        RmForm::TaylorFirstOrder => {}
    }
    Ok(pts)
}

/// Central-difference stencil for the Taylor form: the center plus `±h·e_i`
/// per coordinate (step `max(1e-6, 1e-2·σ)`), clipped to the `w` box. Pinned
/// coordinates (zero-width box) are skipped.
pub fn taylor_stencil<T: Real>(
    center: &Vector<T>,
    sigma: T,
    lower_w: &Vector<T>,
    upper_w: &Vector<T>,
) -> Vec<Vector<T>> {
    let n = center.len();
    let h = cst::<T>(1e-6).max(cst::<T>(1e-2) * sigma);
    let mut pts = vec![center.clone()];
    for i in 0..n {
        let wp = (center[i] + h).min(upper_w[i]);
        let wm = (center[i] - h).max(lower_w[i]);
        if wp <= wm {
            continue;
        }
        let mut p = center.clone();
        p[i] = wp;
        pts.push(p);
        let mut m = center.clone();
        m[i] = wm;
        pts.push(m);
    }
    pts
}

fn kernel<T: Real>(a: &Vector<T>, b: &Vector<T>) -> T {
    let d = a - b;
    (-cst::<T>(0.5) * d.dot(&d)).exp()
}

/// Fit a reduced model of `form` to `(samples, t_values)`.
///
/// For `TaylorFirstOrder` the samples must be a [`taylor_stencil`] layout
/// (center first, then ± pairs per free coordinate).
pub fn build_rm<T: Real>(
    form: RmForm,
    samples: &[Vector<T>],
    t_values: &[Vector<T>],
    center: &Vector<T>,
    sigma: T,
) -> Result<ReducedModel<T>, RmError> {
    if samples.len() != t_values.len() || samples.is_empty() {
        return Err(RmError::Dims);
    }
    let n_y = t_values[0].len();
    let p = samples.len();

    let coeffs = match form {
        RmForm::Linear | RmForm::Quadratic | RmForm::SimpleQuadratic => {
            let phi = design_matrix(form, samples, center, sigma);
            if condition_number(&phi) > cst(1e12) {
                return Err(RmError::SingularFit);
            }
            let mut y = Matrix::zeros(p, n_y);
            for (i, t) in t_values.iter().enumerate() {
                for o in 0..n_y {
                    y[(i, o)] = t[o];
                }
            }
            let svd = phi.svd(true, true);
            let coef = svd
                .solve(&y, T::eps() * cst(1e3))
                .map_err(|_| RmError::SingularFit)?;
            Coeffs::Poly { coef }
        }
        RmForm::GaussianProcess => {
            let mut train = Matrix::zeros(p, center.len());
            for (i, s) in samples.iter().enumerate() {
                let u = scaled(s, center, sigma);
                for d in 0..center.len() {
                    train[(i, d)] = u[d];
                }
            }
            let mut mean = Vector::zeros(n_y);
            for t in t_values {
                mean += t;
            }
            mean /= cst::<T>(p as f64);
            let mut resid = Matrix::zeros(p, n_y);
            for (i, t) in t_values.iter().enumerate() {
                for o in 0..n_y {
                    resid[(i, o)] = t[o] - mean[o];
                }
            }
            let mut k = Matrix::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    k[(i, j)] = kernel(
                        &train.row(i).transpose().into_owned(),
                        &train.row(j).transpose().into_owned(),
                    );
                }
            }
            let mut alpha = None;
            for jitter in [1e-10, 1e-8, 1e-6] {
                let mut kj = k.clone();
                for i in 0..p {
                    kj[(i, i)] += cst::<T>(jitter);
                }
                if let Some(chol) = kj.cholesky() {
                    alpha = Some(chol.solve(&resid));
                    break;
                }
            }
            let alpha = alpha.ok_or(RmError::SingularFit)?;
            Coeffs::Gp { train, alpha, mean }
        }
        RmForm::TaylorFirstOrder => {
            let n = center.len();
            let t0 = t_values[0].clone();
            let mut jac = Matrix::zeros(n_y, n);
            // Pairs follow the stencil layout; recover the coordinate each
            // pair perturbs from the sample data itself.
            let mut idx = 1;
            while idx + 1 < samples.len() {
                let sp = &samples[idx];
                let sm = &samples[idx + 1];
                let mut dim = None;
                for d in 0..n {
                    if sp[d] != center[d] || sm[d] != center[d] {
                        dim = Some(d);
                        break;
                    }
                }
                let d = dim.ok_or(RmError::Dims)?;
                let span = sp[d] - sm[d];
                if span.abs() <= T::zero() {
                    return Err(RmError::DegenerateGeometry);
                }
                let col = (&t_values[idx] - &t_values[idx + 1]) / span;
                jac.set_column(d, &col);
                idx += 2;
            }
            Coeffs::Taylor { t0, jac }
        }
    };

    Ok(ReducedModel {
        form,
        center: center.clone(),
        sigma,
        samples: samples.to_vec(),
        values: t_values.to_vec(),
        n_y,
        coeffs,
    })
}

impl<T: Real> ReducedModel<T> {
    pub fn n_outputs(&self) -> usize {
        self.n_y
    }

    /// Surrogate value `r(w)`.
    pub fn predict(&self, w: &Vector<T>) -> Vector<T> {
        match &self.coeffs {
            Coeffs::Poly { coef } => {
                let phi = poly_basis(self.form, &scaled(w, &self.center, self.sigma));
                coef.transpose() * phi
            }
            Coeffs::Gp { train, alpha, mean } => {
                let u = scaled(w, &self.center, self.sigma);
                let p = train.nrows();
                let mut r = mean.clone();
                for i in 0..p {
                    let ki = kernel(&u, &train.row(i).transpose().into_owned());
                    for o in 0..self.n_y {
                        r[o] += alpha[(i, o)] * ki;
                    }
                }
                r
            }
            Coeffs::Taylor { t0, jac } => t0 + jac * (w - &self.center),
        }
    }

    /// Surrogate Jacobian `∇r(w)` (rows = outputs, columns = w components).
    pub fn jacobian(&self, w: &Vector<T>) -> Matrix<T> {
        match &self.coeffs {
            Coeffs::Poly { coef } => {
                let dphi = poly_basis_grad(self.form, &scaled(w, &self.center, self.sigma));
                (coef.transpose() * dphi) / self.sigma
            }
            Coeffs::Gp { train, alpha, .. } => {
                let u = scaled(w, &self.center, self.sigma);
                let p = train.nrows();
                let n = self.center.len();
                let mut jac = Matrix::zeros(self.n_y, n);
                for i in 0..p {
                    let ui = train.row(i).transpose().into_owned();
                    let ki = kernel(&u, &ui);
                    for o in 0..self.n_y {
                        let a = alpha[(i, o)] * ki;
                        for d in 0..n {
                            jac[(o, d)] += a * (ui[d] - u[d]) / self.sigma;
                        }
                    }
                }
                jac
            }
            Coeffs::Taylor { jac, .. } => jac.clone(),
        }
    }
}

/// Result of the zeroth-order fully-linear check.
#[derive(Debug, Clone, Copy)]
pub struct FlReport<T: Real> {
    pub pass: bool,
    pub max_residual: T,
    pub bound: T,
}

/// Check `‖r(w) − t(w)‖ ≤ κ_h σ²` at fresh random points in the σ-ball.
///
/// The gradient half of the certificate cannot be tested without `∇t`; it
/// holds by construction for the Linear and Taylor forms and is covered by
/// this value test for the rest.
pub fn verify_fully_linear<T: Real>(
    rm: &ReducedModel<T>,
    problem: &GreyBoxProblem<T>,
    sigma: T,
    params: &FullyLinearParams<T>,
    ledger: &EvaluationLedger,
    cache: &BlackBoxCache<T>,
    seed: u64,
) -> Result<FlReport<T>, EvalError> {
    let bound = params.kappa_h * sigma * sigma;
    if problem.n_y == 0 {
        return Ok(FlReport {
            pass: true,
            max_residual: T::zero(),
            bound,
        });
    }
    let (lo, hi) = problem.w_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual = T::zero();
    for _ in 0..params.n_validation {
        let mut w = rm.center.clone();
        for i in 0..w.len() {
            let d: f64 = rng.gen_range(-1.0..=1.0);
            w[i] = (rm.center[i] + cst::<T>(d) * sigma).max(lo[i]).min(hi[i]);
        }
        let t = cache.eval(problem, &w, ledger, BbCategory::Sampling)?;
        let r = rm.predict(&w);
        max_residual = max_residual.max((r - t).norm());
    }
    Ok(FlReport {
        pass: max_residual <= bound,
        max_residual,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::fd_jacobian;

    fn wide_bounds(n: usize) -> (Vector<f64>, Vector<f64>) {
        (
            Vector::from_element(n, -1e6),
            Vector::from_element(n, 1e6),
        )
    }

    fn eval_all(samples: &[Vector<f64>], t: impl Fn(&Vector<f64>) -> Vector<f64>) -> Vec<Vector<f64>> {
        samples.iter().map(|s| t(s)).collect()
    }

    #[test]
    fn design_cardinality_and_determinism() {
        let c = Vector::from_column_slice(&[0.0, 0.0, 0.0]);
        let (lo, hi) = wide_bounds(3);
        let lin = sample_design(&c, 0.5, RmForm::Linear, 9, &lo, &hi).unwrap();
        assert_eq!(lin.len(), 4);
        assert!(lin.iter().all(|p| (p - &c).amax() <= 0.5 + 1e-12));
        assert_eq!(lin[0], c);

        let c2 = Vector::from_column_slice(&[0.0, 0.0]);
        let (lo2, hi2) = wide_bounds(2);
        let quad = sample_design(&c2, 0.3, RmForm::Quadratic, 9, &lo2, &hi2).unwrap();
        assert_eq!(quad.len(), 6);

        let again = sample_design(&c, 0.5, RmForm::Linear, 9, &lo, &hi).unwrap();
        assert_eq!(lin, again);
        let other = sample_design(&c, 0.5, RmForm::Linear, 10, &lo, &hi).unwrap();
        assert_ne!(lin, other);
    }

    #[test]
    fn linear_reproduces_affine_function() {
        let c = Vector::from_column_slice(&[1.0]);
        let (lo, hi) = wide_bounds(1);
        let samples = sample_design(&c, 0.5, RmForm::Linear, 3, &lo, &hi).unwrap();
        let t = |w: &Vector<f64>| Vector::from_column_slice(&[2.0 * w[0] + 1.0]);
        let values = eval_all(&samples, t);
        let rm = build_rm(RmForm::Linear, &samples, &values, &c, 0.5).unwrap();
        for w in [-3.0, 0.0, 0.7, 42.0] {
            let wv = Vector::from_column_slice(&[w]);
            assert!((rm.predict(&wv)[0] - (2.0 * w + 1.0)).abs() < 1e-9);
        }
        assert!((rm.jacobian(&c)[(0, 0)] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_reproduces_bilinear_function() {
        let c = Vector::from_column_slice(&[0.2, -0.1]);
        let (lo, hi) = wide_bounds(2);
        let samples = sample_design(&c, 0.5, RmForm::Quadratic, 11, &lo, &hi).unwrap();
        let t = |w: &Vector<f64>| Vector::from_column_slice(&[w[0] * w[1]]);
        let values = eval_all(&samples, t);
        let rm = build_rm(RmForm::Quadratic, &samples, &values, &c, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let w = Vector::from_column_slice(&[
                c[0] + rng.gen_range(-0.5..0.5),
                c[1] + rng.gen_range(-0.5..0.5),
            ]);
            assert!((rm.predict(&w)[0] - w[0] * w[1]).abs() <= 1e-8);
        }
    }

    #[test]
    fn simple_quadratic_has_no_interaction_terms() {
        let c = Vector::from_column_slice(&[0.0, 0.0]);
        let (lo, hi) = wide_bounds(2);
        let samples = sample_design(&c, 1.0, RmForm::SimpleQuadratic, 2, &lo, &hi).unwrap();
        let t = |w: &Vector<f64>| Vector::from_column_slice(&[w[0] * w[0] - 2.0 * w[1] * w[1]]);
        let values = eval_all(&samples, t);
        let rm = build_rm(RmForm::SimpleQuadratic, &samples, &values, &c, 1.0).unwrap();
        // mixed second derivative of the prediction must vanish
        let h = 1e-4;
        let at = |a: f64, b: f64| rm.predict(&Vector::from_column_slice(&[a, b]))[0];
        let mixed = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
        assert!(mixed.abs() < 1e-6, "mixed derivative {mixed}");
    }

    #[test]
    fn gp_interpolates_training_points() {
        let c = Vector::from_column_slice(&[0.5, 0.5]);
        let (lo, hi) = wide_bounds(2);
        let samples = sample_design(&c, 0.4, RmForm::GaussianProcess, 21, &lo, &hi).unwrap();
        let t = |w: &Vector<f64>| Vector::from_column_slice(&[(w[0] * 3.0).sin() + w[1]]);
        let values = eval_all(&samples, t);
        let rm = build_rm(RmForm::GaussianProcess, &samples, &values, &c, 0.4).unwrap();
        for (s, v) in samples.iter().zip(values.iter()) {
            assert!((rm.predict(s)[0] - v[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn taylor_jacobian_matches_exponential() {
        let c = Vector::from_column_slice(&[0.0]);
        let (lo, hi) = wide_bounds(1);
        let stencil = taylor_stencil(&c, 0.1, &lo, &hi);
        assert_eq!(stencil.len(), 3);
        let t = |w: &Vector<f64>| Vector::from_column_slice(&[w[0].exp()]);
        let values = eval_all(&stencil, t);
        let rm = build_rm(RmForm::TaylorFirstOrder, &stencil, &values, &c, 0.1).unwrap();
        assert!((rm.jacobian(&c)[(0, 0)] - 1.0).abs() < 1e-6);
        assert!((rm.predict(&c)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobians_match_finite_differences_for_all_forms() {
        let c = Vector::from_column_slice(&[0.3, -0.2]);
        let (lo, hi) = wide_bounds(2);
        let t = |w: &Vector<f64>| {
            Vector::from_column_slice(&[
                (w[0] - 0.1) * (w[1] + 0.4) + w[0],
                w[0] * w[0] - 0.5 * w[1],
            ])
        };
        for form in RmForm::ALL {
            let samples = if form == RmForm::TaylorFirstOrder {
                taylor_stencil(&c, 0.3, &lo, &hi)
            } else {
                sample_design(&c, 0.3, form, 33, &lo, &hi).unwrap()
            };
            let values = eval_all(&samples, t);
            let rm = build_rm(form, &samples, &values, &c, 0.3).unwrap();
            let probe = Vector::from_column_slice(&[0.35, -0.12]);
            let analytic = rm.jacobian(&probe);
            let fd = fd_jacobian(&|w: &Vector<f64>| rm.predict(w), &probe, 2);
            for i in 0..2 {
                for j in 0..2 {
                    let denom: f64 = 1.0 + analytic[(i, j)].abs().max(fd[(i, j)].abs());
                    assert!(
                        ((analytic[(i, j)] - fd[(i, j)]) / denom).abs() < 1e-6,
                        "{form}: J[{i}{j}] analytic {} vs fd {}",
                        analytic[(i, j)],
                        fd[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn linear_rm_residual_scales_quadratically_in_sigma() {
        // For a quadratic black box the exact-interpolation linear model has
        // max ball residual ~ C·σ²; the log-log slope over halving σ must sit
        // in [1.8, 2.2].
        let c = Vector::from_column_slice(&[0.4, 0.6]);
        let (lo, hi) = wide_bounds(2);
        let t = |w: &Vector<f64>| {
            Vector::from_column_slice(&[1.5 * w[0] * w[0] + 0.8 * w[0] * w[1] - w[1] * w[1]])
        };
        let mut pts = Vec::new();
        for sigma in [0.4, 0.2, 0.1, 0.05] {
            let samples = sample_design(&c, sigma, RmForm::Linear, 77, &lo, &hi).unwrap();
            let values = eval_all(&samples, t);
            let rm = build_rm(RmForm::Linear, &samples, &values, &c, sigma).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(101);
            let mut max_res: f64 = 0.0;
            for _ in 0..400 {
                let w = Vector::from_column_slice(&[
                    c[0] + rng.gen_range(-sigma..sigma),
                    c[1] + rng.gen_range(-sigma..sigma),
                ]);
                max_res = max_res.max((rm.predict(&w)[0] - t(&w)[0]).abs());
            }
            pts.push((sigma.ln(), max_res.ln()));
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(
            (1.8..=2.2).contains(&slope),
            "σ² law violated: slope {slope}"
        );
    }

    #[test]
    fn fully_linear_check_passes_and_fails_as_expected() {
        use crate::problem::{BlackBoxCache, EvaluationLedger};
        let problem = crate::GreyBoxProblem::<f64>::builder("affine", 1, 1, 0)
            .objective(|x| x[1])
            .objective_grad(|x| {
                let mut g = Vector::zeros(x.len());
                g[1] = 1.0;
                g
            })
            .black_box(|w| Vector::from_column_slice(&[3.0 * w[0] + 1.0]))
            .bounds(
                Vector::from_column_slice(&[-2.0, -100.0]),
                Vector::from_column_slice(&[2.0, 100.0]),
            )
            .build();
        let ledger = EvaluationLedger::new();
        let cache = BlackBoxCache::new();
        let c = Vector::from_column_slice(&[0.0]);
        let (lo, hi) = problem.w_bounds();
        let sigma = 0.5;
        let samples = sample_design(&c, sigma, RmForm::Linear, 4, &lo, &hi).unwrap();
        let values: Vec<_> = samples
            .iter()
            .map(|s| problem.evaluate_black_box(s, &ledger, BbCategory::Sampling).unwrap())
            .collect();
        let rm = build_rm(RmForm::Linear, &samples, &values, &c, sigma).unwrap();
        let params = FullyLinearParams::default();
        let before = ledger.black_box_calls();
        let rep = verify_fully_linear(&rm, &problem, sigma, &params, &ledger, &cache, 6).unwrap();
        assert!(rep.pass, "exact surrogate must certify");
        assert_eq!(ledger.black_box_calls(), before + params.n_validation as u64);

        // constant offset bigger than κ_h σ² must fail with that residual
        let mut shifted = values.clone();
        for v in &mut shifted {
            v[0] += 2.0 * params.kappa_h * sigma * sigma;
        }
        let rm_bad = build_rm(RmForm::Linear, &samples, &shifted, &c, sigma).unwrap();
        let cache2 = BlackBoxCache::new();
        let rep = verify_fully_linear(&rm_bad, &problem, sigma, &params, &ledger, &cache2, 6).unwrap();
        assert!(!rep.pass);
        assert!((rep.max_residual - 2.0 * params.kappa_h * sigma * sigma).abs() < 1e-9);

        // halving σ tightens the bound fourfold
        let rep_half =
            verify_fully_linear(&rm, &problem, sigma / 2.0, &params, &ledger, &cache, 7).unwrap();
        assert!((rep_half.bound - rep.bound / 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_design_is_reported() {
        // zero-width box collapses every draw onto the center
        let c = Vector::from_column_slice(&[1.0, 1.0]);
        let lo = c.clone();
        let hi = c.clone();
        let err = sample_design(&c, 0.5, RmForm::Linear, 3, &lo, &hi).unwrap_err();
        assert!(matches!(err, RmError::DegenerateGeometry));
    }
}
