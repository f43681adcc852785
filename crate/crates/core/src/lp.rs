//! Small dense linear programs via a two-phase primal simplex.
//!
//! The criticality measure reduces to an LP once the step constraint uses the
//! ∞-norm, so the solver here only has to deal with a few dozen variables and
//! rows. The implementation works on the full dense tableau with Bland's rule
//! throughout, which is slow in theory and entirely adequate at these sizes,
//! and cannot cycle.

use thiserror::Error;

use crate::scalar::{cst, Real};
use crate::{Matrix, Vector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("dimension mismatch in LP data: {0}")]
    Dims(&'static str),
    #[error("LP bounds must be finite")]
    UnboundedBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// min cᵀx  s.t.  A_eq x = b_eq, A_ub x ≤ b_ub, lower ≤ x ≤ upper.
#[derive(Debug, Clone)]
pub struct LpProblem<T: Real> {
    pub c: Vector<T>,
    pub a_eq: Matrix<T>,
    pub b_eq: Vector<T>,
    pub a_ub: Matrix<T>,
    pub b_ub: Vector<T>,
    pub lower: Vector<T>,
    pub upper: Vector<T>,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T: Real> {
    pub status: LpStatus,
    pub x: Vector<T>,
    pub value: T,
}

struct Tableau<T: Real> {
    a: Matrix<T>,
    b: Vector<T>,
    basis: Vec<usize>,
    tol: T,
}

impl<T: Real> Tableau<T> {
    /// One simplex run for the given column costs, Bland's rule.
    /// Columns with index >= `limit` never enter the basis.
    fn optimize(&mut self, cost: &[T], limit: usize) -> LpStatus {
        let m = self.a.nrows();
        loop {
            // Multipliers yᵀ = c_Bᵀ B⁻¹ are implicit: the tableau is kept in
            // B⁻¹-applied form, so reduced costs come straight off columns.
            let mut entering = None;
            for j in 0..limit {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut red = cost[j];
                for i in 0..m {
                    red -= cost[self.basis[i]] * self.a[(i, j)];
                }
                if red < -self.tol {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return LpStatus::Optimal;
            };
            let mut leaving: Option<(usize, T)> = None;
            for i in 0..m {
                let aij = self.a[(i, j)];
                if aij > self.tol {
                    let ratio = self.b[i] / aij;
                    let better = match leaving {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - self.tol
                                || (ratio < lr + self.tol && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leaving else {
                return LpStatus::Unbounded;
            };
            self.pivot(r, j);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let m = self.a.nrows();
        let n = self.a.ncols();
        let piv = self.a[(row, col)];
        for j in 0..n {
            self.a[(row, j)] /= piv;
        }
        self.b[row] /= piv;
        for i in 0..m {
            if i == row {
                continue;
            }
            let factor = self.a[(i, col)];
            if factor == T::zero() {
                continue;
            }
            for j in 0..n {
                let upd = self.a[(row, j)] * factor;
                self.a[(i, j)] -= upd;
            }
            let upd = self.b[row] * factor;
            self.b[i] -= upd;
        }
        self.basis[row] = col;
    }
}

/// Solve the LP. All variable bounds must be finite.
pub fn solve_lp<T: Real>(p: &LpProblem<T>) -> Result<LpSolution<T>, LpError> {
    let n = p.c.len();
    if p.lower.len() != n || p.upper.len() != n {
        return Err(LpError::Dims("bounds"));
    }
    if p.a_eq.nrows() != p.b_eq.len() || (p.a_eq.nrows() > 0 && p.a_eq.ncols() != n) {
        return Err(LpError::Dims("equality block"));
    }
    if p.a_ub.nrows() != p.b_ub.len() || (p.a_ub.nrows() > 0 && p.a_ub.ncols() != n) {
        return Err(LpError::Dims("inequality block"));
    }
    if p.lower.iter().any(|v| !v.is_finite()) || p.upper.iter().any(|v| !v.is_finite()) {
        return Err(LpError::UnboundedBox);
    }

    let me = p.a_eq.nrows();
    let mu = p.a_ub.nrows();
    // Shift x = lower + x̂ and add one range row per variable:
    //   x̂ + t = upper − lower.
    let m = me + mu + n;
    let n_struct = n + mu + n; // x̂, inequality slacks, range slacks
    let n_total = n_struct + m; // + one artificial per row

    let mut a = Matrix::<T>::zeros(m, n_total);
    let mut b = Vector::<T>::zeros(m);

    for i in 0..me {
        for j in 0..n {
            a[(i, j)] = p.a_eq[(i, j)];
        }
        b[i] = p.b_eq[i] - p.a_eq.row(i).transpose().dot(&p.lower);
    }
    for i in 0..mu {
        for j in 0..n {
            a[(me + i, j)] = p.a_ub[(i, j)];
        }
        a[(me + i, n + i)] = T::one();
        b[me + i] = p.b_ub[i] - p.a_ub.row(i).transpose().dot(&p.lower);
    }
    for i in 0..n {
        let r = me + mu + i;
        a[(r, i)] = T::one();
        a[(r, n + mu + i)] = T::one();
        let range = p.upper[i] - p.lower[i];
        if range < T::zero() {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: p.lower.clone(),
                value: T::zero(),
            });
        }
        b[r] = range;
    }

    // b >= 0 for the artificial start.
    for i in 0..m {
        if b[i] < T::zero() {
            for j in 0..n_struct {
                a[(i, j)] = -a[(i, j)];
            }
            b[i] = -b[i];
        }
        a[(i, n_struct + i)] = T::one();
    }

    let scale = {
        let mut s = T::one();
        for v in a.iter() {
            s = s.max(v.abs());
        }
        s
    };
    let tol = T::eps().powf(cst(2.0 / 3.0)) * scale;

    let mut tab = Tableau {
        a,
        b,
        basis: (n_struct..n_total).collect(),
        tol,
    };

    // Phase 1: minimize the artificial sum.
    let mut cost1 = vec![T::zero(); n_total];
    for c in cost1.iter_mut().skip(n_struct) {
        *c = T::one();
    }
    match tab.optimize(&cost1, n_total) {
        LpStatus::Unbounded => unreachable!("phase-1 objective is bounded below by zero"),
        _ => {}
    }
    let phase1: T = (0..m)
        .filter(|i| tab.basis[*i] >= n_struct)
        .map(|i| tab.b[i])
        .fold(T::zero(), |acc, v| acc + v);
    if phase1 > tol * cst(10.0) {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: p.lower.clone(),
            value: T::zero(),
        });
    }
    // Pivot residual artificials (at value zero) out of the basis where
    // possible; rows without a structural pivot are redundant and harmless.
    for i in 0..m {
        if tab.basis[i] >= n_struct {
            if let Some(j) = (0..n_struct).find(|&j| tab.a[(i, j)].abs() > tol) {
                tab.pivot(i, j);
            }
        }
    }

    // Phase 2 over structural columns only.
    let mut cost2 = vec![T::zero(); n_total];
    for j in 0..n {
        cost2[j] = p.c[j];
    }
    let status = tab.optimize(&cost2, n_struct);
    if status == LpStatus::Unbounded {
        return Ok(LpSolution {
            status,
            x: p.lower.clone(),
            value: T::zero(),
        });
    }

    let mut x = p.lower.clone();
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] += tab.b[i];
        }
    }
    let value = p.c.dot(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_lp(
        c: &[f64],
        a_eq: (usize, usize, &[f64]),
        b_eq: &[f64],
        a_ub: (usize, usize, &[f64]),
        b_ub: &[f64],
        lower: &[f64],
        upper: &[f64],
    ) -> LpProblem<f64> {
        LpProblem {
            c: Vector::from_column_slice(c),
            a_eq: Matrix::from_row_slice(a_eq.0, a_eq.1, a_eq.2),
            b_eq: Vector::from_column_slice(b_eq),
            a_ub: Matrix::from_row_slice(a_ub.0, a_ub.1, a_ub.2),
            b_ub: Vector::from_column_slice(b_ub),
            lower: Vector::from_column_slice(lower),
            upper: Vector::from_column_slice(upper),
        }
    }

    #[test]
    fn unconstrained_box_descent() {
        // min x over [-1, 1]
        let p = box_lp(&[1.0], (0, 1, &[]), &[], (0, 1, &[]), &[], &[-1.0], &[1.0]);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] + 1.0).abs() < 1e-9);
        assert!((s.value + 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_coupling() {
        // min v_y s.t. v_y − 2 v_w = 0, |v| ≤ 1 → v_w = −1/2, v_y = −1
        let p = box_lp(
            &[0.0, 1.0],
            (1, 2, &[-2.0, 1.0]),
            &[0.0],
            (0, 2, &[]),
            &[],
            &[-1.0, -1.0],
            &[1.0, 1.0],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value + 1.0).abs() < 1e-9);
        assert!((s.x[0] + 0.5).abs() < 1e-9);
    }

    #[test]
    fn inequality_rows() {
        // min −x − y s.t. x + y ≤ 1.5, box [0,1]²  → value −1.5
        let p = box_lp(
            &[-1.0, -1.0],
            (0, 2, &[]),
            &[],
            (1, 2, &[1.0, 1.0]),
            &[1.5],
            &[0.0, 0.0],
            &[1.0, 1.0],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value + 1.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_equalities() {
        // x = -2 impossible in [0, 1]
        let p = box_lp(
            &[1.0],
            (1, 1, &[1.0]),
            &[-2.0],
            (0, 1, &[]),
            &[],
            &[0.0],
            &[1.0],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn fixed_variable_via_equal_bounds() {
        let p = box_lp(
            &[1.0, 1.0],
            (0, 2, &[]),
            &[],
            (0, 2, &[]),
            &[],
            &[0.5, -1.0],
            &[0.5, 1.0],
        );
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 0.5).abs() < 1e-9);
        assert!((s.x[1] + 1.0).abs() < 1e-9);
    }

    /// Brute-force oracle: enumerate candidate vertices from all combinations
    /// of active constraints (rows and bounds) and keep the feasible best.
    fn enumerate_min(p: &LpProblem<f64>) -> Option<f64> {
        use nalgebra::DMatrix;
        let n = p.c.len();
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for i in 0..p.a_eq.nrows() {
            rows.push((p.a_eq.row(i).iter().cloned().collect(), p.b_eq[i]));
        }
        for i in 0..p.a_ub.nrows() {
            rows.push((p.a_ub.row(i).iter().cloned().collect(), p.b_ub[i]));
        }
        for j in 0..n {
            let mut lo = vec![0.0; n];
            lo[j] = 1.0;
            rows.push((lo.clone(), p.lower[j]));
            rows.push((lo, p.upper[j]));
        }
        let feasible = |x: &Vector<f64>| -> bool {
            for i in 0..p.a_eq.nrows() {
                if (p.a_eq.row(i).transpose().dot(x) - p.b_eq[i]).abs() > 1e-7 {
                    return false;
                }
            }
            for i in 0..p.a_ub.nrows() {
                if p.a_ub.row(i).transpose().dot(x) - p.b_ub[i] > 1e-7 {
                    return false;
                }
            }
            (0..n).all(|j| x[j] >= p.lower[j] - 1e-7 && x[j] <= p.upper[j] + 1e-7)
        };
        let k = rows.len();
        let mut best: Option<f64> = None;
        let mut idx = vec![0usize; n];
        fn combos(k: usize, n: usize, start: usize, idx: &mut Vec<usize>, depth: usize, out: &mut Vec<Vec<usize>>) {
            if depth == n {
                out.push(idx.clone());
                return;
            }
            for i in start..k {
                idx[depth] = i;
                combos(k, n, i + 1, idx, depth + 1, out);
            }
        }
        let mut all = Vec::new();
        combos(k, n, 0, &mut idx, 0, &mut all);
        for combo in all {
            let mut a = DMatrix::<f64>::zeros(n, n);
            let mut b = Vector::<f64>::zeros(n);
            for (r, &ci) in combo.iter().enumerate() {
                for j in 0..n {
                    a[(r, j)] = rows[ci].0[j];
                }
                b[r] = rows[ci].1;
            }
            if let Some(sol) = a.lu().solve(&b) {
                if sol.iter().all(|v| v.is_finite()) && feasible(&sol) {
                    let v = p.c.dot(&sol);
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
        }
        best
    }

    #[test]
    fn matches_vertex_enumeration_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        for _ in 0..200 {
            let n = rng.gen_range(1..=3);
            let mu = rng.gen_range(0..=2);
            let me = rng.gen_range(0..=1.min(n - 1));
            let c = Vector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            let a_eq = Matrix::from_fn(me, n, |_, _| rng.gen_range(-2.0..2.0));
            let b_eq = Vector::from_fn(me, |_, _| rng.gen_range(-0.5..0.5));
            let a_ub = Matrix::from_fn(mu, n, |_, _| rng.gen_range(-2.0..2.0));
            let b_ub = Vector::from_fn(mu, |_, _| rng.gen_range(0.0..1.0));
            let lower = Vector::from_element(n, -1.0);
            let upper = Vector::from_element(n, 1.0);
            let p = LpProblem { c, a_eq, b_eq, a_ub, b_ub, lower, upper };
            let s = solve_lp(&p).unwrap();
            let oracle = enumerate_min(&p);
            match (s.status, oracle) {
                (LpStatus::Optimal, Some(v)) => {
                    assert!(
                        (s.value - v).abs() <= 1e-6 * (1.0 + v.abs()),
                        "simplex {} vs oracle {}",
                        s.value,
                        v
                    );
                    checked += 1;
                }
                (LpStatus::Infeasible, None) => checked += 1,
                (LpStatus::Optimal, None) => panic!("simplex found a point, oracle found none"),
                (LpStatus::Infeasible, Some(_)) => panic!("simplex infeasible, oracle feasible"),
                _ => {}
            }
        }
        assert!(checked > 150, "too few decisive instances: {checked}");
    }
}
