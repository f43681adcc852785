//! Colville No.2 design problem as a grey-box: four black-box response
//! groups over (w1, w2, w3, w4) feed six nonlinear inequality constraints in
//! one extra glass variable z5.
//!
//! Layout: x = (w1, w2, w3, w4, y1, y2, y3, y4, z5).

use crate::{Mat64, Problem64, Vec64};

const W1: usize = 0;
const W2: usize = 1;
const W3: usize = 2;
const W4: usize = 3;
const Y1: usize = 4;
const Y2: usize = 5;
const Y3: usize = 6;
const Y4: usize = 7;
const Z5: usize = 8;
const N: usize = 9;

pub fn problem() -> Problem64 {
    Problem64::builder("colville", 4, 4, 1)
        .objective(|x: &Vec64| 5.3578 * x[W3] * x[W3] + x[Y1])
        .objective_grad(|x: &Vec64| {
            let mut g = Vec64::zeros(N);
            g[W3] = 2.0 * 5.3578 * x[W3];
            g[Y1] = 1.0;
            g
        })
        .ineq_constraints(6, |x: &Vec64| {
            let (w1, w2, w3, w4, z5) = (x[W1], x[W2], x[W3], x[W4], x[Z5]);
            Vec64::from_column_slice(&[
                x[Y2] - 0.0000734 * w1 * z5 - 1.0,
                0.000853007 * w2 * w4 + 0.00009395 * w1 * z5 - 0.00033085 * w3 * w4 - 1.0,
                x[Y4] - 0.30586 * w3 * w3 / (w2 * w4) - 1.0,
                0.00024186 * w2 * w4 + 0.00010159 * w1 * w2 + 0.00007379 * w3 * w3 - 1.0,
                x[Y3] - 0.40584 * z5 / w4 - 1.0,
                0.00029955 * w3 * w4 + 0.00007992 * w1 * w3 + 0.00012157 * w3 * z5 - 1.0,
            ])
        })
        .ineq_jacobian(|x: &Vec64| {
            let (w1, w2, w3, w4, z5) = (x[W1], x[W2], x[W3], x[W4], x[Z5]);
            let mut j = Mat64::zeros(6, N);
            j[(0, Y2)] = 1.0;
            j[(0, W1)] = -0.0000734 * z5;
            j[(0, Z5)] = -0.0000734 * w1;

            j[(1, W2)] = 0.000853007 * w4;
            j[(1, W4)] = 0.000853007 * w2 - 0.00033085 * w3;
            j[(1, W1)] = 0.00009395 * z5;
            j[(1, Z5)] = 0.00009395 * w1;
            j[(1, W3)] = -0.00033085 * w4;

            j[(2, Y4)] = 1.0;
            j[(2, W3)] = -2.0 * 0.30586 * w3 / (w2 * w4);
            j[(2, W2)] = 0.30586 * w3 * w3 / (w2 * w2 * w4);
            j[(2, W4)] = 0.30586 * w3 * w3 / (w2 * w4 * w4);

            j[(3, W2)] = 0.00024186 * w4 + 0.00010159 * w1;
            j[(3, W4)] = 0.00024186 * w2;
            j[(3, W1)] = 0.00010159 * w2;
            j[(3, W3)] = 2.0 * 0.00007379 * w3;

            j[(4, Y3)] = 1.0;
            j[(4, Z5)] = -0.40584 / w4;
            j[(4, W4)] = 0.40584 * z5 / (w4 * w4);

            j[(5, W3)] = 0.00029955 * w4 + 0.00007992 * w1 + 0.00012157 * z5;
            j[(5, W4)] = 0.00029955 * w3;
            j[(5, W1)] = 0.00007992 * w3;
            j[(5, Z5)] = 0.00012157 * w3;
            j
        })
        .black_box(|w: &Vec64| {
            let (w1, w2, w3, w4) = (w[0], w[1], w[2], w[3]);
            Vec64::from_column_slice(&[
                0.8357 * w1 * w4 + 37.2392 * w1,
                0.00002584 * w3 * w4 + 0.00006663 * w2 * w4,
                2275.1327 / (w3 * w4) - 0.2668 * w1 / w4,
                1330.3294 / (w2 * w4) - 0.42 * w1 / w4,
            ])
        })
        .bounds(
            Vec64::from_column_slice(&[78.0, 33.0, 27.0, 27.0, 4600.0, 0.04, 0.0, -1.2, 27.0]),
            Vec64::from_column_slice(&[102.0, 45.0, 45.0, 45.0, 7700.0, 0.26, 3.0, 1.0, 45.0]),
        )
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_substitution() {
        // w3 = 30, y1 = 100 → 5.3578·900 + 100 = 4922.02
        let p = problem();
        let mut x = Vec64::zeros(N);
        x[W3] = 30.0;
        x[Y1] = 100.0;
        assert!((p.objective_value(&x) - 4922.02).abs() < 1e-9);
    }

    #[test]
    fn reference_point_is_feasible() {
        // the reconstructed problem's optimum from an independent solve
        let p = problem();
        let mut x = Vec64::zeros(N);
        x[W1] = 78.0;
        x[W2] = 33.0;
        x[W3] = 29.99574003;
        x[W4] = 36.77532709;
        x[Z5] = 45.0;
        // y at the true black-box response
        let w = Vec64::from_column_slice(&[x[W1], x[W2], x[W3], x[W4]]);
        let ledger = crate::problem::EvaluationLedger::new();
        let t = p
            .evaluate_black_box(&w, &ledger, crate::problem::BbCategory::Theta)
            .unwrap();
        for o in 0..4 {
            x[Y1 + o] = t[o];
        }
        let g = p.ineq_value(&x);
        for i in 0..6 {
            assert!(g[i] <= 1e-4, "g{} = {}", i + 1, g[i]);
        }
        let f = p.objective_value(&x);
        assert!((f - 10122.49).abs() < 0.1, "f = {f}");
    }
}
