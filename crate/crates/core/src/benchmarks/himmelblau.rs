//! Himmelblau process-design problem as a grey-box: two black-box response
//! groups, three equality relations defining the bounded auxiliaries
//! z6, z7, z8.
//!
//! Layout: x = (w2, w3, w5, y1, y2, z1, z4, z6, z7, z8).

use crate::{Mat64, Problem64, Vec64};

const W2: usize = 0;
const W3: usize = 1;
const W5: usize = 2;
const Y1: usize = 3;
const Y2: usize = 4;
const Z1: usize = 5;
const Z4: usize = 6;
const Z6: usize = 7;
const Z7: usize = 8;
const Z8: usize = 9;
const N: usize = 10;

pub fn problem() -> Problem64 {
    Problem64::builder("himmelblau", 3, 2, 5)
        .objective(|x: &Vec64| {
            5.3578547 * x[Y1] + 0.8356891 * x[Z1] * x[W5] + 37.2932239 * x[Z1] - 40792.141
        })
        .objective_grad(|x: &Vec64| {
            let mut g = Vec64::zeros(N);
            g[Y1] = 5.3578547;
            g[Z1] = 0.8356891 * x[W5] + 37.2932239;
            g[W5] = 0.8356891 * x[Z1];
            g
        })
        .eq_constraints(3, |x: &Vec64| {
            let (w2, w3, w5) = (x[W2], x[W3], x[W5]);
            let (z1, z4) = (x[Z1], x[Z4]);
            Vec64::from_column_slice(&[
                85.334407 + 0.0056858 * x[Y2] + 0.00026 * z1 * z4 - 0.0022053 * w3 * w5 - x[Z6],
                80.51249 + 0.0071317 * x[Y2] + 0.0029955 * z1 * w2 - 0.0021813 * w3 * w3 - x[Z7],
                9.300961 + 0.0047026 * w3 * w5 + 0.0012547 * z1 * w3 - 0.0019085 * w3 * z4
                    - x[Z8],
            ])
        })
        .eq_jacobian(|x: &Vec64| {
            let (w2, w3, w5) = (x[W2], x[W3], x[W5]);
            let (z1, z4) = (x[Z1], x[Z4]);
            let mut j = Mat64::zeros(3, N);
            j[(0, Y2)] = 0.0056858;
            j[(0, Z1)] = 0.00026 * z4;
            j[(0, Z4)] = 0.00026 * z1;
            j[(0, W3)] = -0.0022053 * w5;
            j[(0, W5)] = -0.0022053 * w3;
            j[(0, Z6)] = -1.0;

            j[(1, Y2)] = 0.0071317;
            j[(1, Z1)] = 0.0029955 * w2;
            j[(1, W2)] = 0.0029955 * z1;
            j[(1, W3)] = -2.0 * 0.0021813 * w3;
            j[(1, Z7)] = -1.0;

            j[(2, W3)] = 0.0047026 * w5 + 0.0012547 * z1 - 0.0019085 * z4;
            j[(2, W5)] = 0.0047026 * w3;
            j[(2, Z1)] = 0.0012547 * w3;
            j[(2, Z4)] = -0.0019085 * w3;
            j[(2, Z8)] = -1.0;
            j
        })
        .black_box(|w: &Vec64| {
            // w = (w2, w3, w5)
            Vec64::from_column_slice(&[w[1] * w[1], w[0] * w[2]])
        })
        .bounds(
            Vec64::from_column_slice(&[
                33.0, 27.0, 27.0, 700.0, 850.0, 78.0, 27.0, 0.0, 90.0, 20.0,
            ]),
            Vec64::from_column_slice(&[
                45.0, 45.0, 45.0, 2100.0, 2100.0, 102.0, 45.0, 92.0, 110.0, 25.0,
            ]),
        )
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{BbCategory, EvaluationLedger};

    #[test]
    fn black_box_second_output() {
        // w2 = 33, w5 = 27 → y2 = 891
        let p = problem();
        let ledger = EvaluationLedger::new();
        let w = Vec64::from_column_slice(&[33.0, 30.0, 27.0]);
        let t = p.evaluate_black_box(&w, &ledger, BbCategory::Theta).unwrap();
        assert!((t[1] - 891.0).abs() < 1e-12);
        assert!((t[0] - 900.0).abs() < 1e-12);
    }

    #[test]
    fn equalities_vanish_at_consistent_point() {
        // choose free variables, then solve z6, z7, z8 from the relations
        let p = problem();
        let mut x = Vec64::zeros(N);
        x[W2] = 40.0;
        x[W3] = 30.0;
        x[W5] = 35.0;
        x[Y1] = 900.0;
        x[Y2] = 1400.0;
        x[Z1] = 90.0;
        x[Z4] = 33.0;
        x[Z6] = 85.334407 + 0.0056858 * x[Y2] + 0.00026 * x[Z1] * x[Z4]
            - 0.0022053 * x[W3] * x[W5];
        x[Z7] = 80.51249 + 0.0071317 * x[Y2] + 0.0029955 * x[Z1] * x[W2]
            - 0.0021813 * x[W3] * x[W3];
        x[Z8] = 9.300961 + 0.0047026 * x[W3] * x[W5] + 0.0012547 * x[Z1] * x[W3]
            - 0.0019085 * x[W3] * x[Z4];
        let h = p.eq_value(&x);
        for i in 0..3 {
            assert!(h[i].abs() <= 1e-10, "h{} = {}", i + 1, h[i]);
        }
    }
}
