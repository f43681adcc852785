//! Loeppky test function as a grey-box problem: linear-plus-bilinear
//! objective over the unit box, with the strongest interaction terms hidden
//! in the black box.
//!
//! Layout: x = (w1, w2, w3, y1, z4, z5, z6, z7).

use crate::{Problem64, Vec64};

const W1: usize = 0;
const W2: usize = 1;
const W3: usize = 2;
const Y1: usize = 3;
const Z4: usize = 4;
const Z5: usize = 5;
const Z6: usize = 6;
const Z7: usize = 7;

pub fn problem() -> Problem64 {
    Problem64::builder("loeppky", 3, 1, 4)
        .objective(|x: &Vec64| {
            6.0 * x[W1] + 4.0 * x[W2] + 5.5 * x[W3] + x[Y1] + 1.4 * x[W2] * x[W3]
                + x[Z4] + 0.5 * x[Z5] + 0.2 * x[Z6] + 0.1 * x[Z7]
        })
        .objective_grad(|x: &Vec64| {
            let mut g = Vec64::zeros(8);
            g[W1] = 6.0;
            g[W2] = 4.0 + 1.4 * x[W3];
            g[W3] = 5.5 + 1.4 * x[W2];
            g[Y1] = 1.0;
            g[Z4] = 1.0;
            g[Z5] = 0.5;
            g[Z6] = 0.2;
            g[Z7] = 0.1;
            g
        })
        .black_box(|w: &Vec64| {
            Vec64::from_column_slice(&[3.0 * w[0] * w[1] + 2.2 * w[0] * w[2]])
        })
        .bounds(
            Vec64::from_column_slice(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            Vec64::from_column_slice(&[1.0, 1.0, 1.0, 5.2, 1.0, 1.0, 1.0, 1.0]),
        )
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{BbCategory, EvaluationLedger};

    #[test]
    fn objective_vanishes_at_origin() {
        let p = problem();
        let x = Vec64::zeros(8);
        assert_eq!(p.objective_value(&x), 0.0);
    }

    #[test]
    fn black_box_at_ones() {
        let p = problem();
        let ledger = EvaluationLedger::new();
        let w = Vec64::from_column_slice(&[1.0, 1.0, 1.0]);
        let t = p.evaluate_black_box(&w, &ledger, BbCategory::Theta).unwrap();
        assert!((t[0] - 5.2).abs() < 1e-12);
    }

    #[test]
    fn ledger_counts_consecutive_calls() {
        let p = problem();
        let ledger = EvaluationLedger::new();
        let w = Vec64::from_column_slice(&[0.5, 0.5, 0.5]);
        p.evaluate_black_box(&w, &ledger, BbCategory::Theta).unwrap();
        p.evaluate_black_box(&w, &ledger, BbCategory::Theta).unwrap();
        assert_eq!(ledger.black_box_calls(), 2);
    }

    #[test]
    fn out_of_box_black_box_input_rejected() {
        let p = problem();
        let ledger = EvaluationLedger::new();
        let w = Vec64::from_column_slice(&[2.0, 0.5, 0.5]);
        assert!(p.evaluate_black_box(&w, &ledger, BbCategory::Theta).is_err());
    }
}
