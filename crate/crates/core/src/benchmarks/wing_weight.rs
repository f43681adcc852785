//! Light-aircraft wing weight model as a grey-box: the multiplicative weight
//! correlation stays glass-box while the paint-weight product is hidden in
//! the black box. The sweep angle z4 is in degrees.
//!
//! Layout: x = (w1, w10, y1, z2, z3, z4, z5, z6, z7, z8, z9).

use crate::{Problem64, Vec64};

const W1: usize = 0;
const Y1: usize = 2;
const Z2: usize = 3;
const Z3: usize = 4;
const Z4: usize = 5;
const Z5: usize = 6;
const Z6: usize = 7;
const Z7: usize = 8;
const Z8: usize = 9;
const Z9: usize = 10;
const N: usize = 11;

const DEG: f64 = std::f64::consts::PI / 180.0;

fn weight_term(x: &Vec64) -> f64 {
    let cos = (x[Z4] * DEG).cos();
    0.036
        * x[W1].powf(0.758)
        * x[Z2].powf(0.0035)
        * (x[Z3] / (cos * cos)).powf(0.6)
        * x[Z5].powf(0.006)
        * x[Z6].powf(0.04)
        * (100.0 * x[Z7] / cos).powf(-0.3)
        * (x[Z8] * x[Z9]).powf(0.49)
}

pub fn problem() -> Problem64 {
    Problem64::builder("wing_weight", 2, 1, 8)
        .objective(|x: &Vec64| weight_term(x) + x[Y1])
        .objective_grad(|x: &Vec64| {
            let wt = weight_term(x);
            let theta = x[Z4] * DEG;
            let mut g = Vec64::zeros(N);
            g[W1] = 0.758 * wt / x[W1];
            g[Y1] = 1.0;
            g[Z2] = 0.0035 * wt / x[Z2];
            g[Z3] = 0.6 * wt / x[Z3];
            // cos enters as cos^{-1.2}·cos^{0.3} = cos^{-0.9}
            g[Z4] = 0.9 * wt * theta.tan() * DEG;
            g[Z5] = 0.006 * wt / x[Z5];
            g[Z6] = 0.04 * wt / x[Z6];
            g[Z7] = -0.3 * wt / x[Z7];
            g[Z8] = 0.49 * wt / x[Z8];
            g[Z9] = 0.49 * wt / x[Z9];
            g
        })
        .black_box(|w: &Vec64| Vec64::from_column_slice(&[w[0] * w[1]]))
        .bounds(
            Vec64::from_column_slice(&[
                150.0, 0.025, 3.75, 220.0, 6.0, -10.0, 16.0, 0.5, 0.08, 2.5, 1700.0,
            ]),
            Vec64::from_column_slice(&[
                200.0, 0.08, 16.0, 300.0, 10.0, 10.0, 45.0, 1.0, 0.18, 6.0, 2500.0,
            ]),
        )
        .build()
}
