//! Welded-beam structural design as a grey-box: the fabrication cost is the
//! black box, the stress/deflection/buckling limits stay glass-box.
//!
//! Layout: x = (w1, w2, w3, w4, y1).

use crate::{Mat64, Problem64, Vec64};

const W1: usize = 0;
const W2: usize = 1;
const W3: usize = 2;
const W4: usize = 3;
const Y1: usize = 4;
const N: usize = 5;

const P_LOAD: f64 = 6000.0;
const TAU_MAX: f64 = 13600.0;
const SIGMA_MAX: f64 = 30000.0;
const PC_MIN: f64 = 6000.0;
const PC_COEFF: f64 = 102372.449;

/// Shear stress τ and its gradient over (w1, w2, w3, w4).
fn shear(x: &Vec64) -> (f64, [f64; 4]) {
    let (w1, w2, w3) = (x[W1], x[W2], x[W3]);
    let sqrt2 = std::f64::consts::SQRT_2;

    let tau1 = P_LOAD / (sqrt2 * w1 * w2);
    let dtau1 = [-tau1 / w1, -tau1 / w2, 0.0, 0.0];

    let m = P_LOAD * (14.0 + w2 / 2.0);
    let dm = [0.0, P_LOAD / 2.0, 0.0, 0.0];

    let half = (w1 + w3) / 2.0;
    let r2 = w2 * w2 / 4.0 + half * half;
    let r = r2.sqrt();
    let dr = [half / (2.0 * r), w2 / (4.0 * r), half / (2.0 * r), 0.0];

    let j = 2.0 * sqrt2 * w1 * w2 * (w2 * w2 / 12.0 + half * half);
    let dj = [
        j / w1 + sqrt2 * w1 * w2 * (w1 + w3),
        j / w2 + sqrt2 * w1 * w2 * w2 / 3.0,
        sqrt2 * w1 * w2 * (w1 + w3),
        0.0,
    ];

    let tau2 = m * r / j;
    let dtau2: Vec<f64> = (0..4)
        .map(|i| tau2 * (dm[i] / m + dr[i] / r - dj[i] / j))
        .collect();

    let q = w2 / (2.0 * r); // τ'·τ'' cross-term weight, τ² = τ1² + 2τ1τ2q + τ2²
    let dq: Vec<f64> = (0..4)
        .map(|i| {
            let dw2 = if i == 1 { 1.0 } else { 0.0 };
            (dw2 * 2.0 * r - w2 * 2.0 * dr[i]) / (4.0 * r2)
        })
        .collect();

    let tau = (tau1 * tau1 + 2.0 * tau1 * tau2 * q + tau2 * tau2).sqrt();
    let mut grad = [0.0; 4];
    for i in 0..4 {
        let dsq = 2.0 * tau1 * dtau1[i]
            + 2.0 * (dtau1[i] * tau2 * q + tau1 * dtau2[i] * q + tau1 * tau2 * dq[i])
            + 2.0 * tau2 * dtau2[i];
        grad[i] = dsq / (2.0 * tau);
    }
    (tau, grad)
}

pub fn problem() -> Problem64 {
    Problem64::builder("welded_beam", 4, 1, 0)
        .objective(|x: &Vec64| x[Y1])
        .objective_grad(|_x: &Vec64| {
            let mut g = Vec64::zeros(N);
            g[Y1] = 1.0;
            g
        })
        .ineq_constraints(7, |x: &Vec64| {
            let (w1, w2, w3, w4) = (x[W1], x[W2], x[W3], x[W4]);
            let (tau, _) = shear(x);
            let sigma = 504000.0 / (w4 * w3 * w3);
            let defl = 2.1952 / (w3 * w3 * w3 * w4);
            let pc = PC_COEFF * (1.0 - 0.0282346 * w3) * w3 * w4 * w4 * w4;
            Vec64::from_column_slice(&[
                tau - TAU_MAX,
                sigma - SIGMA_MAX,
                w1 - w4,
                0.10476 * w1 * w1 + 0.04811 * w3 * w4 * (14.0 + w2) - 5.0,
                0.125 - w1,
                defl - 0.25,
                PC_MIN - pc,
            ])
        })
        .ineq_jacobian(|x: &Vec64| {
            let (w1, w2, w3, w4) = (x[W1], x[W2], x[W3], x[W4]);
            let (_, dtau) = shear(x);
            let mut j = Mat64::zeros(7, N);
            for (col, d) in dtau.iter().enumerate() {
                j[(0, col)] = *d;
            }
            j[(1, W3)] = -2.0 * 504000.0 / (w4 * w3 * w3 * w3);
            j[(1, W4)] = -504000.0 / (w4 * w4 * w3 * w3);
            j[(2, W1)] = 1.0;
            j[(2, W4)] = -1.0;
            j[(3, W1)] = 2.0 * 0.10476 * w1;
            j[(3, W2)] = 0.04811 * w3 * w4;
            j[(3, W3)] = 0.04811 * w4 * (14.0 + w2);
            j[(3, W4)] = 0.04811 * w3 * (14.0 + w2);
            j[(4, W1)] = -1.0;
            j[(5, W3)] = -3.0 * 2.1952 / (w3 * w3 * w3 * w3 * w4);
            j[(5, W4)] = -2.1952 / (w3 * w3 * w3 * w4 * w4);
            j[(6, W3)] = -PC_COEFF * w4 * w4 * w4 * (1.0 - 2.0 * 0.0282346 * w3);
            j[(6, W4)] = -PC_COEFF * 3.0 * w4 * w4 * w3 * (1.0 - 0.0282346 * w3);
            j
        })
        .black_box(|w: &Vec64| {
            let (w1, w2, w3, w4) = (w[0], w[1], w[2], w[3]);
            Vec64::from_column_slice(&[
                1.10471 * w1 * w1 * w2 + 0.04811 * w3 * w4 * (14.0 + w2),
            ])
        })
        .bounds(
            Vec64::from_column_slice(&[0.125, 0.1, 0.1, 0.1, 0.0]),
            Vec64::from_column_slice(&[5.0, 10.0, 10.0, 5.0, 320.0]),
        )
        .build()
}
