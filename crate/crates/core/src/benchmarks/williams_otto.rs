//! Williams–Otto reactor flowsheet as a grey-box: the CSTR kinetics are the
//! black box (inputs: reactor mass fractions, temperature, holdup), the
//! plant-wide mass balances, separation split and ROI economics stay
//! glass-box. The objective is the negated return on investment.
//!
//! Layout: x = (xA, xB, xC, xP, T, V | y1, y2, y3 | FA, FB, FeA, FeB, FeC,
//! FeE, FeP, FeG, Fsum, FG, Fpurge, FRA, FRB, FRC, FRE, FRP, FRG, FP,
//! eta_purge, xE, xG).

use crate::{Mat64, Problem64, Vec64};

const XA: usize = 0;
const XB: usize = 1;
const XC: usize = 2;
const XP: usize = 3;
const T: usize = 4;
const V: usize = 5;
const Y1: usize = 6;
const Y2: usize = 7;
const Y3: usize = 8;
const FA: usize = 9;
const FB: usize = 10;
const FE_A: usize = 11;
const FE_B: usize = 12;
const FE_C: usize = 13;
const FE_E: usize = 14;
const FE_P: usize = 15;
const FE_G: usize = 16;
const FSUM: usize = 17;
const FG: usize = 18;
const FPU: usize = 19;
const FR_A: usize = 20;
const FR_B: usize = 21;
const FR_C: usize = 22;
const FR_E: usize = 23;
const FR_P: usize = 24;
const FR_G: usize = 25;
const FP: usize = 26;
const ETA: usize = 27;
const XE: usize = 28;
const XG: usize = 29;
const N: usize = 30;

const RHO: f64 = 50.0;
const A1: f64 = 5.9755e9;
const A2: f64 = 2.5962e12;
const A3: f64 = 9.6283e15;

const FE: [usize; 6] = [FE_A, FE_B, FE_C, FE_E, FE_P, FE_G];
const FR: [usize; 6] = [FR_A, FR_B, FR_C, FR_E, FR_P, FR_G];
const XFRAC: [usize; 6] = [XA, XB, XC, XE, XP, XG];

pub fn problem() -> Problem64 {
    Problem64::builder("williams_otto", 6, 3, 21)
        .objective(|x: &Vec64| {
            let s = 2207.0 * x[FP] + 50.0 * x[FPU] - 168.0 * x[FA] - 252.0 * x[FB]
                - 2.22 * x[FSUM]
                - 84.0 * x[FG]
                - 60.0 * x[V] * RHO;
            -s / (300.0 * x[V])
        })
        .objective_grad(|x: &Vec64| {
            let v = x[V];
            let s = 2207.0 * x[FP] + 50.0 * x[FPU] - 168.0 * x[FA] - 252.0 * x[FB]
                - 2.22 * x[FSUM]
                - 84.0 * x[FG]
                - 60.0 * v * RHO;
            let mut g = Vec64::zeros(N);
            g[FP] = -2207.0 / (300.0 * v);
            g[FPU] = -50.0 / (300.0 * v);
            g[FA] = 168.0 / (300.0 * v);
            g[FB] = 252.0 / (300.0 * v);
            g[FSUM] = 2.22 / (300.0 * v);
            g[FG] = 84.0 / (300.0 * v);
            g[V] = (s + 3000.0 * v) / (300.0 * v * v);
            g
        })
        .eq_constraints(22, |x: &Vec64| {
            let mut h = Vec64::zeros(22);
            h[0] = x[FE_A] - x[FA] - x[FR_A] + x[Y1];
            h[1] = x[FE_B] - x[FB] - x[FR_B] + x[Y1] + x[Y2];
            h[2] = x[FE_C] - x[FR_C] - 2.0 * x[Y1] + 2.0 * x[Y2] + x[Y3];
            h[3] = x[FE_E] - x[FR_E] - 2.0 * x[Y2];
            h[4] = x[FE_P] - 0.1 * x[FR_E] - x[Y2] + 0.5 * x[Y3];
            h[5] = x[FE_G] - 1.5 * x[Y3];
            h[6] = x[FSUM] - FE.iter().map(|&i| x[i]).sum::<f64>();
            h[7] = x[FG] - x[FE_G];
            h[8] = x[FPU]
                - x[ETA] * (x[FE_A] + x[FE_B] + x[FE_C] + 1.1 * x[FE_E]);
            for (row, (&fr, &fe)) in FR.iter().zip(FE.iter()).enumerate() {
                h[9 + row] = x[fr] - (1.0 - x[ETA]) * x[fe];
            }
            h[15] = x[FP] - x[FE_P] + 0.1 * x[FE_E];
            for (row, (&xf, &fe)) in XFRAC.iter().zip(FE.iter()).enumerate() {
                h[16 + row] = x[xf] * x[FSUM] - x[fe];
            }
            h
        })
        .eq_jacobian(|x: &Vec64| {
            let mut j = Mat64::zeros(22, N);
            j[(0, FE_A)] = 1.0;
            j[(0, FA)] = -1.0;
            j[(0, FR_A)] = -1.0;
            j[(0, Y1)] = 1.0;

            j[(1, FE_B)] = 1.0;
            j[(1, FB)] = -1.0;
            j[(1, FR_B)] = -1.0;
            j[(1, Y1)] = 1.0;
            j[(1, Y2)] = 1.0;

            j[(2, FE_C)] = 1.0;
            j[(2, FR_C)] = -1.0;
            j[(2, Y1)] = -2.0;
            j[(2, Y2)] = 2.0;
            j[(2, Y3)] = 1.0;

            j[(3, FE_E)] = 1.0;
            j[(3, FR_E)] = -1.0;
            j[(3, Y2)] = -2.0;

            j[(4, FE_P)] = 1.0;
            j[(4, FR_E)] = -0.1;
            j[(4, Y2)] = -1.0;
            j[(4, Y3)] = 0.5;

            j[(5, FE_G)] = 1.0;
            j[(5, Y3)] = -1.5;

            j[(6, FSUM)] = 1.0;
            for &fe in &FE {
                j[(6, fe)] = -1.0;
            }

            j[(7, FG)] = 1.0;
            j[(7, FE_G)] = -1.0;

            j[(8, FPU)] = 1.0;
            j[(8, ETA)] = -(x[FE_A] + x[FE_B] + x[FE_C] + 1.1 * x[FE_E]);
            j[(8, FE_A)] = -x[ETA];
            j[(8, FE_B)] = -x[ETA];
            j[(8, FE_C)] = -x[ETA];
            j[(8, FE_E)] = -1.1 * x[ETA];

            for (row, (&fr, &fe)) in FR.iter().zip(FE.iter()).enumerate() {
                j[(9 + row, fr)] = 1.0;
                j[(9 + row, fe)] = -(1.0 - x[ETA]);
                j[(9 + row, ETA)] = x[fe];
            }

            j[(15, FP)] = 1.0;
            j[(15, FE_P)] = -1.0;
            j[(15, FE_E)] = 0.1;

            for (row, (&xf, &fe)) in XFRAC.iter().zip(FE.iter()).enumerate() {
                j[(16 + row, xf)] = x[FSUM];
                j[(16 + row, FSUM)] = x[xf];
                j[(16 + row, fe)] = -1.0;
            }
            j
        })
        .black_box(|w: &Vec64| {
            let (xa, xb, xc, xp, t, v) = (w[0], w[1], w[2], w[3], w[4], w[5]);
            let k1 = A1 * (-120.0 / t).exp();
            let k2 = A2 * (-150.0 / t).exp();
            let k3 = A3 * (-200.0 / t).exp();
            Vec64::from_column_slice(&[
                k1 * xa * xb * v * RHO,
                k2 * xb * xc * v * RHO,
                k3 * xp * xc * v * RHO,
            ])
        })
        .bounds(lower(), upper())
        .build()
}

fn lower() -> Vec64 {
    let mut lo = Vec64::zeros(N);
    lo[T] = 5.8;
    lo[V] = 0.03;
    lo[FA] = 1.0;
    lo[FB] = 1.0;
    lo[ETA] = 0.01;
    lo
}

fn upper() -> Vec64 {
    let mut hi = Vec64::from_element(N, 1000.0);
    for &xf in &XFRAC {
        hi[xf] = 1.0;
    }
    hi[T] = 6.8;
    hi[V] = 0.1;
    hi[Y1] = 170.0;
    hi[Y2] = 900.0;
    hi[Y3] = 2100.0;
    hi[FA] = 100.0;
    hi[FB] = 100.0;
    hi[FSUM] = 6000.0;
    hi[FP] = 4.763;
    hi[ETA] = 0.99;
    hi
}

/// Documented near-feasible seed: a plausible operating point with the
/// recycle flows roughed in; the balances are restored by the solver.
pub fn seed() -> Vec64 {
    let mut x = Vec64::zeros(N);
    x[XA] = 0.2;
    x[XB] = 0.35;
    x[XC] = 0.1;
    x[XP] = 0.1;
    x[T] = 6.2;
    x[V] = 0.06;
    x[Y1] = 5.0;
    x[Y2] = 8.0;
    x[Y3] = 3.0;
    x[FA] = 10.0;
    x[FB] = 20.0;
    x[FE_A] = 60.0;
    x[FE_B] = 100.0;
    x[FE_C] = 30.0;
    x[FE_E] = 100.0;
    x[FE_P] = 30.0;
    x[FE_G] = 5.0;
    x[FSUM] = 325.0;
    x[FG] = 5.0;
    x[FPU] = 30.0;
    x[FR_A] = 55.0;
    x[FR_B] = 90.0;
    x[FR_C] = 27.0;
    x[FR_E] = 90.0;
    x[FR_P] = 27.0;
    x[FR_G] = 4.0;
    x[FP] = 3.0;
    x[ETA] = 0.1;
    x[XE] = 0.3;
    x[XG] = 0.02;
    x
}
