//! Funnel globalisation: a single monotonically nonincreasing bound φ on the
//! infeasibility measure gates step acceptance, replacing a filter of
//! `(f, θ)` pairs.

use crate::scalar::Real;

/// Current funnel width φ > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunnelState<T: Real> {
    pub phi: T,
}

/// Outcome of the acceptance tests for one trial step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    FType,
    ThetaType,
    Rejected,
}

/// Which tests were evaluated and how they came out. Tests short-circuited by
/// the evaluation order are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepDecision {
    pub kind: StepKind,
    pub gate: bool,
    pub switching: Option<bool>,
    pub armijo: Option<bool>,
    pub theta_sufficient: Option<bool>,
}

/// Acceptance constants used by [`classify_step`].
#[derive(Debug, Clone, Copy)]
pub struct AcceptanceParams<T: Real> {
    pub delta: T,
    pub gamma_s: T,
    pub eta: T,
    pub tau: T,
}

/// φ⁰ = max{φ_min, κ_φ·θ⁰}.
pub fn init_funnel<T: Real>(theta0: T, phi_min: T, kappa_phi: T) -> FunnelState<T> {
    debug_assert!(theta0 >= T::zero());
    debug_assert!(phi_min > T::zero());
    debug_assert!(kappa_phi > T::one());
    FunnelState {
        phi: phi_min.max(kappa_phi * theta0),
    }
}

/// Run the acceptance tests in order: gate, then switching, then either the
/// Armijo decrease (f-type candidates) or the θ sufficient decrease (θ-type
/// candidates). Each failure falls through to rejection.
pub fn classify_step<T: Real>(
    f_k: T,
    f_trial: T,
    theta_k: T,
    theta_trial: T,
    phi: T,
    delta_tr: T,
    p: &AcceptanceParams<T>,
) -> StepDecision {
    let gate = theta_trial <= phi;
    if !gate {
        return StepDecision {
            kind: StepKind::Rejected,
            gate,
            switching: None,
            armijo: None,
            theta_sufficient: None,
        };
    }
    let drop = f_k - f_trial;
    let switching = drop >= p.delta * theta_k.powf(p.gamma_s);
    if switching {
        let armijo = drop >= p.eta * delta_tr;
        StepDecision {
            kind: if armijo { StepKind::FType } else { StepKind::Rejected },
            gate,
            switching: Some(true),
            armijo: Some(armijo),
            theta_sufficient: None,
        }
    } else {
        let theta_sufficient = theta_trial <= p.tau * phi;
        StepDecision {
            kind: if theta_sufficient {
                StepKind::ThetaType
            } else {
                StepKind::Rejected
            },
            gate,
            switching: Some(false),
            armijo: None,
            theta_sufficient: Some(theta_sufficient),
        }
    }
}

/// Funnel contraction on a θ-type acceptance:
/// φ' = (1 − κ_f)·θ_trial + κ_f·φ.
pub fn update_funnel<T: Real>(state: FunnelState<T>, theta_trial: T, kappa_f: T) -> FunnelState<T> {
    assert!(
        theta_trial <= state.phi,
        "funnel update requires a gate-admissible trial"
    );
    FunnelState {
        phi: (T::one() - kappa_f) * theta_trial + kappa_f * state.phi,
    }
}

/// Reduction ratio ρ = (θ_k − θ_trial + ε_θ) / max(mismatch, ε_θ), where
/// `rm_mismatch_at_center` is ‖t(w^k) − r^k(w^k)‖.
pub fn reduction_ratio<T: Real>(theta_k: T, theta_trial: T, rm_mismatch_at_center: T, eps_theta: T) -> T {
    (theta_k - theta_trial + eps_theta) / rm_mismatch_at_center.max(eps_theta)
}

/// Trust-region update on θ-type steps: shrink, hold or grow by ρ bands.
pub fn update_tr_theta_type<T: Real>(
    rho: T,
    step_norm: T,
    delta_tr: T,
    gamma_c: T,
    gamma_e: T,
    eta1: T,
    eta2: T,
) -> T {
    if rho < eta1 {
        gamma_c * step_norm
    } else if rho < eta2 {
        delta_tr
    } else {
        (gamma_e * step_norm).max(delta_tr)
    }
}

/// Trust-region update on f-type steps; never shrinks.
pub fn update_tr_f_type<T: Real>(step_norm: T, delta_tr: T, gamma_e: T) -> T {
    (gamma_e * step_norm).max(delta_tr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AcceptanceParams<f64> {
        AcceptanceParams {
            delta: 0.1,
            gamma_s: 2.0,
            eta: 1e-4,
            tau: 0.75,
        }
    }

    #[test]
    fn funnel_initialisation() {
        assert_eq!(init_funnel::<f64>(1.0, 1e-4, 10.0).phi, 10.0);
        assert_eq!(init_funnel::<f64>(0.0, 1e-4, 10.0).phi, 1e-4);
        assert!((init_funnel::<f64>(7.75, 1e-4, 10.0).phi - 77.5).abs() < 1e-12);
    }

    #[test]
    fn gate_violation_rejects() {
        let d = classify_step(1.0, 0.0, 0.5, 1.5, 1.0, 1.0, &params());
        assert_eq!(d.kind, StepKind::Rejected);
        assert!(!d.gate);
        assert_eq!(d.switching, None);
    }

    #[test]
    fn f_type_acceptance() {
        // drop 1.0 ≥ 0.1·0.5² = 0.025, armijo 1.0 ≥ 1e-4·1
        let d = classify_step(1.0, 0.0, 0.5, 0.3, 1.0, 1.0, &params());
        assert_eq!(d.kind, StepKind::FType);
        assert_eq!(d.switching, Some(true));
        assert_eq!(d.armijo, Some(true));
    }

    #[test]
    fn theta_type_acceptance() {
        // drop 0.01 < 0.025 fails switching; 0.3 ≤ 0.75·1 passes θ-test
        let d = classify_step(1.0, 0.99, 0.5, 0.3, 1.0, 1.0, &params());
        assert_eq!(d.kind, StepKind::ThetaType);
        assert_eq!(d.switching, Some(false));
        assert_eq!(d.theta_sufficient, Some(true));
    }

    #[test]
    fn armijo_failure_rejects_even_with_switching() {
        // drop 0.05 ≥ 0.025 but armijo needs 1e-4·1000 = 0.1
        let d = classify_step(1.0, 0.95, 0.5, 0.3, 1.0, 1000.0, &params());
        assert_eq!(d.kind, StepKind::Rejected);
        assert_eq!(d.switching, Some(true));
        assert_eq!(d.armijo, Some(false));
    }

    #[test]
    fn funnel_update_examples() {
        let s = FunnelState::<f64> { phi: 1.0 };
        assert!((update_funnel(s, 0.2, 0.5).phi - 0.6).abs() < 1e-15);
        assert!((update_funnel(s, 0.0, 0.5).phi - 0.5).abs() < 1e-15);
        // contraction factor q = 1 − (1−τ)(1−κ_f)
        let tau: f64 = 0.75;
        let kappa_f = 0.3;
        let q = 1.0 - (1.0 - tau) * (1.0 - kappa_f);
        assert!((q - 0.825).abs() < 1e-15);
        let theta_trial = tau * s.phi;
        assert!(update_funnel(s, theta_trial, kappa_f).phi <= q * s.phi + 1e-15);
    }

    #[test]
    fn reduction_ratio_examples() {
        let r = reduction_ratio::<f64>(1.0, 0.1, 1.0, 1e-8);
        assert!((r - 0.90000001).abs() < 1e-7);
        let r = reduction_ratio::<f64>(1.0, 0.1, 0.0, 1e-8);
        assert!(r > 1e7, "interpolatory mismatch must blow up: {r}");
        let r = reduction_ratio::<f64>(0.1, 0.3, 1e-8, 1e-8);
        assert!((r + 2e7).abs() < 10.0, "rho = {r}");
    }

    #[test]
    fn tr_updates() {
        assert_eq!(update_tr_theta_type::<f64>(0.9, 1.0, 1.0, 0.5, 2.0, 0.25, 0.75), 2.0);
        assert_eq!(update_tr_theta_type::<f64>(0.5, 1.0, 1.0, 0.5, 2.0, 0.25, 0.75), 1.0);
        assert_eq!(update_tr_theta_type::<f64>(0.1, 1.0, 1.0, 0.5, 2.0, 0.25, 0.75), 0.5);
        assert_eq!(update_tr_f_type::<f64>(1.0, 0.5, 2.0), 2.0);
        assert_eq!(update_tr_f_type::<f64>(0.1, 1.0, 2.0), 1.0);
        assert_eq!(update_tr_f_type::<f64>(0.0, 1.0, 2.0), 1.0);
    }

    /// Exhaustive oracle over the 16 outcome combinations consistent with the
    /// evaluation order.
    #[test]
    fn acceptance_truth_table() {
        let p = params();
        // Construct scalar instances that force each test outcome.
        for gate in [false, true] {
            for switching in [false, true] {
                for armijo in [false, true] {
                    for theta_suff in [false, true] {
                        let phi = 1.0;
                        let theta_trial = if gate {
                            if theta_suff { 0.5 } else { 0.8 }
                        } else {
                            1.5
                        };
                        // θ-test only meaningful when gate holds; skip the
                        // inconsistent corner where gate fails but we would
                        // require a θ outcome anyway.
                        if !gate && theta_suff {
                            continue;
                        }
                        let theta_k = 0.5; // switching threshold 0.025
                        let drop = if switching { 0.05 } else { 0.01 };
                        let delta_tr = if armijo { drop / p.eta * 0.5 } else { drop / p.eta * 2.0 };
                        let d = classify_step(1.0, 1.0 - drop, theta_k, theta_trial, phi, delta_tr, &p);
                        let expected = if !gate {
                            StepKind::Rejected
                        } else if switching {
                            if armijo { StepKind::FType } else { StepKind::Rejected }
                        } else if theta_suff {
                            StepKind::ThetaType
                        } else {
                            StepKind::Rejected
                        };
                        assert_eq!(d.kind, expected, "gate={gate} sw={switching} ar={armijo} th={theta_suff}");
                    }
                }
            }
        }
    }
}
