//! Classical trust-region filter acceptance, the drop-in alternative to the
//! funnel. A filter keeps nondominated `(f, θ)` pairs; a trial is acceptable
//! if it improves sufficiently on every entry in at least one axis.

use crate::scalar::{cst, Real};

/// Envelope margins and the entry list. Entries stay mutually nondominated.
#[derive(Debug, Clone)]
pub struct FilterSet<T: Real> {
    entries: Vec<(T, T)>,
    pub gamma_theta: T,
    pub gamma_f: T,
}

impl<T: Real> Default for FilterSet<T> {
    fn default() -> Self {
        Self::new(cst(0.01), cst(0.01))
    }
}

impl<T: Real> FilterSet<T> {
    pub fn new(gamma_theta: T, gamma_f: T) -> Self {
        Self {
            entries: Vec::new(),
            gamma_theta,
            gamma_f,
        }
    }

    pub fn entries(&self) -> &[(T, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True iff `(f, θ)` improves on every entry with margin:
    /// θ ≤ (1 − γ_θ)·θ_j or f ≤ f_j − γ_f·θ_j.
    pub fn acceptable(&self, f_trial: T, theta_trial: T) -> bool {
        self.entries.iter().all(|&(fj, tj)| {
            theta_trial <= (T::one() - self.gamma_theta) * tj || f_trial <= fj - self.gamma_f * tj
        })
    }

    /// Insert a freshly accepted θ-type pair and drop dominated entries.
    ///
    /// The margins make it possible for an acceptable pair to still be weakly
    /// dominated by an entry (equal in one axis, worse in the other); such a
    /// pair adds no information and is skipped.
    pub fn augment(&mut self, f: T, theta: T) {
        if self.entries.iter().any(|&(fj, tj)| fj <= f && tj <= theta) {
            return;
        }
        self.entries.retain(|&(fj, tj)| !(f <= fj && theta <= tj));
        self.entries.push((f, theta));
    }

    /// Dominance-freeness scan used by the property tests.
    pub fn is_dominance_free(&self) -> bool {
        for (i, &(fi, ti)) in self.entries.iter().enumerate() {
            for (j, &(fj, tj)) in self.entries.iter().enumerate() {
                if i != j && fi <= fj && ti <= tj && (fi < fj || ti < tj) {
                    return false;
                }
            }
        }
        true
    }
}
