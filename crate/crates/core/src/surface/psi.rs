use serde::{Deserialize, Serialize};

use super::SurfaceFeatures;

/// Five-parameter log-polynomial smile and term-structure shape.
///
/// `beta[0]` term-structure decay, `beta[1]` skew, `beta[2]` DTE-skew
/// interaction, `beta[3]` smile curvature, `beta[4]` DTE curvature.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PsiBeta(pub [f64; 5]);

impl PsiBeta {
    pub const ZERO: PsiBeta = PsiBeta([0.0; 5]);

    /// Regressors `(ln tau, ln m, ln tau ln m, (ln m)^2, (ln tau)^2)` with the
    /// `tau = max(dte, 1)` floor applied.
    pub fn regressors(dte: f64, moneyness: f64) -> [f64; 5] {
        let lt = dte.max(1.0).ln();
        let lm = moneyness.ln();
        [lt, lm, lt * lm, lm * lm, lt * lt]
    }

    pub fn ln_psi(&self, dte: f64, moneyness: f64) -> f64 {
        let x = Self::regressors(dte, moneyness);
        self.0.iter().zip(x).map(|(b, x)| b * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|b| b.is_finite())
    }
}

/// `exp(b1 ln tau + b2 ln m + b3 ln tau ln m + b4 (ln m)^2 + b5 (ln tau)^2)`.
pub fn psi_param(dte: f64, moneyness: f64, beta: &PsiBeta) -> f64 {
    beta.ln_psi(dte, moneyness).exp()
}

pub(crate) fn psi_param_features(f: &SurfaceFeatures, beta: &PsiBeta) -> f64 {
    psi_param(f.dte, f.moneyness, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_tau_and_moneyness_give_one() {
        let beta = PsiBeta([0.3, -2.0, 0.7, 4.0, -0.2]);
        assert_eq!(psi_param(1.0, 1.0, &beta), 1.0);
        // DTE below one is floored
        assert_eq!(psi_param(0.0, 1.0, &beta), 1.0);
    }

    #[test]
    fn skew_term_inverts_moneyness() {
        let beta = PsiBeta([0.0, -1.0, 0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(psi_param(1.0, 0.8, &beta), 1.25, epsilon = 1e-12);
    }

    #[test]
    fn curvature_term_at_e() {
        let beta = PsiBeta([0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(psi_param(1.0, std::f64::consts::E, &beta), std::f64::consts::E, epsilon = 1e-12);
    }
}
