//! Per-user power splitting between the decoder and the harvester.
//!
//! Each user maximizes `alpha log2(1 + rho P g) + beta (1 - rho) zeta P E`
//! over `rho` in `[0, 1]`, where `g = |u^H h v|^2` and `E` is the received
//! field energy per unit power. The term is concave in `rho`, so the optimum
//! is the stationary point clamped to the interval, and users never interact.

use crate::error::{Error, Result};
use crate::metrics::SlotMetrics;

/// Rate/energy weights per user with `alpha[k] + beta[k] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RequirementWeights {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl RequirementWeights {
    /// Weights from rate priorities; `beta = 1 - alpha`.
    pub fn from_alpha(alpha: Vec<f64>) -> Result<Self> {
        if let Some(&a) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Domain {
                value: a,
                domain: "[0, 1]",
            });
        }
        let beta = alpha.iter().map(|a| 1.0 - a).collect();
        Ok(Self { alpha, beta })
    }

    pub fn uniform(alpha: f64, users: usize) -> Result<Self> {
        Self::from_alpha(vec![alpha; users])
    }

    /// Checks ranges and `alpha + beta = 1` within `1e-12`.
    pub fn validate(&self, users: usize) -> Result<()> {
        if self.alpha.len() != users || self.beta.len() != users {
            return Err(Error::Dimension(format!(
                "{} / {} weights for {users} users",
                self.alpha.len(),
                self.beta.len()
            )));
        }
        for (&a, &b) in self.alpha.iter().zip(&self.beta) {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || (a + b - 1.0).abs() > 1e-12
            {
                return Err(Error::Domain {
                    value: a,
                    domain: "alpha, beta in [0, 1] with alpha + beta = 1",
                });
            }
        }
        Ok(())
    }

    pub fn users(&self) -> usize {
        self.alpha.len()
    }
}

/// Splitting ratio per user: the fraction of received power sent to the decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitProfile {
    pub rho: Vec<f64>,
    /// Users whose ratio came from a limiting argument (zero channel or zero field).
    pub degenerate: Vec<bool>,
}

impl SplitProfile {
    pub fn uniform(rho: f64, users: usize) -> Self {
        Self {
            rho: vec![rho; users],
            degenerate: vec![false; users],
        }
    }
}

/// Weights from requested rate and power:
/// `alpha = u R / (u R + phi Q)`, `beta = phi Q / (u R + phi Q)`.
pub fn weights_from_requirements(
    rate_req: f64,
    power_req: f64,
    upsilon: f64,
    phi: f64,
) -> Result<(f64, f64)> {
    for value in [rate_req, power_req, upsilon, phi] {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::Domain {
                value,
                domain: "non-negative finite",
            });
        }
    }
    let rate_side = upsilon * rate_req;
    let power_side = phi * power_req;
    let total = rate_side + power_side;
    if total <= 0.0 {
        return Err(Error::DegenerateRequirements);
    }
    let alpha = rate_side / total;
    Ok((alpha, 1.0 - alpha))
}

/// Optimal splitting ratio of one user and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormRho {
    pub rho: f64,
    /// Unclamped stationary point; infinite in the limiting cases.
    pub psi: f64,
    pub degenerate: bool,
}

/// Stationary point of the per-user term,
/// `psi = alpha / (beta * harvest * ln 2) - 1 / snr`, clamped to `[0, 1]`.
///
/// `snr = P g` is the decoder SNR at `rho = 1` and `harvest = zeta P E` the
/// power harvested at `rho = 0`. Division by zero is resolved by its limit.
pub fn clamp_split(alpha: f64, beta: f64, snr: f64, harvest: f64) -> ClosedFormRho {
    if alpha == 0.0 {
        return ClosedFormRho {
            rho: 0.0,
            psi: f64::NEG_INFINITY,
            degenerate: false,
        };
    }
    if beta == 0.0 {
        return ClosedFormRho {
            rho: 1.0,
            psi: f64::INFINITY,
            degenerate: snr <= 0.0,
        };
    }
    if snr <= 0.0 {
        return ClosedFormRho {
            rho: 0.0,
            psi: f64::NEG_INFINITY,
            degenerate: true,
        };
    }
    if harvest <= 0.0 {
        return ClosedFormRho {
            rho: 1.0,
            psi: f64::INFINITY,
            degenerate: true,
        };
    }
    let psi = alpha / (beta * harvest * std::f64::consts::LN_2) - 1.0 / snr;
    // psi <= 0, cross-multiplied.
    let rho = if alpha * snr <= beta * harvest * std::f64::consts::LN_2 {
        0.0
    } else {
        psi.clamp(0.0, 1.0)
    };
    ClosedFormRho {
        rho,
        psi,
        degenerate: false,
    }
}

/// Closed-form optimal splitting ratio for one user from its effective gain
/// `|u^H h v|^2` and field energy per unit power. Weights at or below
/// [`eh_only_alpha_threshold`] give exactly zero.
pub fn pso_closed_form(
    gain: f64,
    field: f64,
    alpha: f64,
    beta: f64,
    zeta: f64,
    tx_power: f64,
) -> ClosedFormRho {
    let mut r = clamp_split(alpha, beta, tx_power * gain, zeta * tx_power * field);
    if r.rho > 0.0
        && !r.degenerate
        && beta > 0.0
        && alpha <= eh_only_alpha_threshold(gain, field, zeta)
    {
        r.rho = 0.0;
    }
    r
}

/// Per-user term of the weighted objective.
pub fn user_objective(rho: f64, alpha: f64, beta: f64, snr: f64, harvest: f64) -> f64 {
    let rate = if alpha == 0.0 {
        0.0
    } else {
        alpha * (rho * snr).ln_1p() / std::f64::consts::LN_2
    };
    rate + beta * (1.0 - rho) * harvest
}

/// Weighted rate-plus-energy objective summed over users at equal power.
pub fn pso_objective(
    profile: &SplitProfile,
    metrics: &SlotMetrics,
    weights: &RequirementWeights,
) -> Result<f64> {
    let users = metrics.users();
    weights.validate(users)?;
    if profile.rho.len() != users {
        return Err(Error::Dimension(format!(
            "{} splitting ratios for {users} users",
            profile.rho.len()
        )));
    }
    let mut total = 0.0;
    for k in 0..users {
        let rho = profile.rho[k];
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Domain {
                value: rho,
                domain: "[0, 1]",
            });
        }
        total += user_objective(
            rho,
            weights.alpha[k],
            weights.beta[k],
            metrics.tx_power * metrics.gain[k],
            metrics.zeta * metrics.tx_power * metrics.field[k],
        );
    }
    Ok(total)
}

/// Solves every user's splitting ratio independently.
pub fn pso_solve(metrics: &SlotMetrics, weights: &RequirementWeights) -> Result<SplitProfile> {
    let users = metrics.users();
    weights.validate(users)?;
    let (rho, degenerate) = (0..users)
        .map(|k| {
            let r = pso_closed_form(
                metrics.gain[k],
                metrics.field[k],
                weights.alpha[k],
                weights.beta[k],
                metrics.zeta,
                metrics.tx_power,
            );
            (r.rho, r.degenerate)
        })
        .unzip();
    Ok(SplitProfile { rho, degenerate })
}

/// Largest `alpha` for which the optimal ratio is exactly zero:
/// `zeta E ln2 / (zeta E ln2 + g)`.
pub fn eh_only_alpha_threshold(gain: f64, field: f64, zeta: f64) -> f64 {
    let harvest = zeta * field * std::f64::consts::LN_2;
    if harvest + gain == 0.0 {
        return 1.0;
    }
    harvest / (harvest + gain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requirement_weights() {
        assert_eq!(
            weights_from_requirements(2.0, 1.0, 1.0, 2.0).unwrap(),
            (0.5, 0.5)
        );
        assert_eq!(
            weights_from_requirements(3.0, 0.0, 1.0, 1.0).unwrap(),
            (1.0, 0.0)
        );
        let (a, b) = weights_from_requirements(2.0, 1.0, 1.0, 4.0).unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15 && (b - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(a + b, 1.0);
        assert_eq!(
            weights_from_requirements(0.0, 0.0, 1.0, 1.0),
            Err(Error::DegenerateRequirements)
        );
        assert!(weights_from_requirements(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn clamp_extremes() {
        let r = pso_closed_form(0.1, 1.3, 0.0, 1.0, 0.5, 100.0);
        assert_eq!(r.rho, 0.0);
        let r = pso_closed_form(0.1, 1.3, 1.0, 0.0, 0.5, 100.0);
        assert_eq!(r.rho, 1.0);
        assert!(!r.degenerate);
        let r = pso_closed_form(0.0, 1.3, 0.7, 0.3, 0.5, 100.0);
        assert_eq!((r.rho, r.degenerate), (0.0, true));
        let r = pso_closed_form(0.1, 0.0, 0.7, 0.3, 0.5, 100.0);
        assert_eq!((r.rho, r.degenerate), (1.0, true));
        let r = pso_closed_form(0.0, 1.3, 1.0, 0.0, 0.5, 100.0);
        assert_eq!((r.rho, r.degenerate), (1.0, true));
    }

    #[test]
    fn below_threshold_gives_zero() {
        let (g, e, zeta) = (0.08, 1.4, 0.5);
        let t = eh_only_alpha_threshold(g, e, zeta);
        for alpha in [0.0, t * 0.5, t * 0.999, t] {
            let r = pso_closed_form(g, e, alpha, 1.0 - alpha, zeta, 100.0);
            assert_eq!(r.rho, 0.0, "alpha {alpha}");
        }
        let alpha = t + 1e-3;
        assert!(pso_closed_form(g, e, alpha, 1.0 - alpha, zeta, 100.0).rho > 0.0);
    }

    #[test]
    fn weights_validation() {
        assert!(RequirementWeights::from_alpha(vec![0.2, 1.2]).is_err());
        let w = RequirementWeights::uniform(0.3, 3).unwrap();
        assert!(w.validate(3).is_ok());
        assert!(w.validate(4).is_err());
        let bad = RequirementWeights {
            alpha: vec![0.5],
            beta: vec![0.6],
        };
        assert!(bad.validate(1).is_err());
    }
}
