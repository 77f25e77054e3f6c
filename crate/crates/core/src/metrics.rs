//! Per-user SWIPT metrics for one slot: information rate, harvested power,
//! power-to-rate ratio, the harvested-power upper bound and the desired-signal
//! geometry.
//!
//! Receiver noise is left out of the harvested power; only the received
//! signal field counts.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::{ChannelSet, NetworkConfig, SymbolVector};
use crate::error::{Error, Result};
use crate::ia::{check_solution_shape, effective_channel, IaSolution};
use crate::linalg::{inner, lambda_max_gram};

/// How the harvested power treats the transmit symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerMode {
    /// Use the slot's drawn symbol realization.
    #[default]
    Instantaneous,
    /// Average over independent zero-mean unit-power symbols.
    Expected,
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Domain {
            value: rho,
            domain: "[0, 1]",
        })
    }
}

fn check_user(ch: &ChannelSet, k: usize) -> Result<()> {
    if k < ch.users() {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            index: k,
            users: ch.users(),
        })
    }
}

/// `|u[k]^H h[k][k] v[k]|^2`.
pub fn effective_gain(ch: &ChannelSet, sol: &IaSolution, k: usize) -> Result<f64> {
    Ok(effective_channel(ch, sol, k)?.norm_sqr())
}

/// Rate of user `k` in bits/s/Hz when a fraction `rho` of its received power
/// feeds the decoder.
pub fn rate_id(
    ch: &ChannelSet,
    sol: &IaSolution,
    k: usize,
    tx_power: f64,
    rho: f64,
) -> Result<f64> {
    check_rho(rho)?;
    let gain = effective_gain(ch, sol, k)?;
    Ok((rho * tx_power * gain).ln_1p() / std::f64::consts::LN_2)
}

/// Received signal field `sum_j h[k][j] v[j] xi[j]` at receiver `k`.
pub fn received_field(
    ch: &ChannelSet,
    sol: &IaSolution,
    xi: &SymbolVector,
    k: usize,
) -> Result<DVector<Complex64>> {
    check_solution_shape(ch, sol)?;
    check_user(ch, k)?;
    if xi.len() != ch.users() {
        return Err(Error::Dimension(format!(
            "{} symbols for {} users",
            xi.len(),
            ch.users()
        )));
    }
    let mut field = DVector::zeros(ch.shape().0);
    for (j, &x) in xi.xi.iter().enumerate() {
        field += ch.get(k, j) * &sol.v[j] * x;
    }
    Ok(field)
}

/// `||sum_j h[k][j] v[j] xi[j]||^2`, the instantaneous field energy per unit power.
pub fn field_energy(ch: &ChannelSet, sol: &IaSolution, xi: &SymbolVector, k: usize) -> Result<f64> {
    Ok(received_field(ch, sol, xi, k)?.norm_squared())
}

/// `sum_j ||h[k][j] v[j]||^2`, the symbol-averaged field energy per unit power.
pub fn expected_field_energy(ch: &ChannelSet, sol: &IaSolution, k: usize) -> Result<f64> {
    check_solution_shape(ch, sol)?;
    check_user(ch, k)?;
    Ok((0..ch.users())
        .map(|j| (ch.get(k, j) * &sol.v[j]).norm_squared())
        .sum())
}

/// Instantaneous harvested power `(1 - rho) zeta P_t ||sum_j h v xi||^2`.
pub fn harvested_power(
    ch: &ChannelSet,
    sol: &IaSolution,
    xi: &SymbolVector,
    k: usize,
    tx_power: f64,
    rho: f64,
    zeta: f64,
) -> Result<f64> {
    check_rho(rho)?;
    Ok((1.0 - rho) * zeta * tx_power * field_energy(ch, sol, xi, k)?)
}

/// Harvested power averaged over the transmit symbols; the cross terms vanish.
pub fn harvested_power_expected(
    ch: &ChannelSet,
    sol: &IaSolution,
    k: usize,
    tx_power: f64,
    rho: f64,
    zeta: f64,
) -> Result<f64> {
    check_rho(rho)?;
    Ok((1.0 - rho) * zeta * tx_power * expected_field_energy(ch, sol, k)?)
}

/// Harvested power at `rho = 0` over rate at `rho = 1`. A zero rate yields
/// `f64::INFINITY`.
pub fn prr(
    ch: &ChannelSet,
    sol: &IaSolution,
    xi: &SymbolVector,
    k: usize,
    tx_power: f64,
    zeta: f64,
) -> Result<f64> {
    let q = harvested_power(ch, sol, xi, k, tx_power, 0.0, zeta)?;
    let r = rate_id(ch, sol, k, tx_power, 1.0)?;
    Ok(ratio_or_infinity(q, r))
}

fn ratio_or_infinity(q: f64, r: f64) -> f64 {
    if r > 0.0 {
        q / r
    } else {
        f64::INFINITY
    }
}

/// Upper bound on the power harvested by a dedicated EH receiver `k`:
/// `zeta P_t (sum_j sqrt(lambda_max(h[k][j]^H h[k][j])))^2`.
pub fn q_upper_bound(ch: &ChannelSet, k: usize, tx_power: f64, zeta: f64) -> Result<f64> {
    check_user(ch, k)?;
    let amplitude: f64 = (0..ch.users())
        .map(|j| lambda_max_gram(ch.get(k, j)).sqrt())
        .sum();
    if !amplitude.is_finite() {
        return Err(Error::NonFinite("spectral norm"));
    }
    Ok(zeta * tx_power * amplitude * amplitude)
}

/// Desired-signal length `c = ||h[k][k] v[k]||` and the alignment cosine
/// between `u[k]` and `h[k][k] v[k]`.
pub fn signal_geometry(ch: &ChannelSet, sol: &IaSolution, k: usize) -> Result<(f64, f64)> {
    check_solution_shape(ch, sol)?;
    check_user(ch, k)?;
    let desired = ch.get(k, k) * &sol.v[k];
    let c = desired.norm();
    if c == 0.0 {
        return Ok((0.0, 0.0));
    }
    let cos = (inner(&sol.u[k], &desired).norm() / (sol.u[k].norm() * c)).min(1.0);
    Ok((c, cos))
}

/// All per-user quantities of one slot at the configuration's transmit power.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    /// `|u^H h v|^2` per user.
    pub gain: Vec<f64>,
    /// Field energy per unit transmit power (instantaneous or expected).
    pub field: Vec<f64>,
    pub rate_full: Vec<f64>,
    pub power_full: Vec<f64>,
    pub prr: Vec<f64>,
    pub q_upper: Vec<f64>,
    pub c: Vec<f64>,
    pub cos_delta: Vec<f64>,
    pub tx_power: f64,
    pub zeta: f64,
}

impl SlotMetrics {
    pub fn compute(
        ch: &ChannelSet,
        sol: &IaSolution,
        xi: &SymbolVector,
        cfg: &NetworkConfig,
        mode: PowerMode,
    ) -> Result<Self> {
        ch.check_config(cfg)?;
        let users = cfg.users;
        let (p, zeta) = (cfg.tx_power, cfg.zeta);
        let mut m = SlotMetrics {
            gain: Vec::with_capacity(users),
            field: Vec::with_capacity(users),
            rate_full: Vec::with_capacity(users),
            power_full: Vec::with_capacity(users),
            prr: Vec::with_capacity(users),
            q_upper: Vec::with_capacity(users),
            c: Vec::with_capacity(users),
            cos_delta: Vec::with_capacity(users),
            tx_power: p,
            zeta,
        };
        for k in 0..users {
            let gain = effective_gain(ch, sol, k)?;
            let field = match mode {
                PowerMode::Instantaneous => field_energy(ch, sol, xi, k)?,
                PowerMode::Expected => expected_field_energy(ch, sol, k)?,
            };
            let rate = (p * gain).ln_1p() / std::f64::consts::LN_2;
            let power = zeta * p * field;
            let (c, cos) = signal_geometry(ch, sol, k)?;
            m.gain.push(gain);
            m.field.push(field);
            m.rate_full.push(rate);
            m.power_full.push(power);
            m.prr.push(ratio_or_infinity(power, rate));
            m.q_upper.push(q_upper_bound(ch, k, p, zeta)?);
            m.c.push(c);
            m.cos_delta.push(cos);
        }
        Ok(m)
    }

    pub fn users(&self) -> usize {
        self.gain.len()
    }

    /// Users whose rate at full splitting is zero (PRR reported as infinity).
    pub fn zero_rate_users(&self) -> Vec<usize> {
        (0..self.users())
            .filter(|&k| self.rate_full[k] <= 0.0)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel_set, draw_symbols};
    use crate::ia::{solve_minil, IaOptions};
    use crate::linalg::hermitian_eigen_sorted;
    use nalgebra::DMatrix;

    fn aligned_slot(seed: u64, slot: u64) -> (NetworkConfig, ChannelSet, IaSolution, SymbolVector) {
        let cfg = NetworkConfig::default().with_tx_power(40.0);
        let ch = draw_channel_set(&cfg, seed, slot).unwrap();
        let sol = solve_minil(&ch, &cfg.with_tx_power(1.0), &IaOptions::default()).unwrap();
        let xi = draw_symbols(&cfg, seed, slot).unwrap();
        (cfg, ch, sol, xi)
    }

    fn unit(len: usize, i: usize) -> DVector<Complex64> {
        let mut v = DVector::zeros(len);
        v[i] = Complex64::new(1.0, 0.0);
        v
    }

    fn single(
        h: DMatrix<Complex64>,
        v: DVector<Complex64>,
        u: DVector<Complex64>,
    ) -> (ChannelSet, IaSolution) {
        let ch = ChannelSet::from_matrices(vec![vec![h]], 0).unwrap();
        let sol = IaSolution {
            v: vec![v],
            u: vec![u],
            leakage: 0.0,
            iterations: 1,
            converged: true,
            history: Vec::new(),
        };
        (ch, sol)
    }

    #[test]
    fn rate_endpoints() {
        let h = DMatrix::<Complex64>::identity(2, 2);
        let (ch, sol) = single(h, unit(2, 0), unit(2, 0));
        assert_eq!(rate_id(&ch, &sol, 0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(rate_id(&ch, &sol, 0, 1.0, 1.0).unwrap(), 1.0);
        assert!(matches!(
            rate_id(&ch, &sol, 0, 1.0, 1.5),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn two_route_rate_identity() {
        for slot in 0..10 {
            let (cfg, ch, sol, _) = aligned_slot(4, slot);
            for k in 0..cfg.users {
                let g = effective_gain(&ch, &sol, k).unwrap();
                let (c, cos) = signal_geometry(&ch, &sol, k).unwrap();
                let direct = cfg.tx_power * g;
                let geometric = cfg.tx_power * c * c * cos * cos;
                assert!((direct - geometric).abs() <= 1e-12 * direct.max(1.0));
                let rate = rate_id(&ch, &sol, k, cfg.tx_power, 1.0).unwrap();
                assert!((rate - geometric.ln_1p() / std::f64::consts::LN_2).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn geometry_extremes() {
        let h = DMatrix::<Complex64>::identity(2, 2);
        let (ch, sol) = single(h.clone(), unit(2, 0), unit(2, 0));
        assert_eq!(signal_geometry(&ch, &sol, 0).unwrap(), (1.0, 1.0));
        let (ch, sol) = single(h, unit(2, 0), unit(2, 1));
        assert_eq!(signal_geometry(&ch, &sol, 0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn single_user_bound_is_attained_on_top_direction() {
        let cfg = NetworkConfig::new(1, 3, 2).with_tx_power(7.0);
        let ch = draw_channel_set(&cfg, 13, 2).unwrap();
        let h = ch.get(0, 0).clone();
        let (values, vectors) = hermitian_eigen_sorted(&(h.adjoint() * &h));
        let top = vectors.column(2).into_owned();
        let (ch, sol) = single(h, top, unit(2, 0));
        let xi = SymbolVector {
            xi: vec![Complex64::from_polar(1.0, 2.1)],
        };
        let q = harvested_power(&ch, &sol, &xi, 0, 7.0, 0.0, 0.5).unwrap();
        let bound = q_upper_bound(&ch, 0, 7.0, 0.5).unwrap();
        assert!((q - 0.5 * 7.0 * values[2]).abs() <= 1e-12 * q);
        assert!((bound - q).abs() <= 1e-12 * q);
        assert_eq!(
            harvested_power(&ch, &sol, &xi, 0, 7.0, 1.0, 0.5).unwrap(),
            0.0
        );
        let expected = harvested_power_expected(&ch, &sol, 0, 7.0, 0.25, 0.5).unwrap();
        let hv = ch.get(0, 0) * &sol.v[0];
        assert!((expected - 0.75 * 0.5 * 7.0 * hv.norm_squared()).abs() <= 1e-12 * expected);
    }

    #[test]
    fn zero_channels_give_zero_bound() {
        let ch = ChannelSet::from_matrices(vec![vec![DMatrix::zeros(2, 2); 2]; 2], 0).unwrap();
        assert_eq!(q_upper_bound(&ch, 1, 3.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn prr_ratio_and_zeta_linearity() {
        assert_eq!(ratio_or_infinity(2.0, 4.0), 0.5);
        assert_eq!(ratio_or_infinity(2.0, 0.0), f64::INFINITY);
        let (cfg, ch, sol, xi) = aligned_slot(6, 1);
        for k in 0..cfg.users {
            let a = prr(&ch, &sol, &xi, k, cfg.tx_power, 0.25).unwrap();
            let b = prr(&ch, &sol, &xi, k, cfg.tx_power, 0.5).unwrap();
            assert!((b - 2.0 * a).abs() <= 1e-12 * b);
        }
        let h = DMatrix::<Complex64>::identity(2, 2);
        let (ch, sol) = single(h, unit(2, 0), unit(2, 1));
        assert_eq!(
            prr(&ch, &sol, &SymbolVector::ones(1), 0, 1.0, 0.5).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn monotone_in_rho() {
        let (cfg, ch, sol, xi) = aligned_slot(8, 0);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        for k in 0..cfg.users {
            for w in grid.windows(2) {
                let r0 = rate_id(&ch, &sol, k, cfg.tx_power, w[0]).unwrap();
                let r1 = rate_id(&ch, &sol, k, cfg.tx_power, w[1]).unwrap();
                assert!(r1 > r0);
                let q0 = harvested_power(&ch, &sol, &xi, k, cfg.tx_power, w[0], cfg.zeta).unwrap();
                let q1 = harvested_power(&ch, &sol, &xi, k, cfg.tx_power, w[1], cfg.zeta).unwrap();
                assert!(q1 < q0);
            }
        }
    }

    #[test]
    fn slot_metrics_invariants() {
        for slot in 0..10 {
            let (cfg, ch, sol, xi) = aligned_slot(3, slot);
            for mode in [PowerMode::Instantaneous, PowerMode::Expected] {
                let m = SlotMetrics::compute(&ch, &sol, &xi, &cfg, mode).unwrap();
                assert!(m.zero_rate_users().is_empty());
                for k in 0..m.users() {
                    assert!(m.rate_full[k] >= 0.0);
                    assert!(m.power_full[k] >= 0.0 && m.power_full[k] <= m.q_upper[k]);
                    assert!((0.0..=1.0).contains(&m.cos_delta[k]));
                    assert_eq!(m.prr[k], m.power_full[k] / m.rate_full[k]);
                }
            }
            let m = SlotMetrics::compute(&ch, &sol, &xi, &cfg, PowerMode::Instantaneous).unwrap();
            for k in 0..cfg.users {
                let q = harvested_power(&ch, &sol, &xi, k, cfg.tx_power, 0.0, cfg.zeta).unwrap();
                assert!((m.power_full[k] - q).abs() <= 1e-12 * q);
            }
        }
    }
}
