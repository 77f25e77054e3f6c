//! Interference alignment by iterative leakage minimization (MinIL).
//!
//! Alternates between the forward network, where each receiver picks the
//! least-interfered direction of its interference covariance, and the
//! reciprocal network, where the transmitters do the same with the channels
//! `h[k][j]^H`. Each half-step minimizes the same total leakage over one set
//! of vectors, so the leakage never increases.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{random_unit_vector, slot_rng, ChannelSet, NetworkConfig, STREAM_IA_INIT};
use crate::error::{Error, Result};
use crate::linalg::{inner, min_eigenvector};

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IaOptions {
    pub max_iters: usize,
    pub leak_tol: f64,
    pub seed: u64,
    /// Keep the leakage after every full iteration in [`IaSolution::history`].
    pub record_history: bool,
}

impl Default for IaOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            leak_tol: 1e-8,
            seed: 0,
            record_history: false,
        }
    }
}

/// Unit-norm precoders `v[k]` (length M) and combiners `u[k]` (length N) for
/// single-stream users.
#[derive(Debug, Clone, PartialEq)]
pub struct IaSolution {
    pub v: Vec<DVector<Complex64>>,
    pub u: Vec<DVector<Complex64>>,
    pub leakage: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

impl IaSolution {
    pub fn users(&self) -> usize {
        self.v.len()
    }

    /// Largest deviation of `|v|` or `|u|` from one across all users.
    pub fn unitarity_error(&self) -> f64 {
        self.v
            .iter()
            .chain(self.u.iter())
            .map(|x| (inner(x, x).re - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// IA feasibility for single-stream symmetric networks: `M + N >= K + 1`.
pub fn check_feasibility(cfg: &NetworkConfig) -> Result<bool> {
    if cfg.streams != 1 {
        return Err(Error::Unsupported(format!(
            "{} streams per user; only single-stream alignment is supported",
            cfg.streams
        )));
    }
    Ok(cfg.tx_antennas + cfg.rx_antennas > cfg.users)
}

fn interference_covariance(
    dim: usize,
    terms: impl Iterator<Item = DVector<Complex64>>,
    weight: f64,
) -> DMatrix<Complex64> {
    let mut q = DMatrix::<Complex64>::zeros(dim, dim);
    for x in terms {
        q.ger(
            Complex64::new(weight, 0.0),
            &x,
            &x.conjugate(),
            Complex64::new(1.0, 0.0),
        );
    }
    q
}

fn leakage_of(
    ch: &ChannelSet,
    v: &[DVector<Complex64>],
    u: &[DVector<Complex64>],
    power: f64,
) -> f64 {
    let k_users = ch.users();
    let mut total = 0.0;
    for k in 0..k_users {
        for j in 0..k_users {
            if j != k {
                let hv = ch.get(k, j) * &v[j];
                total += inner(&u[k], &hv).norm_sqr();
            }
        }
    }
    power * total
}

/// Runs MinIL from seeded random unit precoders.
pub fn solve_minil(ch: &ChannelSet, cfg: &NetworkConfig, opts: &IaOptions) -> Result<IaSolution> {
    cfg.validate()?;
    if !check_feasibility(cfg)? {
        return Err(Error::Infeasible {
            sum: cfg.tx_antennas + cfg.rx_antennas,
            needed: cfg.users + 1,
        });
    }
    ch.check_config(cfg)?;
    let k_users = cfg.users;
    let (n, m) = (cfg.rx_antennas, cfg.tx_antennas);
    let power = cfg.tx_power / cfg.streams as f64;

    let mut rng = slot_rng(opts.seed, ch.slot, STREAM_IA_INIT);
    let mut v: Vec<_> = (0..k_users)
        .map(|_| random_unit_vector(&mut rng, m))
        .collect();
    let mut u: Vec<DVector<Complex64>> = vec![DVector::zeros(n); k_users];
    let reverse: Vec<Vec<DMatrix<Complex64>>> = (0..k_users)
        .map(|k| (0..k_users).map(|j| ch.get(k, j).adjoint()).collect())
        .collect();

    let mut history = Vec::new();
    let mut leakage = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters.max(1) {
        for k in 0..k_users {
            let q = interference_covariance(
                n,
                (0..k_users)
                    .filter(|&j| j != k)
                    .map(|j| ch.get(k, j) * &v[j]),
                power,
            );
            u[k] = min_eigenvector(&q);
        }
        for j in 0..k_users {
            let q = interference_covariance(
                m,
                (0..k_users)
                    .filter(|&k| k != j)
                    .map(|k| &reverse[k][j] * &u[k]),
                power,
            );
            v[j] = min_eigenvector(&q);
        }
        iterations += 1;
        leakage = leakage_of(ch, &v, &u, power);
        if !leakage.is_finite() {
            return Err(Error::NonFinite("interference leakage"));
        }
        if opts.record_history {
            history.push(leakage);
        }
        if leakage <= opts.leak_tol {
            converged = true;
            break;
        }
    }

    Ok(IaSolution {
        v,
        u,
        leakage,
        iterations,
        converged,
        history,
    })
}

/// Total leakage `sum_k sum_{j != k} (P_t / d) |u[k]^H h[k][j] v[j]|^2`.
pub fn interference_leakage(ch: &ChannelSet, sol: &IaSolution, cfg: &NetworkConfig) -> Result<f64> {
    check_solution_shape(ch, sol)?;
    Ok(leakage_of(
        ch,
        &sol.v,
        &sol.u,
        cfg.tx_power / cfg.streams as f64,
    ))
}

/// Scalar effective channel `u[k]^H h[k][k] v[k]` (zero-based `k`).
pub fn effective_channel(ch: &ChannelSet, sol: &IaSolution, k: usize) -> Result<Complex64> {
    check_solution_shape(ch, sol)?;
    if k >= ch.users() {
        return Err(Error::IndexOutOfRange {
            index: k,
            users: ch.users(),
        });
    }
    Ok(inner(&sol.u[k], &(ch.get(k, k) * &sol.v[k])))
}

pub(crate) fn check_solution_shape(ch: &ChannelSet, sol: &IaSolution) -> Result<()> {
    let (n, m) = ch.shape();
    if sol.v.len() != ch.users() || sol.u.len() != ch.users() {
        return Err(Error::Dimension(format!(
            "solution has {} precoders and {} combiners for {} users",
            sol.v.len(),
            sol.u.len(),
            ch.users()
        )));
    }
    if sol.v.iter().any(|x| x.len() != m) || sol.u.iter().any(|x| x.len() != n) {
        return Err(Error::Dimension(format!(
            "precoder/combiner lengths do not match channel shape ({n}, {m})"
        )));
    }
    Ok(())
}
