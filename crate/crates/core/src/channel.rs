//! Network configuration and seeded block-fading channel / symbol generation.
//!
//! Every random object is a pure function of `(seed, slot, stream)`: the
//! ChaCha key is built from the seed and the slot index and the ChaCha stream
//! id carries a label, so adding a new stream never perturbs existing ones.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Stream label for channel matrices.
pub const STREAM_CHANNEL: u64 = 1;
/// Stream label for transmit symbols.
pub const STREAM_SYMBOLS: u64 = 2;
/// Stream label for IA precoder initialization.
pub const STREAM_IA_INIT: u64 = 3;
/// Stream label for optimizer multi-start points.
pub const STREAM_RESTARTS: u64 = 4;

/// Static parameters of a symmetric K-user MIMO interference network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    /// Number of transmitter/receiver pairs.
    pub users: usize,
    /// Transmit antennas per user.
    pub tx_antennas: usize,
    /// Receive antennas per user.
    pub rx_antennas: usize,
    /// Streams per user. Only `1` is supported by the SWIPT operations.
    pub streams: usize,
    /// Variance of every complex channel entry.
    pub path_gain: f64,
    /// Energy-conversion efficiency of the harvester.
    pub zeta: f64,
    /// Average per-user transmit power in watts.
    pub tx_power: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            users: 5,
            tx_antennas: 3,
            rx_antennas: 3,
            streams: 1,
            path_gain: 0.1,
            zeta: 0.5,
            tx_power: 1.0,
        }
    }
}

impl NetworkConfig {
    pub fn new(users: usize, tx_antennas: usize, rx_antennas: usize) -> Self {
        Self {
            users,
            tx_antennas,
            rx_antennas,
            ..Self::default()
        }
    }

    pub fn with_tx_power(mut self, tx_power: f64) -> Self {
        self.tx_power = tx_power;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.tx_antennas == 0 || self.rx_antennas == 0 || self.streams == 0 {
            return Err(Error::Config(
                "users, antenna counts and streams must be positive".into(),
            ));
        }
        if !(self.path_gain > 0.0 && self.path_gain <= 1.0) {
            return Err(Error::Config(format!(
                "path gain {} not in (0, 1]",
                self.path_gain
            )));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::Config(format!("zeta {} not in (0, 1)", self.zeta)));
        }
        if !(self.tx_power > 0.0 && self.tx_power.is_finite()) {
            return Err(Error::Config(format!(
                "transmit power {} must be positive",
                self.tx_power
            )));
        }
        Ok(())
    }

    /// Total transmit-power budget `K * P_t` shared under power allocation.
    pub fn budget(&self) -> f64 {
        self.users as f64 * self.tx_power
    }
}

/// One block-fading realization: `h[k][j]` is the `N x M` channel from
/// transmitter `j` to receiver `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    h: Vec<Vec<DMatrix<Complex64>>>,
    pub slot: u64,
}

impl ChannelSet {
    /// Builds a channel set from explicit matrices, checking shapes and finiteness.
    pub fn from_matrices(h: Vec<Vec<DMatrix<Complex64>>>, slot: u64) -> Result<Self> {
        let users = h.len();
        if users == 0 {
            return Err(Error::Dimension("empty channel set".into()));
        }
        let shape = h[0]
            .first()
            .map(|m| m.shape())
            .ok_or_else(|| Error::Dimension("empty channel row".into()))?;
        for row in &h {
            if row.len() != users {
                return Err(Error::Dimension(format!(
                    "channel row has {} entries, expected {users}",
                    row.len()
                )));
            }
            for m in row {
                if m.shape() != shape {
                    return Err(Error::Dimension(format!(
                        "channel matrix shape {:?} differs from {:?}",
                        m.shape(),
                        shape
                    )));
                }
                if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::NonFinite("channel matrix"));
                }
            }
        }
        Ok(Self { h, slot })
    }

    pub fn users(&self) -> usize {
        self.h.len()
    }

    /// `(N, M)`.
    pub fn shape(&self) -> (usize, usize) {
        self.h[0][0].shape()
    }

    /// Channel from transmitter `j` to receiver `k` (zero-based).
    pub fn get(&self, k: usize, j: usize) -> &DMatrix<Complex64> {
        &self.h[k][j]
    }

    pub fn matrices(&self) -> &[Vec<DMatrix<Complex64>>] {
        &self.h
    }

    /// Checks the set against a configuration's user and antenna counts.
    pub fn check_config(&self, cfg: &NetworkConfig) -> Result<()> {
        if self.users() != cfg.users || self.shape() != (cfg.rx_antennas, cfg.tx_antennas) {
            return Err(Error::Dimension(format!(
                "channel set is {} users of {:?}, configuration expects {} users of ({}, {})",
                self.users(),
                self.shape(),
                cfg.users,
                cfg.rx_antennas,
                cfg.tx_antennas
            )));
        }
        Ok(())
    }
}

/// Normalized transmit symbols `xi[j] = x[j] / sqrt(P_t)` for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector {
    pub xi: Vec<Complex64>,
}

impl SymbolVector {
    /// All-ones symbols, handy for deterministic tests.
    pub fn ones(users: usize) -> Self {
        Self {
            xi: vec![Complex64::new(1.0, 0.0); users],
        }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// Deterministic generator for `(seed, slot, stream)`.
pub fn slot_rng(seed: u64, slot: u64, stream: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&slot.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sigma = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(sigma * re, sigma * im)
}

/// Random complex vector with i.i.d. `CN(0, 1)` entries normalized to unit length.
pub fn random_unit_vector<R: rand::Rng + ?Sized>(rng: &mut R, len: usize) -> DVector<Complex64> {
    loop {
        let v = DVector::from_fn(len, |_, _| complex_gaussian(rng, 1.0));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// Draws the `K x K` grid of `N x M` channels with i.i.d. `CN(0, a_p)` entries.
pub fn draw_channel_set(cfg: &NetworkConfig, seed: u64, slot: u64) -> Result<ChannelSet> {
    cfg.validate()?;
    let mut rng = slot_rng(seed, slot, STREAM_CHANNEL);
    let (n, m) = (cfg.rx_antennas, cfg.tx_antennas);
    let h = (0..cfg.users)
        .map(|_| {
            (0..cfg.users)
                .map(|_| DMatrix::from_fn(n, m, |_, _| complex_gaussian(&mut rng, cfg.path_gain)))
                .collect()
        })
        .collect();
    Ok(ChannelSet { h, slot })
}

/// Draws one `CN(0, 1)` normalized symbol per user.
pub fn draw_symbols(cfg: &NetworkConfig, seed: u64, slot: u64) -> Result<SymbolVector> {
    cfg.validate()?;
    let mut rng = slot_rng(seed, slot, STREAM_SYMBOLS);
    let xi = (0..cfg.users)
        .map(|_| complex_gaussian(&mut rng, 1.0))
        .collect();
    Ok(SymbolVector { xi })
}
