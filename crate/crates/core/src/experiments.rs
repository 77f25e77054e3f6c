//! Monte Carlo experiments producing CSV-ready rows.
//!
//! Every experiment draws `slots` block-fading slots from `seed`, aligns each
//! one at unit transmit power and keeps the slots whose alignment converged.
//! The transmit power is then calibrated on those same slots so the mean
//! received SNR `P_t E|u^H h v|^2` hits `snr_db`. Slots are solved in parallel
//! and every average is accumulated in slot order, so results do not depend on
//! the thread count.

use rayon::prelude::*;

use crate::allocation::{solve_pso_pa_inputs, PaInputs, PaOptions};
use crate::channel::{draw_channel_set, draw_symbols, ChannelSet, NetworkConfig, SymbolVector};
use crate::error::{Error, Result};
use crate::ia::{check_feasibility, solve_minil, IaOptions, IaSolution};
use crate::metrics::{effective_gain, PowerMode, SlotMetrics};
use crate::report::{format_sig9, CsvRecord};
use crate::selection::{prrs_select, rrs_select, SelectionState, SlotOutcome};
use crate::splitting::{pso_solve, RequirementWeights};

/// Per-user weights of the per-user splitting figure.
pub const PSO_PROFILE_ALPHA: [f64; 5] = [0.6, 0.8, 0.95, 0.975, 0.99];
/// Per-user weights of the power-allocation profile figure.
pub const PA_PROFILE_ALPHA: [f64; 5] = [0.05, 0.2, 0.35, 0.5, 0.65];

/// `n` evenly spaced points on `[0, 1]`.
pub fn alpha_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// The swept parameter of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Zero-based users whose harvested power is reported per slot.
    Users(Vec<usize>),
    /// Numbers of information-decoding users.
    IdUsers(Vec<usize>),
    /// Weights applied uniformly to every user, one point per value.
    Alpha(Vec<f64>),
    /// One weight per user.
    AlphaProfile(Vec<f64>),
    /// Weight grid for the splitting curves and ID counts for the selection
    /// curves of the power-rate region.
    Region {
        alpha: Vec<f64>,
        id_users: Vec<usize>,
    },
}

impl Sweep {
    fn is_empty(&self) -> bool {
        match self {
            Sweep::Users(v) | Sweep::IdUsers(v) => v.is_empty(),
            Sweep::Alpha(a) | Sweep::AlphaProfile(a) => a.is_empty(),
            Sweep::Region { alpha, id_users } => alpha.is_empty() && id_users.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    /// Network shape; its `tx_power` is replaced by the calibrated value.
    pub cfg: NetworkConfig,
    pub slots: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub sweep: Sweep,
    pub mode: PowerMode,
    pub ia: IaOptions,
    pub pa: PaOptions,
}

impl ExperimentSpec {
    pub fn new(name: &str, cfg: NetworkConfig, sweep: Sweep) -> Self {
        Self {
            name: name.to_string(),
            cfg,
            slots: 5000,
            seed: 0,
            snr_db: 10.0,
            sweep,
            mode: PowerMode::Instantaneous,
            ia: IaOptions::default(),
            pa: PaOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.slots == 0 {
            return Err(Error::Config("slots must be at least 1".into()));
        }
        if self.sweep.is_empty() {
            return Err(Error::Config("empty sweep".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config(format!(
                "snr_db must be finite, got {}",
                self.snr_db
            )));
        }
        let users = self.cfg.users;
        let check_alpha = |a: &[f64]| -> Result<()> {
            match a.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                Some(&x) => Err(Error::Domain {
                    value: x,
                    domain: "alpha in [0, 1]",
                }),
                None => Ok(()),
            }
        };
        let check_ids = |ids: &[usize]| -> Result<()> {
            match ids.iter().find(|&&n| n > users) {
                Some(&n) => Err(Error::Selection(format!(
                    "{n} ID users with only {users} users"
                ))),
                None => Ok(()),
            }
        };
        match &self.sweep {
            Sweep::Users(ks) => {
                if let Some(&k) = ks.iter().find(|&&k| k >= users) {
                    return Err(Error::IndexOutOfRange { index: k, users });
                }
            }
            Sweep::IdUsers(ids) => check_ids(ids)?,
            Sweep::Alpha(a) => check_alpha(a)?,
            Sweep::AlphaProfile(a) => {
                if a.len() != users {
                    return Err(Error::Dimension(format!(
                        "{} weights for {users} users",
                        a.len()
                    )));
                }
                check_alpha(a)?;
            }
            Sweep::Region { alpha, id_users } => {
                check_alpha(alpha)?;
                check_ids(id_users)?;
            }
        }
        Ok(())
    }
}

/// One aligned slot at unit transmit power.
#[derive(Debug, Clone)]
pub struct SlotData {
    pub slot: u64,
    pub channels: ChannelSet,
    pub ia: IaSolution,
    pub symbols: SymbolVector,
}

/// The converged slots of a run and their mean effective gain.
#[derive(Debug, Clone)]
pub struct PreparedSlots {
    /// Network shape at unit transmit power.
    pub cfg: NetworkConfig,
    pub slots: Vec<SlotData>,
    pub attempted: usize,
    /// Mean of `|u^H h v|^2` over users and kept slots.
    pub mean_gain: f64,
}

impl PreparedSlots {
    /// Keeps the converged slots of `solved`, which must be aligned at unit
    /// transmit power for `cfg`.
    pub fn from_solved(cfg: &NetworkConfig, solved: Vec<SlotData>) -> Result<Self> {
        let unit = cfg.with_tx_power(1.0);
        let attempted = solved.len();
        let slots: Vec<SlotData> = solved.into_iter().filter(|s| s.ia.converged).collect();
        if slots.is_empty() {
            return Err(Error::Config(format!(
                "alignment converged on none of {attempted} slots"
            )));
        }
        let mut total = 0.0;
        for s in &slots {
            for k in 0..unit.users {
                total += effective_gain(&s.channels, &s.ia, k)?;
            }
        }
        let mean_gain = total / (slots.len() * unit.users) as f64;
        if mean_gain.is_nan() || mean_gain <= 0.0 {
            return Err(Error::NoSignal);
        }
        Ok(Self {
            cfg: unit,
            slots,
            attempted,
            mean_gain,
        })
    }

    pub fn unconverged(&self) -> usize {
        self.attempted - self.slots.len()
    }

    /// `P_t` giving a mean received SNR of `snr_db` on these slots.
    pub fn calibrated_power(&self, snr_db: f64) -> f64 {
        10f64.powf(snr_db / 10.0) / self.mean_gain
    }

    /// Slot metrics at transmit power `tx_power`, in slot order.
    pub fn metrics(&self, tx_power: f64, mode: PowerMode) -> Result<Vec<SlotMetrics>> {
        let cfg = self.cfg.with_tx_power(tx_power);
        self.slots
            .iter()
            .map(|s| SlotMetrics::compute(&s.channels, &s.ia, &s.symbols, &cfg, mode))
            .collect()
    }
}

/// Draws and aligns slots `0..slots` at unit transmit power, converged or not.
pub fn solve_slots(
    cfg: &NetworkConfig,
    seed: u64,
    slots: usize,
    ia: &IaOptions,
) -> Result<Vec<SlotData>> {
    cfg.validate()?;
    if !check_feasibility(cfg)? {
        return Err(Error::Infeasible {
            sum: cfg.tx_antennas + cfg.rx_antennas,
            needed: cfg.users + 1,
        });
    }
    let unit = cfg.with_tx_power(1.0);
    let ia = IaOptions {
        seed,
        record_history: false,
        ..*ia
    };
    (0..slots as u64)
        .into_par_iter()
        .map(|slot| {
            let channels = draw_channel_set(&unit, seed, slot)?;
            let sol = solve_minil(&channels, &unit, &ia)?;
            let symbols = draw_symbols(&unit, seed, slot)?;
            Ok(SlotData {
                slot,
                channels,
                ia: sol,
                symbols,
            })
        })
        .collect()
}

/// Draws and aligns slots `0..slots`, dropping those whose alignment did not
/// converge.
pub fn prepare_slots(
    cfg: &NetworkConfig,
    seed: u64,
    slots: usize,
    ia: &IaOptions,
) -> Result<PreparedSlots> {
    PreparedSlots::from_solved(cfg, solve_slots(cfg, seed, slots, ia)?)
}

/// Transmit power giving a mean received SNR of `snr_db`, estimated over the
/// converged slots among `slots` seeded draws.
pub fn calibrate_power(cfg: &NetworkConfig, snr_db: f64, seed: u64, slots: usize) -> Result<f64> {
    Ok(prepare_slots(cfg, seed, slots, &IaOptions::default())?.calibrated_power(snr_db))
}

fn mean(total: f64, n: usize) -> f64 {
    total / n as f64
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub snr_db: f64,
    pub slots: usize,
    pub converged_slots: usize,
    pub mean_gain: f64,
    pub tx_power: f64,
}

impl CsvRecord for CalibrationRow {
    fn header() -> &'static [&'static str] {
        &[
            "snr_db",
            "slots",
            "converged_slots",
            "mean_gain",
            "tx_power",
        ]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            format_sig9(self.snr_db),
            self.slots.to_string(),
            self.converged_slots.to_string(),
            format_sig9(self.mean_gain),
            format_sig9(self.tx_power),
        ]
    }
}

pub fn run_calibration(spec: &ExperimentSpec) -> Result<CalibrationRow> {
    spec.cfg.validate()?;
    if spec.slots == 0 {
        return Err(Error::Config("slots must be at least 1".into()));
    }
    let prep = prepare_slots(&spec.cfg, spec.seed, spec.slots, &spec.ia)?;
    Ok(CalibrationRow {
        snr_db: spec.snr_db,
        slots: prep.attempted,
        converged_slots: prep.slots.len(),
        mean_gain: prep.mean_gain,
        tx_power: prep.calibrated_power(spec.snr_db),
    })
}

/// Harvested power at `rho = 0` against its upper bound. `k` is one-based.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub slot: u64,
    pub k: usize,
    pub q: f64,
    pub q_upper: f64,
}

impl CsvRecord for BoundsRow {
    fn header() -> &'static [&'static str] {
        &["slot", "k", "q", "q_upper"]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.slot.to_string(),
            self.k.to_string(),
            format_sig9(self.q),
            format_sig9(self.q_upper),
        ]
    }
}

pub fn bounds_rows(
    prep: &PreparedSlots,
    tx_power: f64,
    users: &[usize],
    mode: PowerMode,
) -> Result<Vec<BoundsRow>> {
    let metrics = prep.metrics(tx_power, mode)?;
    let mut rows = Vec::with_capacity(metrics.len() * users.len());
    for (s, m) in prep.slots.iter().zip(&metrics) {
        for &k in users {
            if k >= m.users() {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    users: m.users(),
                });
            }
            rows.push(BoundsRow {
                slot: s.slot,
                k: k + 1,
                q: m.power_full[k],
                q_upper: m.q_upper[k],
            });
        }
    }
    Ok(rows)
}

pub fn run_bounds_experiment(spec: &ExperimentSpec) -> Result<Vec<BoundsRow>> {
    spec.validate()?;
    let Sweep::Users(users) = &spec.sweep else {
        return Err(Error::Config("bounds experiment needs a user sweep".into()));
    };
    let prep = prepare_slots(&spec.cfg, spec.seed, spec.slots, &spec.ia)?;
    bounds_rows(&prep, prep.calibrated_power(spec.snr_db), users, spec.mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionAlgorithm {
    RoundRobin,
    PrrRanked,
}

impl SelectionAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            SelectionAlgorithm::RoundRobin => "rrs",
            SelectionAlgorithm::PrrRanked => "prrs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub algorithm: SelectionAlgorithm,
    pub id_users: usize,
    pub eh_users: usize,
    pub mean_sum_rate: f64,
    pub mean_sum_power: f64,
    pub tx_power: f64,
}

impl SelectionRow {
    pub fn power_over_pt(&self) -> f64 {
        self.mean_sum_power / self.tx_power
    }
}

impl CsvRecord for SelectionRow {
    fn header() -> &'static [&'static str] {
        &[
            "algorithm",
            "id_users",
            "eh_users",
            "mean_sum_rate",
            "mean_sum_power",
            "power_over_pt",
        ]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.algorithm.name().to_string(),
            self.id_users.to_string(),
            self.eh_users.to_string(),
            format_sig9(self.mean_sum_rate),
            format_sig9(self.mean_sum_power),
            format_sig9(self.power_over_pt()),
        ]
    }
}

/// Mean outcome of one scheduler with `id_users` decoders per slot. With no
/// decoders left every user harvests.
pub fn selection_point(
    prep: &PreparedSlots,
    metrics: &[SlotMetrics],
    algorithm: SelectionAlgorithm,
    id_users: usize,
) -> Result<SelectionRow> {
    let users = prep.cfg.users;
    if id_users > users {
        return Err(Error::Selection(format!(
            "{id_users} ID users with only {users} users"
        )));
    }
    let l = users - id_users;
    let (mut rate, mut power) = (0.0, 0.0);
    for (i, m) in metrics.iter().enumerate() {
        let eh: Vec<usize> = if l == users {
            (0..users).collect()
        } else {
            match algorithm {
                SelectionAlgorithm::RoundRobin => {
                    rrs_select(SelectionState::after_slots(users, l, i as u64), users, l)?.0
                }
                SelectionAlgorithm::PrrRanked => prrs_select(&m.prr, l)?,
            }
        };
        let outcome = SlotOutcome::from_metrics(m, &eh)?;
        rate += outcome.sum_rate;
        power += outcome.sum_power;
    }
    let n = metrics.len();
    Ok(SelectionRow {
        algorithm,
        id_users,
        eh_users: l,
        mean_sum_rate: mean(rate, n),
        mean_sum_power: mean(power, n),
        tx_power: metrics.first().map_or(0.0, |m| m.tx_power),
    })
}

pub fn selection_rows(
    prep: &PreparedSlots,
    tx_power: f64,
    id_users: &[usize],
    mode: PowerMode,
) -> Result<Vec<SelectionRow>> {
    let metrics = prep.metrics(tx_power, mode)?;
    let mut rows = Vec::new();
    for algorithm in [
        SelectionAlgorithm::RoundRobin,
        SelectionAlgorithm::PrrRanked,
    ] {
        for &n in id_users {
            rows.push(selection_point(prep, &metrics, algorithm, n)?);
        }
    }
    Ok(rows)
}

pub fn run_selection_sweep(spec: &ExperimentSpec) -> Result<Vec<SelectionRow>> {
    spec.validate()?;
    let Sweep::IdUsers(ids) = &spec.sweep else {
        return Err(Error::Config("selection sweep needs ID-user counts".into()));
    };
    let prep = prepare_slots(&spec.cfg, spec.seed, spec.slots, &spec.ia)?;
    selection_rows(&prep, prep.calibrated_power(spec.snr_db), ids, spec.mode)
}

/// Per-user averages of one weight profile.
#[derive(Debug, Clone, PartialEq)]
pub struct UserMeans {
    pub rate: Vec<f64>,
    pub harvested: Vec<f64>,
    pub rho: Vec<f64>,
    /// Allocated transmit power; `P_t` for every user without allocation.
    pub power: Vec<f64>,
    /// `10 lg` of the mean of `P_k |u^H h v|^2` over users and slots.
    pub measured_snr_db: f64,
    /// Smallest per-slot excess of the allocated objective over the
    /// equal-power objective; infinite without allocation.
    pub worst_margin: f64,
    /// Slots where the allocation solver hit its iteration cap.
    pub unconverged: usize,
}

impl UserMeans {
    fn zeros(users: usize) -> Self {
        Self {
            rate: vec![0.0; users],
            harvested: vec![0.0; users],
            rho: vec![0.0; users],
            power: vec![0.0; users],
            measured_snr_db: 0.0,
            worst_margin: f64::INFINITY,
            unconverged: 0,
        }
    }

    fn scale(&mut self, n: usize) {
        for v in [
            &mut self.rate,
            &mut self.harvested,
            &mut self.rho,
            &mut self.power,
        ] {
            v.iter_mut().for_each(|x| *x /= n as f64);
        }
    }

    pub fn sum_rate(&self) -> f64 {
        self.rate.iter().sum()
    }

    pub fn sum_harvested(&self) -> f64 {
        self.harvested.iter().sum()
    }

    pub fn mean_rho(&self) -> f64 {
        self.rho.iter().sum::<f64>() / self.rho.len() as f64
    }
}

/// Closed-form splitting at equal power `tx_power`.
pub fn pso_means(metrics: &[SlotMetrics], weights: &RequirementWeights) -> Result<UserMeans> {
    let users = weights.users();
    let mut acc = UserMeans::zeros(users);
    let mut snr = 0.0;
    for m in metrics {
        let profile = pso_solve(m, weights)?;
        for k in 0..users {
            let rho = profile.rho[k];
            acc.rate[k] += (rho * m.tx_power * m.gain[k]).ln_1p() / std::f64::consts::LN_2;
            acc.harvested[k] += (1.0 - rho) * m.zeta * m.tx_power * m.field[k];
            acc.rho[k] += rho;
            acc.power[k] += m.tx_power;
            snr += m.tx_power * m.gain[k];
        }
    }
    acc.scale(metrics.len());
    acc.measured_snr_db = db(snr / (metrics.len() * users) as f64);
    Ok(acc)
}

/// Joint splitting and allocation under the budget `K tx_power`.
pub fn pso_pa_means(
    prep: &PreparedSlots,
    tx_power: f64,
    weights: &RequirementWeights,
    mode: PowerMode,
    opts: &PaOptions,
) -> Result<UserMeans> {
    let users = prep.cfg.users;
    let zeta = prep.cfg.zeta;
    let per_slot: Vec<UserMeans> = prep
        .slots
        .par_iter()
        .map(|s| {
            let inputs = PaInputs::from_slot(&s.channels, &s.ia, &s.symbols, mode)?;
            let sol = solve_pso_pa_inputs(&inputs, weights, zeta, tx_power, opts, s.slot)?;
            let amplitudes =
                nalgebra::DVector::from_iterator(users, sol.power.p.iter().map(|p| p.sqrt()));
            let field = inputs.field_energies(&amplitudes);
            let mut out = UserMeans::zeros(users);
            let mut snr = 0.0;
            for k in 0..users {
                let (p, rho) = (sol.power.p[k], sol.split.rho[k]);
                out.rate[k] = (rho * p * inputs.gain[k]).ln_1p() / std::f64::consts::LN_2;
                out.harvested[k] = (1.0 - rho) * zeta * field[k];
                out.rho[k] = rho;
                out.power[k] = p;
                snr += p * inputs.gain[k];
            }
            out.measured_snr_db = snr;
            out.worst_margin = sol.objective - sol.baseline_objective;
            out.unconverged = usize::from(!sol.converged);
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = UserMeans::zeros(users);
    let mut snr = 0.0;
    for s in &per_slot {
        for k in 0..users {
            acc.rate[k] += s.rate[k];
            acc.harvested[k] += s.harvested[k];
            acc.rho[k] += s.rho[k];
            acc.power[k] += s.power[k];
        }
        snr += s.measured_snr_db;
        acc.worst_margin = acc.worst_margin.min(s.worst_margin);
        acc.unconverged += s.unconverged;
    }
    acc.scale(per_slot.len());
    acc.measured_snr_db = db(snr / (per_slot.len() * users) as f64);
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoRow {
    pub alpha: f64,
    pub mean_sum_rate: f64,
    pub mean_sum_power: f64,
    pub mean_rho: f64,
}

impl CsvRecord for PsoRow {
    fn header() -> &'static [&'static str] {
        &["alpha", "mean_sum_rate", "mean_sum_power", "mean_rho"]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            format_sig9(self.alpha),
            format_sig9(self.mean_sum_rate),
            format_sig9(self.mean_sum_power),
            format_sig9(self.mean_rho),
        ]
    }
}

/// Per-user averages; `k` is one-based.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRow {
    pub k: usize,
    pub alpha_k: f64,
    pub mean_power_allocated: f64,
    pub mean_rate: f64,
    pub mean_harvested: f64,
    pub mean_rho: f64,
}

impl CsvRecord for UserRow {
    fn header() -> &'static [&'static str] {
        &[
            "k",
            "alpha_k",
            "mean_power_allocated",
            "mean_rate",
            "mean_harvested",
            "mean_rho",
        ]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.k.to_string(),
            format_sig9(self.alpha_k),
            format_sig9(self.mean_power_allocated),
            format_sig9(self.mean_rate),
            format_sig9(self.mean_harvested),
            format_sig9(self.mean_rho),
        ]
    }
}

fn user_rows(alpha: &[f64], means: &UserMeans) -> Vec<UserRow> {
    (0..alpha.len())
        .map(|k| UserRow {
            k: k + 1,
            alpha_k: alpha[k],
            mean_power_allocated: means.power[k],
            mean_rate: means.rate[k],
            mean_harvested: means.harvested[k],
            mean_rho: means.rho[k],
        })
        .collect()
}

/// Output of the splitting sweep: one row per uniform weight, or one row per
/// user for a weight profile.
#[derive(Debug, Clone, PartialEq)]
pub enum PsoRows {
    Uniform(Vec<PsoRow>),
    PerUser(Vec<UserRow>),
}

pub fn pso_rows(metrics: &[SlotMetrics], users: usize, alphas: &[f64]) -> Result<Vec<PsoRow>> {
    alphas
        .iter()
        .map(|&alpha| {
            let means = pso_means(metrics, &RequirementWeights::uniform(alpha, users)?)?;
            Ok(PsoRow {
                alpha,
                mean_sum_rate: means.sum_rate(),
                mean_sum_power: means.sum_harvested(),
                mean_rho: means.mean_rho(),
            })
        })
        .collect()
}

pub fn run_pso_alpha_sweep(spec: &ExperimentSpec) -> Result<PsoRows> {
    spec.validate()?;
    let prep = prepare_slots(&spec.cfg, spec.seed, spec.slots, &spec.ia)?;
    let metrics = prep.metrics(prep.calibrated_power(spec.snr_db), spec.mode)?;
    match &spec.sweep {
        Sweep::Alpha(alphas) => Ok(PsoRows::Uniform(pso_rows(
            &metrics,
            spec.cfg.users,
            alphas,
        )?)),
        Sweep::AlphaProfile(alpha) => {
            let weights = RequirementWeights::from_alpha(alpha.clone())?;
            Ok(PsoRows::PerUser(user_rows(
                alpha,
                &pso_means(&metrics, &weights)?,
            )))
        }
        _ => Err(Error::Config("splitting sweep needs alpha values".into())),
    }
}

pub fn run_pa_profile(spec: &ExperimentSpec) -> Result<Vec<UserRow>> {
    spec.validate()?;
    let Sweep::AlphaProfile(alpha) = &spec.sweep else {
        return Err(Error::Config(
            "allocation profile needs one alpha per user".into(),
        ));
    };
    let prep = prepare_slots(&spec.cfg, spec.seed, spec.slots, &spec.ia)?;
    let weights = RequirementWeights::from_alpha(alpha.clone())?;
    let means = pso_pa_means(
        &prep,
        prep.calibrated_power(spec.snr_db),
        &weights,
        spec.mode,
        &spec.pa,
    )?;
    Ok(user_rows(alpha, &means))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionMethod {
    Rrs,
    Prrs,
    Pso,
    PsoPa,
}

impl RegionMethod {
    pub fn name(self) -> &'static str {
        match self {
            RegionMethod::Rrs => "rrs",
            RegionMethod::Prrs => "prrs",
            RegionMethod::Pso => "pso",
            RegionMethod::PsoPa => "pso_pa",
        }
    }
}

/// One point of a power-rate curve. `param` is the ID-user count for the
/// schedulers and the uniform weight for the splitting methods.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRow {
    pub method: RegionMethod,
    pub param: f64,
    pub mean_sum_power: f64,
    pub mean_sum_rate: f64,
    pub measured_snr_db: f64,
}

impl CsvRecord for RegionRow {
    fn header() -> &'static [&'static str] {
        &[
            "method",
            "param",
            "mean_sum_power",
            "mean_sum_rate",
            "measured_snr_db",
        ]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.method.name().to_string(),
            format_sig9(self.param),
            format_sig9(self.mean_sum_power),
            format_sig9(self.mean_sum_rate),
            format_sig9(self.measured_snr_db),
        ]
    }
}

pub fn region_rows(
    prep: &PreparedSlots,
    tx_power: f64,
    alphas: &[f64],
    id_users: &[usize],
    mode: PowerMode,
    pa: &PaOptions,
) -> Result<Vec<RegionRow>> {
    let users = prep.cfg.users;
    let metrics = prep.metrics(tx_power, mode)?;
    let equal_snr = db(tx_power * prep.mean_gain);
    let mut rows = Vec::new();
    for (method, algorithm) in [
        (RegionMethod::Rrs, SelectionAlgorithm::RoundRobin),
        (RegionMethod::Prrs, SelectionAlgorithm::PrrRanked),
    ] {
        for &n in id_users {
            let point = selection_point(prep, &metrics, algorithm, n)?;
            rows.push(RegionRow {
                method,
                param: n as f64,
                mean_sum_power: point.mean_sum_power,
                mean_sum_rate: point.mean_sum_rate,
                measured_snr_db: equal_snr,
            });
        }
    }
    for &alpha in alphas {
        let means = pso_means(&metrics, &RequirementWeights::uniform(alpha, users)?)?;
        rows.push(RegionRow {
            method: RegionMethod::Pso,
            param: alpha,
            mean_sum_power: means.sum_harvested(),
            mean_sum_rate: means.sum_rate(),
            measured_snr_db: means.measured_snr_db,
        });
    }
    for &alpha in alphas {
        let weights = RequirementWeights::uniform(alpha, users)?;
        let means = pso_pa_means(prep, tx_power, &weights, mode, pa)?;
        rows.push(RegionRow {
            method: RegionMethod::PsoPa,
            param: alpha,
            mean_sum_power: means.sum_harvested(),
            mean_sum_rate: means.sum_rate(),
            measured_snr_db: means.measured_snr_db,
        });
    }
    Ok(rows)
}

pub fn run_power_rate_region(spec: &ExperimentSpec) -> Result<Vec<RegionRow>> {
    spec.validate()?;
    let Sweep::Region { alpha, id_users } = &spec.sweep else {
        return Err(Error::Config(
            "power-rate region needs a region sweep".into(),
        ));
    };
    let prep = prepare_slots(&spec.cfg, spec.seed, spec.slots, &spec.ia)?;
    region_rows(
        &prep,
        prep.calibrated_power(spec.snr_db),
        alpha,
        id_users,
        spec.mode,
        &spec.pa,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_prep() -> PreparedSlots {
        prepare_slots(&NetworkConfig::default(), 11, 12, &IaOptions::default()).unwrap()
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(alpha_grid(21).len(), 21);
        assert_eq!(alpha_grid(21)[20], 1.0);
        assert_eq!(alpha_grid(3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn calibration_hits_target_on_its_own_slots() {
        let prep = small_prep();
        let p = prep.calibrated_power(10.0);
        assert!((p * prep.mean_gain - 10.0).abs() < 1e-9);
        let doubled = prep.calibrated_power(10.0 + 10.0 * 2f64.log10());
        assert!((doubled / p - 2.0).abs() < 1e-12);
        assert!((prep.calibrated_power(0.0) * prep.mean_gain - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selection_extremes() {
        let prep = small_prep();
        let rows = selection_rows(&prep, 50.0, &[0, 5], PowerMode::Instantaneous).unwrap();
        for r in &rows {
            if r.id_users == 0 {
                assert_eq!(r.mean_sum_rate, 0.0);
                assert!(r.mean_sum_power > 0.0);
            } else {
                assert_eq!(r.mean_sum_power, 0.0);
                assert!(r.mean_sum_rate > 0.0);
            }
        }
    }

    #[test]
    fn alpha_one_splits_fully_to_decoding() {
        let prep = small_prep();
        let metrics = prep.metrics(50.0, PowerMode::Instantaneous).unwrap();
        let rows = pso_rows(&metrics, 5, &[0.0, 1.0]).unwrap();
        assert_eq!(rows[0].mean_rho, 0.0);
        assert_eq!(rows[0].mean_sum_rate, 0.0);
        assert_eq!(rows[1].mean_rho, 1.0);
        assert_eq!(rows[1].mean_sum_power, 0.0);
    }

    #[test]
    fn spec_validation() {
        let cfg = NetworkConfig::default();
        let mut spec = ExperimentSpec::new("x", cfg, Sweep::Alpha(vec![]));
        assert!(spec.validate().is_err());
        spec.sweep = Sweep::AlphaProfile(vec![0.5; 4]);
        assert!(spec.validate().is_err());
        spec.sweep = Sweep::IdUsers(vec![6]);
        assert!(spec.validate().is_err());
        spec.sweep = Sweep::Users(vec![0]);
        spec.slots = 0;
        assert!(spec.validate().is_err());
    }
}
