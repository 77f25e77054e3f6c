//! Transmit-power allocation under the sum budget `sum_k P_k <= K P_t`.
//!
//! Three solvers live here:
//!
//! * [`water_filling`] for the pure-rate case (`alpha = 1` for every user);
//! * [`solve_eh_only_pa`] for the pure-harvesting case (`alpha = 0`), a
//!   non-negative quadratic maximization in `s = sqrt(P)`;
//! * [`solve_pso_pa`] for the joint splitting/allocation problem with arbitrary
//!   weights.
//!
//! For a fixed power vector the optimal splitting ratios are the per-user
//! closed form with `P_k` in place of `P_t`, so the joint solver maximizes the
//! resulting function of `P` alone. The search runs a log-barrier interior
//! ascent over `P` with a decreasing barrier weight, then polishes with a
//! projected spectral-gradient ascent over `s = sqrt(P)`, where the harvested
//! energy is smooth at `P_j = 0`. Several seeded starting points are tried and
//! the best result is kept. The equal-power point is always evaluated, so the
//! result never falls below it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::channel::{slot_rng, ChannelSet, NetworkConfig, SymbolVector, STREAM_RESTARTS};
use crate::error::{Error, Result};
use crate::ia::{check_solution_shape, IaSolution};
use crate::linalg::inner;
use crate::metrics::{effective_gain, PowerMode};
use crate::splitting::{clamp_split, user_objective, RequirementWeights, SplitProfile};

const LN_2: f64 = std::f64::consts::LN_2;
/// Inner ascent steps per barrier weight; the polish phase finishes the job.
const BARRIER_INNER_ITERS: usize = 200;

/// Transmit power per user together with the sum budget it was allocated under.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    pub p: Vec<f64>,
    pub budget: f64,
}

impl PowerProfile {
    pub fn equal(users: usize, budget: f64) -> Self {
        Self {
            p: vec![budget / users as f64; users],
            budget,
        }
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Water-filling allocation and its water level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFilling {
    pub profile: PowerProfile,
    pub water_level: f64,
}

/// Maximizes `sum_k log2(1 + p_k g_k)` subject to `sum_k p_k = budget`:
/// `p_k = max(V - 1/g_k, 0)` with the water level `V` found by bisection and
/// then fixed exactly on the resulting active set.
pub fn water_filling(gains: &[f64], budget: f64) -> Result<WaterFilling> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::Domain {
            value: budget,
            domain: "positive finite budget",
        });
    }
    if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::NonFinite("channel gain"));
    }
    let inverse: Vec<f64> = gains
        .iter()
        .map(|&g| if g > 0.0 { 1.0 / g } else { f64::INFINITY })
        .collect();
    let floor = inverse.iter().copied().fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return Err(Error::NoSignal);
    }
    let filled = |level: f64| -> f64 { inverse.iter().map(|&x| (level - x).max(0.0)).sum() };

    let (mut lo, mut hi) = (floor, floor + budget);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if filled(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Exact level on the active set the bisection settled on.
    let active: Vec<f64> = inverse.iter().copied().filter(|&x| x < hi).collect();
    let level = (budget + active.iter().sum::<f64>()) / active.len() as f64;
    let p = inverse.iter().map(|&x| (level - x).max(0.0)).collect();
    Ok(WaterFilling {
        profile: PowerProfile { p, budget },
        water_level: level,
    })
}

/// Per-slot data of the allocation problems, per unit transmit power.
///
/// `gram[k][(j, l)] = Re(a_kj^H a_kl)` with `a_kj = h[k][j] v[j] xi[j]`, so the
/// field energy at receiver `k` under powers `P` is `s^T gram[k] s` with
/// `s = sqrt(P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaInputs {
    pub gain: Vec<f64>,
    pub gram: Vec<DMatrix<f64>>,
}

impl PaInputs {
    pub fn from_slot(
        ch: &ChannelSet,
        sol: &IaSolution,
        xi: &SymbolVector,
        mode: PowerMode,
    ) -> Result<Self> {
        check_solution_shape(ch, sol)?;
        let users = ch.users();
        if xi.len() != users {
            return Err(Error::Dimension(format!(
                "{} symbols for {users} users",
                xi.len()
            )));
        }
        let gain = (0..users)
            .map(|k| effective_gain(ch, sol, k))
            .collect::<Result<Vec<_>>>()?;
        let gram = (0..users)
            .map(|k| {
                let a: Vec<DVector<_>> = (0..users)
                    .map(|j| ch.get(k, j) * &sol.v[j] * xi.xi[j])
                    .collect();
                match mode {
                    PowerMode::Instantaneous => {
                        DMatrix::from_fn(users, users, |j, l| inner(&a[j], &a[l]).re)
                    }
                    PowerMode::Expected => DMatrix::from_fn(users, users, |j, l| {
                        if j == l {
                            a[j].norm_squared() / xi.xi[j].norm_sqr()
                        } else {
                            0.0
                        }
                    }),
                }
            })
            .collect();
        Ok(Self { gain, gram })
    }

    pub fn users(&self) -> usize {
        self.gain.len()
    }

    /// Field energy at every receiver for transmit amplitudes `s = sqrt(P)`.
    pub fn field_energies(&self, s: &DVector<f64>) -> Vec<f64> {
        self.gram.iter().map(|g| s.dot(&(g * s)).max(0.0)).collect()
    }
}

/// Controls shared by the allocation solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaOptions {
    /// Iteration cap per start and phase.
    pub max_iters: usize,
    /// Objective-improvement tolerance.
    pub tol: f64,
    /// Random starting points on top of the deterministic ones.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for PaOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: 1e-9,
            restarts: 8,
            seed: 0,
        }
    }
}

/// Result of the joint splitting and allocation solver.
#[derive(Debug, Clone, PartialEq)]
pub struct PaSolution {
    pub split: SplitProfile,
    pub power: PowerProfile,
    pub objective: f64,
    /// Objective of equal power with closed-form splitting.
    pub baseline_objective: f64,
    pub converged: bool,
    pub starts: usize,
}

/// Weighted objective with the splitting ratios eliminated, as a function of
/// the per-user transmit powers.
struct JointObjective<'a> {
    inputs: &'a PaInputs,
    alpha: &'a [f64],
    beta: &'a [f64],
    zeta: f64,
}

struct Evaluation {
    value: f64,
    rho: Vec<f64>,
    degenerate: Vec<bool>,
    /// `d value / d P_j`, excluding the harvested-energy part.
    rate_slope: DVector<f64>,
    /// `sum_k beta_k (1 - rho_k) zeta gram[k] s`.
    field_slope: DVector<f64>,
}

impl JointObjective<'_> {
    fn evaluate(&self, s: &DVector<f64>) -> Evaluation {
        let users = self.inputs.users();
        let energies = self.inputs.field_energies(s);
        let mut value = 0.0;
        let mut rho = Vec::with_capacity(users);
        let mut degenerate = Vec::with_capacity(users);
        let mut rate_slope = DVector::zeros(users);
        let mut field_slope = DVector::zeros(users);
        for k in 0..users {
            let power = s[k] * s[k];
            let g = self.inputs.gain[k];
            let snr = power * g;
            let harvest = self.zeta * energies[k];
            let split = clamp_split(self.alpha[k], self.beta[k], snr, harvest);
            value += user_objective(split.rho, self.alpha[k], self.beta[k], snr, harvest);
            if self.alpha[k] > 0.0 {
                rate_slope[k] = self.alpha[k] * split.rho * g / ((1.0 + split.rho * snr) * LN_2);
            }
            let weight = self.beta[k] * (1.0 - split.rho) * self.zeta;
            if weight > 0.0 {
                field_slope += (&self.inputs.gram[k] * s) * weight;
            }
            rho.push(split.rho);
            degenerate.push(split.degenerate);
        }
        Evaluation {
            value,
            rho,
            degenerate,
            rate_slope,
            field_slope,
        }
    }

    fn value_at_power(&self, p: &DVector<f64>) -> f64 {
        self.evaluate(&p.map(|x| x.max(0.0).sqrt())).value
    }

    /// Gradient in `P` for strictly positive powers.
    fn power_gradient(&self, p: &DVector<f64>) -> (f64, DVector<f64>) {
        let s = p.map(f64::sqrt);
        let e = self.evaluate(&s);
        let grad = DVector::from_fn(p.len(), |j, _| e.rate_slope[j] + e.field_slope[j] / s[j]);
        (e.value, grad)
    }

    /// Value and gradient in the amplitudes `s = sqrt(P)`.
    fn amplitude_gradient(&self, s: &DVector<f64>) -> (f64, DVector<f64>) {
        let e = self.evaluate(s);
        let grad = DVector::from_fn(s.len(), |j, _| {
            2.0 * s[j] * e.rate_slope[j] + 2.0 * e.field_slope[j]
        });
        (e.value, grad)
    }
}

/// Projection onto `{s >= 0, ||s||^2 <= budget}`.
fn project_amplitudes(mut s: DVector<f64>, budget: f64) -> DVector<f64> {
    s.iter_mut().for_each(|x| *x = x.max(0.0));
    let norm2 = s.norm_squared();
    if norm2 > budget {
        s *= (budget / norm2).sqrt();
    }
    s
}

fn projected_gradient_norm(s: &DVector<f64>, grad: &DVector<f64>, budget: f64) -> f64 {
    (project_amplitudes(s + grad, budget) - s).amax()
}

/// Interior ascent on `f(P) + mu (sum ln P_j + ln(B - sum P))` for a
/// decreasing sequence of `mu`. Returns the final interior point.
fn barrier_ascent(
    obj: &JointObjective,
    start: DVector<f64>,
    budget: f64,
    opts: &PaOptions,
) -> DVector<f64> {
    let users = start.len();
    let barrier = |p: &DVector<f64>| -> Option<f64> {
        let slack = budget - p.sum();
        if slack <= 0.0 || p.iter().any(|&x| x <= 0.0) {
            None
        } else {
            Some(p.iter().map(|x| x.ln()).sum::<f64>() + slack.ln())
        }
    };
    let scale = obj.value_at_power(&start).abs().max(1.0);
    let mut mu = 1e-3 * scale;
    let mu_min = 1e-9 * scale;
    let mut p = start;
    while mu >= mu_min {
        let phi = |p: &DVector<f64>| barrier(p).map(|b| obj.value_at_power(p) + mu * b);
        let grad_phi = |p: &DVector<f64>| {
            let (_, g) = obj.power_gradient(p);
            let slack = budget - p.sum();
            DVector::from_fn(users, |j, _| g[j] + mu / p[j] - mu / slack)
        };
        let mut current = phi(&p).expect("barrier iterate stays interior");
        let mut grad = grad_phi(&p);
        let mut step = budget / (grad.amax() + 1e-300) * 1e-3;
        for _ in 0..opts.max_iters.min(BARRIER_INNER_ITERS) {
            let mut t = step;
            let mut accepted = None;
            for _ in 0..60 {
                let candidate = &p + &grad * t;
                if let Some(value) = phi(&candidate) {
                    if value >= current + 1e-4 * t * grad.norm_squared() {
                        accepted = Some((candidate, value));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((next, value)) = accepted else { break };
            let next_grad = grad_phi(&next);
            let dp = &next - &p;
            let dg = &next_grad - &grad;
            let curvature = -dp.dot(&dg);
            step = if curvature > 0.0 {
                dp.norm_squared() / curvature
            } else {
                t * 2.0
            };
            let improvement = value - current;
            let moved = dp.amax();
            p = next;
            grad = next_grad;
            current = value;
            if moved <= 1e-13 * budget || improvement <= opts.tol * scale {
                break;
            }
        }
        mu *= 0.1;
    }
    p
}

/// Projected spectral-gradient ascent in `s = sqrt(P)` with a monotone
/// Armijo search along the projected direction.
fn projected_polish(
    obj: &JointObjective,
    start: DVector<f64>,
    budget: f64,
    opts: &PaOptions,
) -> (DVector<f64>, bool) {
    let mut s = project_amplitudes(start, budget);
    let (mut value, mut grad) = obj.amplitude_gradient(&s);
    let mut step = 1.0 / (grad.amax() + 1e-300) * budget.sqrt() * 1e-2;
    let tol_x = 1e-13 * budget.sqrt();
    for _ in 0..opts.max_iters {
        let target = project_amplitudes(&s + &grad * step, budget);
        let direction = &target - &s;
        if direction.amax() <= tol_x {
            return (s, true);
        }
        let slope = grad.dot(&direction);
        let stationarity = projected_gradient_norm(&s, &grad, budget);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = &s + &direction * lambda;
            let (cv, cg) = obj.amplitude_gradient(&candidate);
            // Near the optimum the value change drowns in rounding; accept
            // then if stationarity improves.
            let flat = (cv - value).abs() <= 1e-13 * value.abs().max(1.0)
                && projected_gradient_norm(&candidate, &cg, budget) < stationarity;
            if cv >= value + 1e-4 * lambda * slope || flat {
                accepted = Some((candidate, cv, cg));
                break;
            }
            lambda *= 0.5;
        }
        let Some((next, next_value, next_grad)) = accepted else {
            return (s, true);
        };
        let ds = &next - &s;
        let dg = &next_grad - &grad;
        let curvature = -ds.dot(&dg);
        step = if curvature > 0.0 {
            (ds.norm_squared() / curvature).clamp(1e-12, 1e12)
        } else {
            step * 4.0
        };
        s = next;
        grad = next_grad;
        value = next_value;
    }
    (s, false)
}

fn random_simplex_point<R: Rng>(rng: &mut R, users: usize, total: f64) -> DVector<f64> {
    let draws: Vec<f64> = (0..users)
        .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-12)
        .collect();
    let sum: f64 = draws.iter().sum();
    DVector::from_iterator(users, draws.into_iter().map(|x| total * x / sum))
}

/// Joint splitting and allocation on precomputed inputs. `slot` only feeds the
/// seeding of random starts.
pub fn solve_pso_pa_inputs(
    inputs: &PaInputs,
    weights: &RequirementWeights,
    zeta: f64,
    tx_power: f64,
    opts: &PaOptions,
    slot: u64,
) -> Result<PaSolution> {
    let users = inputs.users();
    weights.validate(users)?;
    if users == 0 {
        return Err(Error::Dimension("no users".into()));
    }
    let budget = users as f64 * tx_power;
    let obj = JointObjective {
        inputs,
        alpha: &weights.alpha,
        beta: &weights.beta,
        zeta,
    };

    let equal = DVector::from_element(users, tx_power);
    let baseline_objective = obj.value_at_power(&equal);

    // Interior starting points: blends keep every power strictly positive.
    let interior = |p: &DVector<f64>| -> DVector<f64> {
        let mixed = p * 0.9 + DVector::from_element(users, 0.1 * tx_power);
        mixed * 0.99
    };
    let mut starts = vec![equal.clone() * 0.99];
    if inputs.gain.iter().any(|&g| g > 0.0) {
        let wf = water_filling(&inputs.gain, budget)?;
        starts.push(interior(&DVector::from_vec(wf.profile.p)));
    }
    if weights.beta.iter().any(|&b| b > 0.0) {
        let eh = eh_only_amplitudes(inputs, budget, opts, slot);
        starts.push(interior(&eh.map(|x| x * x)));
    }
    let mut rng = slot_rng(opts.seed, slot, STREAM_RESTARTS);
    for _ in 0..opts.restarts {
        starts.push(random_simplex_point(&mut rng, users, 0.99 * budget));
    }

    let mut best_s = equal.map(f64::sqrt);
    let mut best_value = baseline_objective;
    let mut converged = true;
    for start in &starts {
        let interior_point = barrier_ascent(&obj, start.clone(), budget, opts);
        let (s, done) = projected_polish(&obj, interior_point.map(f64::sqrt), budget, opts);
        let value = obj.evaluate(&s).value;
        if value > best_value {
            best_value = value;
            best_s = s;
            converged = done;
        }
    }

    let mut p: Vec<f64> = best_s.iter().map(|x| x * x).collect();
    let total: f64 = p.iter().sum();
    if total > budget {
        p.iter_mut().for_each(|x| *x *= budget / total);
    }
    let final_eval = obj.evaluate(&DVector::from_iterator(users, p.iter().map(|x| x.sqrt())));
    Ok(PaSolution {
        split: SplitProfile {
            rho: final_eval.rho,
            degenerate: final_eval.degenerate,
        },
        power: PowerProfile { p, budget },
        objective: final_eval.value,
        baseline_objective,
        converged,
        starts: starts.len(),
    })
}

/// Joint power-splitting and power-allocation for one slot.
pub fn solve_pso_pa(
    ch: &ChannelSet,
    sol: &IaSolution,
    xi: &SymbolVector,
    weights: &RequirementWeights,
    cfg: &NetworkConfig,
    opts: &PaOptions,
) -> Result<PaSolution> {
    cfg.validate()?;
    ch.check_config(cfg)?;
    let inputs = PaInputs::from_slot(ch, sol, xi, PowerMode::Instantaneous)?;
    solve_pso_pa_inputs(&inputs, weights, cfg.zeta, cfg.tx_power, opts, ch.slot)
}

/// Harvesting-only allocation result. `objective` is the summed field energy
/// `sum_k ||sum_j sqrt(p_j) h[k][j] v[j] xi[j]||^2` (before conversion loss).
#[derive(Debug, Clone, PartialEq)]
pub struct EhOnlySolution {
    pub power: PowerProfile,
    pub objective: f64,
}

/// Summed field energy `s^T A s` with `A = sum_k gram[k]`.
pub fn eh_only_objective(inputs: &PaInputs, p: &[f64]) -> f64 {
    let s = DVector::from_iterator(p.len(), p.iter().map(|x| x.max(0.0).sqrt()));
    inputs.field_energies(&s).iter().sum()
}

fn eh_only_amplitudes(inputs: &PaInputs, budget: f64, opts: &PaOptions, slot: u64) -> DVector<f64> {
    let users = inputs.users();
    let total = inputs
        .gram
        .iter()
        .fold(DMatrix::<f64>::zeros(users, users), |acc, g| acc + g);
    let radius = budget.sqrt();
    let value = |s: &DVector<f64>| s.dot(&(&total * s));

    // The objective is convex, so stepping to the linear maximizer over the
    // feasible set never decreases it: s <- radius * (A s)^+ / ||(A s)^+||.
    let ascend = |mut s: DVector<f64>| -> DVector<f64> {
        let mut current = value(&s);
        for _ in 0..opts.max_iters {
            let next = (&total * &s).map(|x| x.max(0.0));
            let norm = next.norm();
            if norm == 0.0 {
                break;
            }
            let next = next * (radius / norm);
            let next_value = value(&next);
            let moved = (&next - &s).amax();
            if next_value < current {
                break;
            }
            let gain = next_value - current;
            s = next;
            current = next_value;
            if gain <= opts.tol * current.max(1e-300) && moved <= 1e-12 * radius {
                break;
            }
        }
        s
    };

    let mut starts = vec![DVector::from_element(users, radius / (users as f64).sqrt())];
    for j in 0..users {
        let mut e = DVector::zeros(users);
        e[j] = radius;
        starts.push(e);
    }
    let mut rng = slot_rng(opts.seed, slot, STREAM_RESTARTS ^ 0x5a5a);
    for _ in 0..opts.restarts {
        starts.push(random_simplex_point(&mut rng, users, budget).map(f64::sqrt));
    }
    let mut best = starts[0].clone();
    let mut best_value = value(&best);
    for start in starts {
        let s = ascend(start);
        let v = value(&s);
        if v > best_value {
            best_value = v;
            best = s;
        }
    }
    best
}

/// Maximizes the summed field energy over the budget simplex (every receiver
/// harvesting).
pub fn solve_eh_only_pa_inputs(
    inputs: &PaInputs,
    tx_power: f64,
    opts: &PaOptions,
    slot: u64,
) -> Result<EhOnlySolution> {
    let users = inputs.users();
    if users == 0 {
        return Err(Error::Dimension("no users".into()));
    }
    let budget = users as f64 * tx_power;
    let s = eh_only_amplitudes(inputs, budget, opts, slot);
    let mut p: Vec<f64> = s.iter().map(|x| x * x).collect();
    let total: f64 = p.iter().sum();
    if total > budget {
        p.iter_mut().for_each(|x| *x *= budget / total);
    }
    let objective = eh_only_objective(inputs, &p);
    Ok(EhOnlySolution {
        power: PowerProfile { p, budget },
        objective,
    })
}

/// Harvesting-only allocation for one slot with instantaneous symbols.
pub fn solve_eh_only_pa(
    ch: &ChannelSet,
    sol: &IaSolution,
    xi: &SymbolVector,
    cfg: &NetworkConfig,
    opts: &PaOptions,
) -> Result<EhOnlySolution> {
    cfg.validate()?;
    ch.check_config(cfg)?;
    let inputs = PaInputs::from_slot(ch, sol, xi, PowerMode::Instantaneous)?;
    solve_eh_only_pa_inputs(&inputs, cfg.tx_power, opts, ch.slot)
}
