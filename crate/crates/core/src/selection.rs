//! Slot-by-slot choice of dedicated energy-harvesting (EH) receivers.
//!
//! Users are zero-based here. Round-robin selection picks the `L` users after
//! the last user served in the previous slot, wrapping around modulo `K`;
//! PRR-ranked selection picks the `L` users with the largest power-to-rate
//! ratio. All other users decode information.

use crate::channel::{ChannelSet, NetworkConfig, SymbolVector};
use crate::error::{Error, Result};
use crate::ia::IaSolution;
use crate::metrics::{harvested_power, rate_id, SlotMetrics};

/// Round-robin pointer: the largest-numbered EH user of the previous slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionState {
    pub last_index: usize,
}

impl SelectionState {
    /// Starts with the pointer on the last user so the first slot serves
    /// users `0..L`.
    pub fn initial(users: usize) -> Self {
        Self {
            last_index: users.saturating_sub(1),
        }
    }

    /// Pointer after `slots` round-robin slots with `l` EH users each,
    /// starting from [`SelectionState::initial`].
    pub fn after_slots(users: usize, l: usize, slots: u64) -> Self {
        let start = Self::initial(users).last_index as u64;
        let users64 = users.max(1) as u64;
        let advance = (slots % users64) * (l as u64 % users64);
        Self {
            last_index: ((start + advance) % users64) as usize,
        }
    }
}

/// Dedicated-EH set of one slot with its information and energy totals.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub eh_set: Vec<usize>,
    /// Bits/s/Hz summed over the decoding users.
    pub sum_rate: f64,
    /// Watts summed over the harvesting users.
    pub sum_power: f64,
}

impl SlotOutcome {
    /// Outcome from precomputed slot metrics: decoding users contribute
    /// `rate_full`, harvesting users `power_full`.
    pub fn from_metrics(metrics: &SlotMetrics, eh_set: &[usize]) -> Result<Self> {
        let users = metrics.users();
        check_set(eh_set, users)?;
        let mut is_eh = vec![false; users];
        for &k in eh_set {
            is_eh[k] = true;
        }
        let (mut sum_rate, mut sum_power) = (0.0, 0.0);
        for k in 0..users {
            if is_eh[k] {
                sum_power += metrics.power_full[k];
            } else {
                sum_rate += metrics.rate_full[k];
            }
        }
        Ok(Self {
            eh_set: eh_set.to_vec(),
            sum_rate,
            sum_power,
        })
    }
}

fn check_count(users: usize, l: usize) -> Result<()> {
    if l >= users {
        return Err(Error::Selection(format!(
            "{l} EH users leaves no decoding user among {users}"
        )));
    }
    Ok(())
}

fn check_set(eh_set: &[usize], users: usize) -> Result<()> {
    if let Some(&k) = eh_set.iter().find(|&&k| k >= users) {
        return Err(Error::IndexOutOfRange { index: k, users });
    }
    Ok(())
}

/// Round-robin selection. Returns the EH set (ascending) and the next state.
pub fn rrs_select(
    state: SelectionState,
    users: usize,
    l: usize,
) -> Result<(Vec<usize>, SelectionState)> {
    check_count(users, l)?;
    if state.last_index >= users {
        return Err(Error::IndexOutOfRange {
            index: state.last_index,
            users,
        });
    }
    let mut eh: Vec<usize> = (1..=l).map(|i| (state.last_index + i) % users).collect();
    eh.sort_unstable();
    let next = SelectionState {
        last_index: (state.last_index + l) % users,
    };
    Ok((eh, next))
}

/// PRR-ranked selection: the `l` largest ratios, ties to the lower index.
/// Returns the EH set in ascending order.
pub fn prrs_select(prr: &[f64], l: usize) -> Result<Vec<usize>> {
    check_count(prr.len(), l)?;
    if prr.iter().any(|x| x.is_nan()) {
        return Err(Error::NonFinite("power-to-rate ratio"));
    }
    let mut order: Vec<usize> = (0..prr.len()).collect();
    order.sort_by(|&a, &b| prr[b].total_cmp(&prr[a]).then(a.cmp(&b)));
    let mut eh = order[..l].to_vec();
    eh.sort_unstable();
    Ok(eh)
}

/// Accounts one slot: `rho = 0` for the EH set and `rho = 1` for everyone else.
pub fn run_selection_slot(
    ch: &ChannelSet,
    sol: &IaSolution,
    xi: &SymbolVector,
    cfg: &NetworkConfig,
    eh_set: &[usize],
) -> Result<SlotOutcome> {
    check_set(eh_set, cfg.users)?;
    let (mut sum_rate, mut sum_power) = (0.0, 0.0);
    for k in 0..cfg.users {
        if eh_set.contains(&k) {
            sum_power += harvested_power(ch, sol, xi, k, cfg.tx_power, 0.0, cfg.zeta)?;
        } else {
            sum_rate += rate_id(ch, sol, k, cfg.tx_power, 1.0)?;
        }
    }
    Ok(SlotOutcome {
        eh_set: eh_set.to_vec(),
        sum_rate,
        sum_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rrs_wraps_from_last_user() {
        // Five users, two EH, pointer on the last user.
        let (eh, next) = rrs_select(SelectionState { last_index: 4 }, 5, 2).unwrap();
        assert_eq!(eh, vec![0, 1]);
        assert_eq!(next.last_index, 1);
        let (eh, next) = rrs_select(SelectionState { last_index: 3 }, 5, 3).unwrap();
        assert_eq!(eh, vec![0, 1, 4]);
        assert_eq!(next.last_index, 1);
    }

    #[test]
    fn rrs_zero_selection_keeps_state() {
        let state = SelectionState { last_index: 2 };
        let (eh, next) = rrs_select(state, 5, 0).unwrap();
        assert!(eh.is_empty());
        assert_eq!(next, state);
    }

    #[test]
    fn rrs_rejects_full_selection() {
        assert!(matches!(
            rrs_select(SelectionState::initial(5), 5, 5),
            Err(Error::Selection(_))
        ));
        assert!(rrs_select(SelectionState { last_index: 5 }, 5, 1).is_err());
    }

    #[test]
    fn rrs_cycle_is_fair() {
        for users in 1..=7 {
            for l in 0..users {
                let mut counts = vec![0usize; users];
                let mut state = SelectionState::initial(users);
                for _ in 0..users {
                    let (eh, next) = rrs_select(state, users, l).unwrap();
                    for k in eh {
                        counts[k] += 1;
                    }
                    state = next;
                }
                assert!(
                    counts.iter().all(|&c| c == l),
                    "K={users} L={l}: {counts:?}"
                );
            }
        }
    }

    #[test]
    fn rrs_pointer_has_closed_form() {
        for users in 1..=6 {
            for l in 0..users {
                let mut state = SelectionState::initial(users);
                for n in 0..20u64 {
                    assert_eq!(state, SelectionState::after_slots(users, l, n));
                    state = rrs_select(state, users, l).unwrap().1;
                }
            }
        }
    }

    #[test]
    fn prrs_picks_largest_ratios() {
        assert_eq!(
            prrs_select(&[5.0, 1.0, 4.0, 2.0, 3.0], 2).unwrap(),
            vec![0, 2]
        );
        assert_eq!(prrs_select(&[3.0, 3.0, 1.0, 1.0, 1.0], 1).unwrap(), vec![0]);
        assert_eq!(
            prrs_select(&[5.0, 1.0, 4.0, 2.0, 3.0], 4).unwrap(),
            vec![0, 2, 3, 4]
        );
        assert_eq!(prrs_select(&[1.0, f64::INFINITY, 2.0], 1).unwrap(), vec![1]);
        assert!(prrs_select(&[1.0, 2.0], 2).is_err());
        assert!(prrs_select(&[1.0, f64::NAN, 2.0], 1).is_err());
    }
}
