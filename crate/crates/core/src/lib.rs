//! Simultaneous wireless information and power transfer in K-user
//! interference-alignment networks: channel generation, the alignment solver,
//! per-user metrics, user selection, power splitting, power allocation and the
//! Monte Carlo experiments built on them.

pub mod allocation;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod ia;
pub mod linalg;
pub mod metrics;
pub mod report;
pub mod selection;
pub mod splitting;

pub use channel::{draw_channel_set, draw_symbols, ChannelSet, NetworkConfig, SymbolVector};
pub use error::{Error, Result};
pub use ia::{
    check_feasibility, effective_channel, interference_leakage, solve_minil, IaOptions, IaSolution,
};
