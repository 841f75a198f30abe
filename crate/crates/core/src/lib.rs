//! Dual-hop two-relay distributed Alamouti link simulator.
//!
//! The crate covers the channel and path-loss model, the relay scaling
//! policies, the space-time encoder and decoder, analytic outage
//! calculations, a reproducible Monte-Carlo engine and the threshold and
//! scaling-function searches built on it.
//!
//! ```no_run
//! use dstc_core::{estimate_outage, LinkBudget, PolicyRule, SimConfig};
//!
//! let lb = LinkBudget::symmetric_db(25.0, 40.0)?;
//! let mut cfg = SimConfig::new(lb, 10.0, PolicyRule::OnOffAtXi);
//! cfg.trials = 1_000_000;
//! let p = estimate_outage(&cfg)?;
//! println!("{:.3e} ± {:.1e}", p.value, p.half_width_95);
//! # Ok::<(), dstc_core::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dstc;
pub mod error;
pub mod optimize;
pub mod outage;
pub mod policy;
pub mod quadrature;
pub mod rng;
pub mod sim;

pub use channel::{
    db_to_linear, linear_to_db, path_loss_db, ChannelRealization, EstimationErrorModel, LinkBudget,
    LinkGeometry, PathLossParams, Powers,
};
pub use dstc::{Constellation, EffectiveChannel, SystemParams};
pub use error::{Error, Result};
pub use optimize::{centralized_search, iterative_search, threshold_search, Objective, SearchReport};
pub use outage::{outage_asymptotic, outage_min_closed_form, AsymptoticContext};
pub use policy::{PolicySpec, QuantizedAlphaFunction, RelayMode};
pub use quadrature::QuadOptions;
pub use sim::{
    estimate_ber, estimate_outage, sweep, Diagnostics, Metric, MetricEstimate, PolicyRule, SimConfig,
    SweepResult, SweepVariable,
};
