//! Fixed configurations shared by the benchmarks.

use dstc_core::{db_to_linear, LinkBudget, PolicyRule, PolicySpec, SimConfig};

/// Symmetric links at the given SNRs with `trials` trials and a fixed seed.
pub fn config(snr_sr_db: f64, snr_rd_db: f64, gamma_t_db: f64, policy: PolicyRule, trials: u64) -> SimConfig {
    let mut c = SimConfig::new(
        LinkBudget::symmetric_db(snr_sr_db, snr_rd_db).expect("finite SNRs"),
        db_to_linear(gamma_t_db),
        policy,
    );
    c.trials = trials;
    c.master_seed = 42;
    c
}

pub fn full_power() -> [PolicySpec; 2] {
    [PolicySpec::FullPower, PolicySpec::FullPower]
}
