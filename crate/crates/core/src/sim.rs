//! Monte-Carlo estimation of outage probability and uncoded BER.
//!
//! Trials are split into fixed batches that run in parallel. Each trial seeds
//! its own generator from `(master_seed, trial_index)` and draws, in order:
//! the channel, the estimation errors (if any), the symbols and the noise.
//! Counts are integers, so the reduction is exact and independent of the
//! number of workers. Several policies can be scored in one pass on the same
//! draws, which is how every comparison in [`crate::optimize`] is paired.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    apply_estimation_error, db_to_linear, linear_to_db, sample_channel, ChannelRealization,
    EstimationErrorModel, LinkBudget,
};
use crate::dstc::{
    destination_decode, effective_channel_for_modes, effective_channel_mismatched, end_to_end_snr,
    simulate_frame, Constellation, FrameContext, FrameNoise, SymbolFrame, SystemParams,
};
use crate::error::{Error, Result};
use crate::policy::{optimal_onoff_threshold, relay_mode, PolicySpec, RelayMode};
use crate::rng::{derive_seed, trial_rng};

pub const BATCH_TRIALS: u64 = 1 << 16;

/// Binomial proportion with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub value: f64,
    pub half_width_95: f64,
    pub trials: u64,
    pub event_count: u64,
}

impl MetricEstimate {
    pub fn from_counts(event_count: u64, trials: u64) -> Self {
        let n = trials.max(1) as f64;
        let value = event_count as f64 / n;
        Self {
            value,
            half_width_95: 1.96 * (value * (1.0 - value) / n).sqrt(),
            trials,
            event_count,
        }
    }

    /// Fewer than 30 events: the normal interval is not trustworthy.
    pub fn low_confidence(&self) -> bool {
        self.event_count < 30
    }

    pub fn covers(&self, p: f64) -> bool {
        (self.value - p).abs() <= self.half_width_95
    }
}

/// Relay scaling rule of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PolicyRule {
    /// Explicit per-relay policies.
    Fixed([PolicySpec; 2]),
    /// On-off at `ξ = γ_t/(P_s/N0)`, recomputed from the current config.
    OnOffAtXi,
}

impl PolicyRule {
    pub fn uniform(p: PolicySpec) -> Self {
        PolicyRule::Fixed([p.clone(), p])
    }
}

/// Test hooks that bypass parts of the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub noiseless: bool,
    /// Use this channel in every trial instead of drawing one.
    pub fixed_channel: Option<ChannelRealization>,
    pub phase_compensation: bool,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            noiseless: false,
            fixed_channel: None,
            phase_compensation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub link_budget: LinkBudget,
    pub system: SystemParams,
    pub policy: PolicyRule,
    pub trials: u64,
    pub master_seed: u64,
    pub estimation_error: Option<EstimationErrorModel>,
    pub constellation: Constellation,
    pub diagnostics: Diagnostics,
}

impl SimConfig {
    pub fn new(link_budget: LinkBudget, gamma_t: f64, policy: PolicyRule) -> Self {
        Self {
            link_budget,
            system: SystemParams { gamma_t },
            policy,
            trials: 100_000,
            master_seed: 1,
            estimation_error: None,
            constellation: Constellation::Bpsk,
            diagnostics: Diagnostics::default(),
        }
    }

    /// ξ on the composite gain for the current `γ_t` and source power.
    pub fn xi(&self) -> f64 {
        optimal_onoff_threshold(self.system.gamma_t, self.link_budget.ps_over_n0)
    }

    pub fn resolved_policies(&self) -> [PolicySpec; 2] {
        match &self.policy {
            PolicyRule::Fixed(p) => p.clone(),
            PolicyRule::OnOffAtXi => {
                let p = PolicySpec::OnOff { threshold: self.xi() };
                [p.clone(), p]
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if !(self.system.gamma_t > 0.0) {
            return Err(Error::Config("gamma_t must be positive".into()));
        }
        if let Some(m) = &self.estimation_error {
            m.validate()?;
        }
        for p in self.resolved_policies() {
            p.validate()?;
        }
        Ok(())
    }
}

/// Outage estimate with relay activity statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageReport {
    pub metric: MetricEstimate,
    /// Fraction of trials in which each relay transmitted.
    pub active_fraction: [f64; 2],
    /// Fraction of trials in which each relay was in detect-and-forward mode.
    /// Those trials are scored with the noise-free full-power surrogate.
    pub df_fraction: [f64; 2],
}

impl OutageReport {
    pub fn uses_df_surrogate(&self) -> bool {
        self.df_fraction.iter().any(|&f| f > 0.0)
    }
}

/// Runs `body` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, body: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(body))
}

/// Sums per-trial counters of width `width` over all trials.
fn accumulate<F>(trials: u64, width: usize, per_trial: F) -> Vec<u64>
where
    F: Fn(u64, &mut [u64]) + Sync,
{
    let batches = trials.div_ceil(BATCH_TRIALS);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0u64; width];
            let end = ((b + 1) * BATCH_TRIALS).min(trials);
            for t in b * BATCH_TRIALS..end {
                per_trial(t, &mut acc);
            }
            acc
        })
        .reduce(
            || vec![0u64; width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Per-trial draws shared by all policies scored in one pass.
struct TrialDraw {
    channel: ChannelRealization,
    estimate: ChannelRealization,
}

fn draw_channel<R: rand::Rng>(cfg: &SimConfig, rng: &mut R) -> TrialDraw {
    let channel = match cfg.diagnostics.fixed_channel {
        Some(ch) => ch,
        None => sample_channel(rng),
    };
    let estimate = match &cfg.estimation_error {
        Some(m) => apply_estimation_error(&channel, m, rng).estimated,
        None => channel,
    };
    TrialDraw { channel, estimate }
}

fn modes_for(policies: &[PolicySpec; 2], lb: &LinkBudget, known: &ChannelRealization) -> [RelayMode; 2] {
    [0, 1].map(|i| relay_mode(&policies[i], lb.gamma_sr[i] * known.h_sr[i].norm_sqr()))
}

const OUTAGE_WIDTH: usize = 5;

/// Scores every policy pair in `candidates` on the same trials.
pub fn estimate_outage_many(cfg: &SimConfig, candidates: &[[PolicySpec; 2]]) -> Result<Vec<OutageReport>> {
    cfg.validate()?;
    for c in candidates.iter().flatten() {
        c.validate()?;
    }
    let lb = cfg.link_budget;
    let gamma_t = cfg.system.gamma_t;
    let counts = accumulate(cfg.trials, OUTAGE_WIDTH * candidates.len(), |t, acc| {
        let mut rng = trial_rng(cfg.master_seed, t);
        let d = draw_channel(cfg, &mut rng);
        for (k, pol) in candidates.iter().enumerate() {
            let modes = modes_for(pol, &lb, &d.estimate);
            let ec = effective_channel_mismatched(&d.channel, &d.estimate, &lb, modes);
            let slot = &mut acc[k * OUTAGE_WIDTH..(k + 1) * OUTAGE_WIDTH];
            slot[0] += u64::from(end_to_end_snr(&ec) < gamma_t);
            for i in 0..2 {
                slot[1 + i] += u64::from(modes[i].is_active());
                slot[3 + i] += u64::from(modes[i] == RelayMode::Detect);
            }
        }
    });
    let n = cfg.trials as f64;
    Ok(counts
        .chunks(OUTAGE_WIDTH)
        .map(|c| OutageReport {
            metric: MetricEstimate::from_counts(c[0], cfg.trials),
            active_fraction: [c[1] as f64 / n, c[2] as f64 / n],
            df_fraction: [c[3] as f64 / n, c[4] as f64 / n],
        })
        .collect())
}

pub fn estimate_outage_detailed(cfg: &SimConfig) -> Result<OutageReport> {
    Ok(estimate_outage_many(cfg, &[cfg.resolved_policies()])?[0])
}

/// Fraction of trials with end-to-end SNR below `γ_t`.
pub fn estimate_outage(cfg: &SimConfig) -> Result<MetricEstimate> {
    Ok(estimate_outage_detailed(cfg)?.metric)
}

/// Bit error rate of every policy pair in `candidates` on the same frames.
pub fn estimate_ber_many(cfg: &SimConfig, candidates: &[[PolicySpec; 2]]) -> Result<Vec<MetricEstimate>> {
    cfg.validate()?;
    for c in candidates.iter().flatten() {
        c.validate()?;
    }
    let lb = cfg.link_budget;
    let constellation = cfg.constellation;
    let diag = cfg.diagnostics;
    let counts = accumulate(cfg.trials, candidates.len(), |t, acc| {
        let mut rng = trial_rng(cfg.master_seed, t);
        let d = draw_channel(cfg, &mut rng);
        let x = SymbolFrame::random(constellation, &mut rng);
        let noise = if diag.noiseless {
            FrameNoise::zero()
        } else {
            FrameNoise::draw(&mut rng)
        };
        for (k, pol) in candidates.iter().enumerate() {
            let modes = modes_for(pol, &lb, &d.estimate);
            let ctx = FrameContext {
                link_budget: &lb,
                channel: &d.channel,
                relay_csi: &d.estimate,
                modes,
                constellation,
                phase_compensation: diag.phase_compensation,
            };
            let rx = simulate_frame(&x, &ctx, &noise);
            // the destination's composite estimate carries the relay-side errors too
            let ec = effective_channel_for_modes(&d.estimate, &lb, modes);
            let dec = destination_decode(&rx, &ec, constellation);
            acc[k] += (0..2)
                .map(|j| u64::from(constellation.bit_errors(x.x[j], dec.frame.x[j])))
                .sum::<u64>();
        }
    });
    let bits = cfg.trials * 2 * u64::from(constellation.bits_per_symbol());
    Ok(counts
        .into_iter()
        .map(|e| MetricEstimate::from_counts(e, bits))
        .collect())
}

/// Uncoded bit error rate over `trials` two-symbol frames.
pub fn estimate_ber(cfg: &SimConfig) -> Result<MetricEstimate> {
    Ok(estimate_ber_many(cfg, &[cfg.resolved_policies()])?[0])
}

/// Parameter swept along the x-axis of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    GammaTDb,
    SnrRdDb,
    SnrSrDb,
}

impl SweepVariable {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gamma_t_db" => Ok(SweepVariable::GammaTDb),
            "snr_rd_db" => Ok(SweepVariable::SnrRdDb),
            "snr_sr_db" => Ok(SweepVariable::SnrSrDb),
            other => Err(Error::Config(format!(
                "unknown sweep variable `{other}` (expected gamma_t_db, snr_rd_db or snr_sr_db)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::GammaTDb => "gamma_t_db",
            SweepVariable::SnrRdDb => "snr_rd_db",
            SweepVariable::SnrSrDb => "snr_sr_db",
        }
    }

    /// Copy of `cfg` with the variable set to `value_db` on both relays.
    pub fn apply(self, cfg: &SimConfig, value_db: f64) -> Result<SimConfig> {
        let mut out = cfg.clone();
        let lb = &cfg.link_budget;
        let v = db_to_linear(value_db);
        match self {
            SweepVariable::GammaTDb => out.system.gamma_t = v,
            SweepVariable::SnrRdDb => out.link_budget = LinkBudget::from_snrs(lb.snr_sr, [v, v])?,
            SweepVariable::SnrSrDb => out.link_budget = LinkBudget::from_snrs([v, v], lb.snr_rd)?,
        }
        if cfg.estimation_error.is_some() && self != SweepVariable::GammaTDb {
            out.estimation_error = Some(EstimationErrorModel::from_link_budget(&out.link_budget));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Outage,
    Ber,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub estimate: MetricEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub metric: Metric,
    pub rows: Vec<SweepRow>,
}

/// Seed of grid point `index` in a sweep under `master`.
pub fn point_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

pub fn sweep(base: &SimConfig, variable: SweepVariable, grid: &[f64], metric: Metric) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut cfg = variable.apply(base, x)?;
            cfg.master_seed = point_seed(base.master_seed, i);
            let estimate = match metric {
                Metric::Outage => estimate_outage(&cfg)?,
                Metric::Ber => estimate_ber(&cfg)?,
            };
            Ok(SweepRow { x, estimate })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        variable,
        metric,
        rows,
    })
}

/// Average SNR in dB of the first source hop, for reporting.
pub fn snr_sr_db(cfg: &SimConfig) -> f64 {
    linear_to_db(cfg.link_budget.snr_sr[0])
}
