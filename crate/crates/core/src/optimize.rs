//! Threshold and scaling-function searches.
//!
//! Every candidate in one search is scored on the same Monte-Carlo trials,
//! so comparisons are paired and the argmin is a deterministic function of
//! the master seed. Monte-Carlo objectives are compared as integer event
//! counts, which makes ties exact.

use crate::channel::db_to_linear;
use crate::error::{Error, Result};
use crate::outage::{outage_asymptotic, AsymptoticContext};
use crate::policy::{PolicySpec, QuantizedAlphaFunction};
use crate::quadrature::QuadOptions;
use crate::sim::{estimate_ber_many, estimate_outage_many, MetricEstimate, SimConfig};

/// What a search minimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    MonteCarloOutage,
    MonteCarloBer,
    /// Asymptotic outage by quadrature. Ignores the relay-to-destination SNR.
    Asymptotic(QuadOptions),
}

/// Result of a search over parameters of type `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport<P> {
    pub best: P,
    pub best_objective: f64,
    /// Monte-Carlo estimate of the best candidate; `None` for the asymptotic
    /// objective.
    pub best_estimate: Option<MetricEstimate>,
    /// Number of candidates scored.
    pub evaluations: usize,
    pub converged: bool,
    /// `(iteration, objective)` after each iteration; iteration 0 is the start.
    pub trace: Vec<(usize, f64)>,
    /// Objective of every candidate, in evaluation order (threshold and
    /// centralized searches only).
    pub objectives: Vec<f64>,
}

/// Scores of a batch of candidates on shared trials.
struct Scores {
    /// Exact comparison key (event count, or the quadrature value's bits).
    keys: Vec<Key>,
    values: Vec<f64>,
    estimates: Vec<Option<MetricEstimate>>,
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
enum Key {
    Count(u64),
    Value(f64),
}

fn score(cfg: &SimConfig, objective: Objective, candidates: &[[PolicySpec; 2]]) -> Result<Scores> {
    let estimates: Vec<MetricEstimate> = match objective {
        Objective::MonteCarloOutage => estimate_outage_many(cfg, candidates)?
            .into_iter()
            .map(|r| r.metric)
            .collect(),
        Objective::MonteCarloBer => estimate_ber_many(cfg, candidates)?,
        Objective::Asymptotic(opts) => {
            let values = candidates
                .iter()
                .map(|c| {
                    let ctx = AsymptoticContext::new(&cfg.link_budget, cfg.system.gamma_t, c.clone());
                    outage_asymptotic(&ctx, opts).map(|q| q.value)
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Scores {
                keys: values.iter().map(|&v| Key::Value(v)).collect(),
                estimates: vec![None; values.len()],
                values,
            });
        }
    };
    Ok(Scores {
        keys: estimates.iter().map(|e| Key::Count(e.event_count)).collect(),
        values: estimates.iter().map(|e| e.value).collect(),
        estimates: estimates.into_iter().map(Some).collect(),
    })
}

/// Index of the smallest key; among equal keys `prefer(i, j)` decides
/// whether `i` replaces the incumbent `j`.
fn argmin(keys: &[Key], prefer: impl Fn(usize, usize) -> bool) -> usize {
    let mut best = 0;
    for i in 1..keys.len() {
        if keys[i] < keys[best] || (keys[i] == keys[best] && prefer(i, best)) {
            best = i;
        }
    }
    best
}

/// On-off policy with thresholds given in dB on the unit-mean fading gain
/// `|h_sr|²`, converted to the composite gain of each relay.
pub fn onoff_from_db(cfg: &SimConfig, threshold_db: f64) -> [PolicySpec; 2] {
    let t = db_to_linear(threshold_db);
    cfg.link_budget.gamma_sr.map(|g| PolicySpec::OnOff { threshold: t * g })
}

/// Exhaustive search of an on-off threshold (dB, on `|h_sr|²`) over `grid_db`.
///
/// Among thresholds with equal objective the highest one wins: it keeps the
/// relays silent most often.
pub fn threshold_search(cfg: &SimConfig, grid_db: &[f64], objective: Objective) -> Result<SearchReport<f64>> {
    threshold_search_with(cfg, grid_db, objective, |t| onoff_from_db(cfg, t))
}

/// Exhaustive search of one scalar parameter of a policy family. `make`
/// turns a grid value into the policies of both relays; ties go to the
/// larger grid value.
pub fn threshold_search_with(
    cfg: &SimConfig,
    grid_db: &[f64],
    objective: Objective,
    make: impl Fn(f64) -> [PolicySpec; 2],
) -> Result<SearchReport<f64>> {
    if grid_db.is_empty() {
        return Err(Error::Config("threshold grid is empty".into()));
    }
    if grid_db.iter().any(|x| x.is_nan()) {
        return Err(Error::Config("threshold grid contains NaN".into()));
    }
    let candidates: Vec<_> = grid_db.iter().map(|&t| make(t)).collect();
    let s = score(cfg, objective, &candidates)?;
    let best = argmin(&s.keys, |i, j| grid_db[i] > grid_db[j]);
    Ok(SearchReport {
        best: grid_db[best],
        best_objective: s.values[best],
        best_estimate: s.estimates[best],
        evaluations: candidates.len(),
        converged: true,
        trace: vec![(0, s.values[best])],
        objectives: s.values,
    })
}

fn with_values(template: &QuantizedAlphaFunction, values: Vec<f64>) -> QuantizedAlphaFunction {
    QuantizedAlphaFunction {
        bin_edges: template.bin_edges.clone(),
        alpha_values: values,
    }
}

fn check_alpha_grid(alpha_grid: &[f64]) -> Result<()> {
    if alpha_grid.is_empty() {
        return Err(Error::Config("alpha grid is empty".into()));
    }
    if alpha_grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::Config("alpha grid values must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Joint exhaustive search over the bin values of two quantized scaling
/// functions. The bin edges come from `templates`; every assignment of
/// `alpha_grid` values to the bins of both relays is scored.
///
/// Refuses when the number of assignments exceeds `cap`. Among equal
/// objectives the assignment with the lexicographically smallest α wins.
pub fn centralized_search(
    cfg: &SimConfig,
    templates: &[QuantizedAlphaFunction; 2],
    alpha_grid: &[f64],
    cap: usize,
) -> Result<SearchReport<[QuantizedAlphaFunction; 2]>> {
    check_alpha_grid(alpha_grid)?;
    for t in templates {
        t.validate()?;
    }
    let mut grid = alpha_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let bins = [templates[0].bins(), templates[1].bins()];
    let dims = bins[0] + bins[1];
    let size = u32::try_from(dims)
        .ok()
        .and_then(|d| grid.len().checked_pow(d))
        .filter(|&n| n <= cap)
        .ok_or_else(|| {
            Error::Config(format!(
                "search space of {}^{} assignments exceeds the cap of {cap}",
                grid.len(),
                dims
            ))
        })?;

    // index k enumerates digits base |grid|, most significant digit first
    let assignment = |mut k: usize| -> Vec<f64> {
        let mut digits = vec![0.0; dims];
        for d in (0..dims).rev() {
            digits[d] = grid[k % grid.len()];
            k /= grid.len();
        }
        digits
    };
    let policies = |a: &[f64]| -> [QuantizedAlphaFunction; 2] {
        [
            with_values(&templates[0], a[..bins[0]].to_vec()),
            with_values(&templates[1], a[bins[0]..].to_vec()),
        ]
    };
    let candidates: Vec<[PolicySpec; 2]> = (0..size)
        .map(|k| policies(&assignment(k)).map(PolicySpec::Tabulated))
        .collect();
    let s = score(cfg, Objective::MonteCarloOutage, &candidates)?;
    // enumeration order is lexicographic, so the first minimum is the lowest α
    let best = argmin(&s.keys, |_, _| false);
    Ok(SearchReport {
        best: policies(&assignment(best)),
        best_objective: s.values[best],
        best_estimate: s.estimates[best],
        evaluations: size,
        converged: true,
        trace: vec![(0, s.values[best])],
        objectives: s.values,
    })
}

/// Alternating per-bin search. Each iteration first sets every bin of
/// relay 2 given relay 1, then every bin of relay 1 given relay 2, each bin
/// chosen over `alpha_grid` on shared trials.
///
/// A bin moves only to a strictly better value, or to a lower α at the same
/// objective. The search stops when an iteration changes nothing, when it
/// improves the objective by less than `tol`, or after `max_iters`
/// iterations. `tol` defaults to one half-width of the current estimate.
pub fn iterative_search(
    cfg: &SimConfig,
    init: &[QuantizedAlphaFunction; 2],
    alpha_grid: &[f64],
    max_iters: usize,
    tol: Option<f64>,
) -> Result<SearchReport<[QuantizedAlphaFunction; 2]>> {
    if max_iters == 0 {
        return Err(Error::Config("max_iters must be >= 1".into()));
    }
    check_alpha_grid(alpha_grid)?;
    for f in init {
        f.validate()?;
    }
    let mut grid = alpha_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut current = init.clone();
    let as_specs = |f: &[QuantizedAlphaFunction; 2]| f.clone().map(PolicySpec::Tabulated);
    let start = score(cfg, Objective::MonteCarloOutage, &[as_specs(&current)])?;
    let mut key = start.keys[0];
    let mut estimate = start.estimates[0].expect("Monte-Carlo objective");
    let mut trace = vec![(0, estimate.value)];
    let mut evaluations = 1;
    let mut converged = false;

    for iter in 1..=max_iters {
        let before = estimate.value;
        let mut changed = false;
        for relay in [1, 0] {
            for bin in 0..current[relay].bins() {
                let candidates: Vec<[PolicySpec; 2]> = grid
                    .iter()
                    .map(|&a| {
                        let mut f = current.clone();
                        f[relay].alpha_values[bin] = a;
                        as_specs(&f)
                    })
                    .collect();
                let s = score(cfg, Objective::MonteCarloOutage, &candidates)?;
                evaluations += candidates.len();
                let pick = argmin(&s.keys, |_, _| false);
                let old = current[relay].alpha_values[bin];
                let new = grid[pick];
                if s.keys[pick] < key || (s.keys[pick] == key && new < old) {
                    current[relay].alpha_values[bin] = new;
                    key = s.keys[pick];
                    estimate = s.estimates[pick].expect("Monte-Carlo objective");
                    changed = true;
                }
            }
        }
        trace.push((iter, estimate.value));
        let tol = tol.unwrap_or(estimate.half_width_95);
        if !changed || before - estimate.value < tol {
            converged = true;
            break;
        }
    }

    Ok(SearchReport {
        best: current,
        best_objective: estimate.value,
        best_estimate: Some(estimate),
        evaluations,
        converged,
        trace,
        objectives: Vec::new(),
    })
}
