//! Subcommand implementations. Each one resolves its configuration, runs
//! the experiment and returns the CSV rows.

use anyhow::Result;
use dstc_core::channel::LinkGeometry;
use dstc_core::optimize::threshold_search;
use dstc_core::sim::{estimate_ber_many, estimate_outage_many, point_seed, sweep};
use dstc_core::{
    db_to_linear, linear_to_db, outage_asymptotic, path_loss_db, AsymptoticContext, Constellation,
    EstimationErrorModel, LinkBudget, Metric, Objective, PathLossParams, PolicyRule, PolicySpec, QuadOptions,
    SimConfig, SweepVariable,
};

use crate::config::{
    config_error, ConstellationName, ExperimentConfig, GridSection, LinkSection, Method, MetricName,
    OptimizeSection, PathLossSection, PolicyKind, PolicySection, QuadratureSection,
};
use crate::output::Table;

const DEFAULT_SEED: u64 = 1;
const DEFAULT_TRIALS: u64 = 100_000;

fn db_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|k| start + step * k as f64).collect()
}

fn resolve_link(cfg: &mut ExperimentConfig) {
    let link = cfg.link.get_or_insert_with(LinkSection::default);
    link.snr_sr_db.get_or_insert([25.0, 25.0]);
    link.snr_rd_db.get_or_insert([40.0, 40.0]);
    link.gamma_t_db.get_or_insert(10.0);
}

fn resolve_run(cfg: &mut ExperimentConfig, default_policies: &[PolicyKind]) -> Result<()> {
    cfg.seed.get_or_insert(DEFAULT_SEED);
    cfg.trials.get_or_insert(DEFAULT_TRIALS);
    cfg.method.get_or_insert(Method::Mc);
    cfg.constellation.get_or_insert(ConstellationName::Bpsk);
    cfg.estimation_error.get_or_insert(false);
    if default_policies.is_empty() {
        // the command chooses its own policies
        cfg.policies = None;
        cfg.policy = None;
    } else if cfg.policies.get_or_insert_with(|| default_policies.to_vec()).is_empty() {
        return Err(config_error("`policies` must name at least one policy"));
    }
    if cfg.trials == Some(0) {
        return Err(config_error("`trials` must be >= 1"));
    }
    cfg.pathloss = None;
    resolve_link(cfg);
    check_policy_params(cfg)
}

/// Keeps only the policy parameters the selected policies use and reports
/// the first missing one.
fn check_policy_params(cfg: &mut ExperimentConfig) -> Result<()> {
    let given = cfg.policy.take().unwrap_or_default();
    let mut used = PolicySection::default();
    let need = |v: Option<f64>, key: &str, kind: PolicyKind| {
        v.ok_or_else(|| config_error(format!("policy `{}` needs `policy.{key}`", kind.name())))
    };
    for &kind in cfg.policies.as_deref().unwrap_or_default() {
        match kind {
            PolicyKind::Onoff | PolicyKind::Df => used.threshold_db = Some(need(given.threshold_db, "threshold_db", kind)?),
            PolicyKind::Piecewise => {
                used.tau1_db = Some(need(given.tau1_db, "tau1_db", kind)?);
                used.tau2_db = Some(need(given.tau2_db, "tau2_db", kind)?);
            }
            PolicyKind::Hybrid => {
                used.threshold_db = Some(need(given.threshold_db, "threshold_db", kind)?);
                used.t2_db = Some(need(given.t2_db, "t2_db", kind)?);
            }
            PolicyKind::Full | PolicyKind::OnoffXi => {}
        }
    }
    if used != PolicySection::default() {
        cfg.policy = Some(used);
    }
    Ok(())
}

fn link_budget(link: &LinkSection) -> Result<LinkBudget> {
    let sr = link.snr_sr_db.expect("resolved").map(db_to_linear);
    let rd = link.snr_rd_db.expect("resolved").map(db_to_linear);
    Ok(LinkBudget::from_snrs(sr, rd)?)
}

/// Policies of both relays; thresholds in dB on `|h_sr|²` become composite
/// gains through each relay's path gain.
fn policy_rule(kind: PolicyKind, p: &PolicySection, lb: &LinkBudget) -> PolicyRule {
    let g = |db: Option<f64>, i: usize| db_to_linear(db.expect("checked")) * lb.gamma_sr[i];
    let per_relay = |f: &dyn Fn(usize) -> PolicySpec| PolicyRule::Fixed([f(0), f(1)]);
    match kind {
        PolicyKind::Full => PolicyRule::uniform(PolicySpec::FullPower),
        PolicyKind::OnoffXi => PolicyRule::OnOffAtXi,
        PolicyKind::Onoff => per_relay(&|i| PolicySpec::OnOff { threshold: g(p.threshold_db, i) }),
        PolicyKind::Df => per_relay(&|i| PolicySpec::ThresholdDf { threshold: g(p.threshold_db, i) }),
        PolicyKind::Piecewise => per_relay(&|i| PolicySpec::PiecewiseLinear {
            tau1: g(p.tau1_db, i),
            tau2: g(p.tau2_db, i),
        }),
        PolicyKind::Hybrid => per_relay(&|i| PolicySpec::HybridAfDf {
            onoff_threshold: g(p.threshold_db, i),
            t2: g(p.t2_db, i),
        }),
    }
}

fn sim_config(cfg: &ExperimentConfig, policy: PolicyRule) -> Result<SimConfig> {
    let link = cfg.link.as_ref().expect("resolved");
    let lb = link_budget(link)?;
    let mut sim = SimConfig::new(lb, db_to_linear(link.gamma_t_db.expect("resolved")), policy);
    sim.trials = cfg.trials.expect("resolved");
    sim.master_seed = cfg.seed.expect("resolved");
    sim.constellation = match cfg.constellation.expect("resolved") {
        ConstellationName::Bpsk => Constellation::Bpsk,
        ConstellationName::Qpsk => Constellation::Qpsk,
    };
    if cfg.estimation_error == Some(true) {
        sim.estimation_error = Some(EstimationErrorModel::from_link_budget(&lb));
    }
    Ok(sim)
}

fn policy_params(cfg: &ExperimentConfig) -> PolicySection {
    cfg.policy.clone().unwrap_or_default()
}

fn grid_values(cfg: &mut ExperimentConfig, default: Vec<f64>) -> Result<Vec<f64>> {
    let grid = cfg.grid.get_or_insert_with(GridSection::default);
    let values = grid.values.get_or_insert(default).clone();
    if values.is_empty() {
        return Err(config_error("`grid.values` is empty"));
    }
    Ok(values)
}

/// Quadrature settings for asymptotic runs; dropped from Monte-Carlo configs.
fn quad_options(cfg: &mut ExperimentConfig) -> Result<QuadOptions> {
    if cfg.method != Some(Method::Asymptotic) {
        cfg.quadrature = None;
        return Ok(QuadOptions::default());
    }
    let d = QuadOptions::default();
    let q = cfg.quadrature.get_or_insert_with(QuadratureSection::default);
    let opts = QuadOptions {
        abs_tol: *q.abs_tol.get_or_insert(d.abs_tol),
        max_evaluations: *q.max_evaluations.get_or_insert(d.max_evaluations),
    };
    if !(opts.abs_tol > 0.0) {
        return Err(config_error("`quadrature.abs_tol` must be positive"));
    }
    Ok(opts)
}

fn bool_cell(b: bool) -> String {
    b.to_string()
}

pub fn pathloss(mut cfg: ExperimentConfig) -> Result<(ExperimentConfig, Table)> {
    let p = cfg.pathloss.get_or_insert_with(PathLossSection::default).clone();
    let model = PathLossParams {
        carrier_freq_mhz: p.carrier_freq_mhz,
        d0: p.d0,
        a: p.a,
        b: p.b,
        c: p.c,
        h_b: p.bs_height,
        h_t: p.rs_height,
    };
    let geometry = LinkGeometry {
        d_sr: p.d_sr,
        d_rd: p.d_rd,
        bs_height: p.bs_height,
        rs_height: p.rs_height,
        ms_height: p.ms_height,
    };
    let (sr, rd) = geometry.link_params(&model);
    let mut table = Table::new(&["link", "distance_m", "pathloss_db", "gamma_linear"]);
    let links = [
        ("sr1", p.d_sr[0], sr[0]),
        ("sr2", p.d_sr[1], sr[1]),
        ("r1d", p.d_rd[0], rd[0]),
        ("r2d", p.d_rd[1], rd[1]),
    ];
    for (name, d, params) in links {
        let l = path_loss_db(d, &params).map_err(|e| config_error(format!("pathloss: {e}")))?;
        table.push(vec![name.to_string(), d.to_string(), l.to_string(), format!("{:e}", db_to_linear(-l))]);
    }
    Ok((cfg, table))
}

pub fn outage(mut cfg: ExperimentConfig) -> Result<(ExperimentConfig, Table)> {
    resolve_run(&mut cfg, &[PolicyKind::OnoffXi, PolicyKind::Full])?;
    cfg.optimize = None;
    let grid = grid_values(&mut cfg, db_grid(0.0, 30.0, 2.5))?;
    let method = cfg.method.expect("resolved");
    let quad = quad_options(&mut cfg)?;
    let kinds = cfg.policies.clone().expect("resolved");
    let params = policy_params(&cfg);
    let base = sim_config(&cfg, PolicyRule::OnOffAtXi)?;
    if method == Method::Asymptotic {
        if let Some(k) = kinds.iter().find(|k| matches!(k, PolicyKind::Df | PolicyKind::Hybrid)) {
            return Err(config_error(format!(
                "policy `{}` forwards detected symbols and has no asymptotic outage; use --method mc",
                k.name()
            )));
        }
    }

    let mut table = Table::new(&[
        "gamma_t_db",
        "policy",
        "method",
        "estimate",
        "ci_half_width",
        "trials",
        "events",
        "low_confidence",
        "df_surrogate",
    ]);
    for (i, &gt) in grid.iter().enumerate() {
        let mut point = base.clone();
        point.system.gamma_t = db_to_linear(gt);
        point.master_seed = point_seed(base.master_seed, i);
        let candidates: Vec<[PolicySpec; 2]> = kinds
            .iter()
            .map(|&k| {
                let mut c = point.clone();
                c.policy = policy_rule(k, &params, &point.link_budget);
                c.resolved_policies()
            })
            .collect();
        match method {
            Method::Mc => {
                let reports = estimate_outage_many(&point, &candidates)?;
                for (k, r) in kinds.iter().zip(reports) {
                    table.push(vec![
                        gt.to_string(),
                        k.name().to_string(),
                        "mc".to_string(),
                        r.metric.value.to_string(),
                        r.metric.half_width_95.to_string(),
                        r.metric.trials.to_string(),
                        r.metric.event_count.to_string(),
                        bool_cell(r.metric.low_confidence()),
                        bool_cell(r.uses_df_surrogate()),
                    ]);
                }
            }
            Method::Asymptotic => {
                for (k, c) in kinds.iter().zip(candidates) {
                    let ctx = AsymptoticContext::new(&point.link_budget, point.system.gamma_t, c);
                    let q = outage_asymptotic(&ctx, quad)?;
                    table.push(vec![
                        gt.to_string(),
                        k.name().to_string(),
                        "asymptotic".to_string(),
                        q.value.to_string(),
                        q.error_bound.to_string(),
                        String::new(),
                        String::new(),
                        bool_cell(false),
                        bool_cell(false),
                    ]);
                }
            }
        }
    }
    Ok((cfg, table))
}

pub fn ber(mut cfg: ExperimentConfig) -> Result<(ExperimentConfig, Table)> {
    resolve_run(&mut cfg, &[PolicyKind::Full])?;
    if cfg.method == Some(Method::Asymptotic) {
        return Err(config_error("ber has no asymptotic method; use --method mc"));
    }
    cfg.optimize = None;
    cfg.quadrature = None;
    let grid = grid_values(&mut cfg, db_grid(0.0, 40.0, 5.0))?;
    let kinds = cfg.policies.clone().expect("resolved");
    let params = policy_params(&cfg);
    let base = sim_config(&cfg, PolicyRule::OnOffAtXi)?;
    let mut table = Table::new(&[
        "snr_rd_db",
        "policy",
        "ber",
        "ci_half_width",
        "bits",
        "bit_errors",
        "low_confidence",
    ]);
    for (i, &rd) in grid.iter().enumerate() {
        let mut point = SweepVariable::SnrRdDb.apply(&base, rd)?;
        point.master_seed = point_seed(base.master_seed, i);
        let candidates: Vec<[PolicySpec; 2]> = kinds
            .iter()
            .map(|&k| {
                let mut c = point.clone();
                c.policy = policy_rule(k, &params, &point.link_budget);
                c.resolved_policies()
            })
            .collect();
        for (k, m) in kinds.iter().zip(estimate_ber_many(&point, &candidates)?) {
            table.push(vec![
                rd.to_string(),
                k.name().to_string(),
                m.value.to_string(),
                m.half_width_95.to_string(),
                m.trials.to_string(),
                m.event_count.to_string(),
                bool_cell(m.low_confidence()),
            ]);
        }
    }
    Ok((cfg, table))
}

pub fn optimize(mut cfg: ExperimentConfig) -> Result<(ExperimentConfig, Table)> {
    resolve_run(&mut cfg, &[])?;
    cfg.grid = None;
    let o = cfg.optimize.get_or_insert_with(OptimizeSection::default);
    let gammas = o.gamma_t_db.get_or_insert_with(|| db_grid(0.0, 30.0, 10.0)).clone();
    let rds = o.snr_rd_db.get_or_insert_with(|| db_grid(0.0, 40.0, 10.0)).clone();
    let thresholds = o.threshold_db.get_or_insert_with(|| db_grid(-30.0, 0.0, 2.5)).clone();
    if gammas.is_empty() || rds.is_empty() || thresholds.is_empty() {
        return Err(config_error("`optimize` grids must be nonempty"));
    }
    let quad = quad_options(&mut cfg)?;
    let objective = match cfg.method.expect("resolved") {
        Method::Mc => Objective::MonteCarloOutage,
        Method::Asymptotic => Objective::Asymptotic(quad),
    };
    let base = sim_config(&cfg, PolicyRule::OnOffAtXi)?;
    let mut table = Table::new(&[
        "gamma_t_db",
        "snr_rd_db",
        "best_threshold_db",
        "objective",
        "ci_half_width",
        "xi_db",
    ]);
    let mut cell = 0;
    for &gt in &gammas {
        for &rd in &rds {
            let mut c = SweepVariable::SnrRdDb.apply(&base, rd)?;
            c.system.gamma_t = db_to_linear(gt);
            c.master_seed = point_seed(base.master_seed, cell);
            cell += 1;
            let r = threshold_search(&c, &thresholds, objective)?;
            table.push(vec![
                gt.to_string(),
                rd.to_string(),
                r.best.to_string(),
                r.best_objective.to_string(),
                r.best_estimate.map_or(String::new(), |e| e.half_width_95.to_string()),
                linear_to_db(c.xi() / c.link_budget.gamma_sr[0]).to_string(),
            ]);
        }
    }
    Ok((cfg, table))
}

pub fn sweep_cmd(mut cfg: ExperimentConfig) -> Result<(ExperimentConfig, Table)> {
    resolve_run(&mut cfg, &[PolicyKind::OnoffXi])?;
    let kinds = cfg.policies.clone().expect("resolved");
    if kinds.len() != 1 {
        return Err(config_error("sweep runs exactly one policy"));
    }
    if cfg.method == Some(Method::Asymptotic) {
        return Err(config_error("sweep runs Monte-Carlo only; use `outage --method asymptotic`"));
    }
    cfg.optimize = None;
    cfg.quadrature = None;
    let grid = cfg.grid.get_or_insert_with(GridSection::default);
    let name = grid.variable.get_or_insert_with(|| "gamma_t_db".to_string()).clone();
    let variable = SweepVariable::from_name(&name)?;
    let metric_name = *grid.metric.get_or_insert(MetricName::Outage);
    let default_values = match variable {
        SweepVariable::GammaTDb => db_grid(0.0, 30.0, 2.5),
        SweepVariable::SnrRdDb => db_grid(0.0, 40.0, 5.0),
        SweepVariable::SnrSrDb => db_grid(10.0, 40.0, 5.0),
    };
    let values = grid_values(&mut cfg, default_values)?;
    let params = policy_params(&cfg);
    let mut base = sim_config(&cfg, PolicyRule::OnOffAtXi)?;
    base.policy = policy_rule(kinds[0], &params, &base.link_budget);
    let metric = match metric_name {
        MetricName::Outage => Metric::Outage,
        MetricName::Ber => Metric::Ber,
    };
    let result = sweep(&base, variable, &values, metric)?;
    let metric_label = match metric {
        Metric::Outage => "outage",
        Metric::Ber => "ber",
    };
    let mut table = Table::new(&[
        variable.name(),
        "policy",
        "metric",
        "value",
        "ci_half_width",
        "trials",
        "events",
        "low_confidence",
    ]);
    for row in result.rows {
        let e = row.estimate;
        table.push(vec![
            row.x.to_string(),
            kinds[0].name().to_string(),
            metric_label.to_string(),
            e.value.to_string(),
            e.half_width_95.to_string(),
            e.trials.to_string(),
            e.event_count.to_string(),
            bool_cell(e.low_confidence()),
        ]);
    }
    Ok((cfg, table))
}
