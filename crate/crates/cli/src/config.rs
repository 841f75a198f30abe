//! Experiment configuration: TOML file, command-line overrides and the
//! fully resolved form written into every CSV header.

use std::fmt;
use std::path::Path;

use anyhow::Context;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

/// A configuration problem; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mc,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Full,
    Onoff,
    OnoffXi,
    Piecewise,
    Df,
    Hybrid,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Full => "full",
            PolicyKind::Onoff => "onoff",
            PolicyKind::OnoffXi => "onoff-xi",
            PolicyKind::Piecewise => "piecewise",
            PolicyKind::Df => "df",
            PolicyKind::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationName {
    Bpsk,
    Qpsk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Outage,
    Ber,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub snr_sr_db: Option<[f64; 2]>,
    pub snr_rd_db: Option<[f64; 2]>,
    pub gamma_t_db: Option<f64>,
}

/// Policy parameters. Thresholds are in dB on the unit-mean fading gain.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub threshold_db: Option<f64>,
    pub tau1_db: Option<f64>,
    pub tau2_db: Option<f64>,
    pub t2_db: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Sweep variable: `gamma_t_db`, `snr_rd_db` or `snr_sr_db`.
    pub variable: Option<String>,
    pub metric: Option<MetricName>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub gamma_t_db: Option<Vec<f64>>,
    pub snr_rd_db: Option<Vec<f64>>,
    pub threshold_db: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub abs_tol: Option<f64>,
    pub max_evaluations: Option<usize>,
}

/// Path-loss model and node placement. The carrier frequency is required
/// whenever the section is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossSection {
    pub carrier_freq_mhz: f64,
    #[serde(default = "defaults::d0")]
    pub d0: f64,
    #[serde(default = "defaults::a")]
    pub a: f64,
    #[serde(default = "defaults::b")]
    pub b: f64,
    #[serde(default = "defaults::c")]
    pub c: f64,
    #[serde(default = "defaults::bs_height")]
    pub bs_height: f64,
    #[serde(default = "defaults::rs_height")]
    pub rs_height: f64,
    #[serde(default = "defaults::ms_height")]
    pub ms_height: f64,
    #[serde(default = "defaults::d_sr")]
    pub d_sr: [f64; 2],
    #[serde(default = "defaults::d_rd")]
    pub d_rd: [f64; 2],
}

mod defaults {
    use dstc_core::{LinkGeometry, PathLossParams};

    fn model() -> PathLossParams {
        PathLossParams::terrain_b(32.0, 15.0)
    }
    pub fn carrier_freq_mhz() -> f64 {
        model().carrier_freq_mhz
    }
    pub fn d0() -> f64 {
        model().d0
    }
    pub fn a() -> f64 {
        model().a
    }
    pub fn b() -> f64 {
        model().b
    }
    pub fn c() -> f64 {
        model().c
    }
    pub fn bs_height() -> f64 {
        LinkGeometry::default().bs_height
    }
    pub fn rs_height() -> f64 {
        LinkGeometry::default().rs_height
    }
    pub fn ms_height() -> f64 {
        LinkGeometry::default().ms_height
    }
    pub fn d_sr() -> [f64; 2] {
        LinkGeometry::default().d_sr
    }
    pub fn d_rd() -> [f64; 2] {
        LinkGeometry::default().d_rd
    }
}

impl Default for PathLossSection {
    fn default() -> Self {
        Self {
            carrier_freq_mhz: defaults::carrier_freq_mhz(),
            d0: defaults::d0(),
            a: defaults::a(),
            b: defaults::b(),
            c: defaults::c(),
            bs_height: defaults::bs_height(),
            rs_height: defaults::rs_height(),
            ms_height: defaults::ms_height(),
            d_sr: defaults::d_sr(),
            d_rd: defaults::d_rd(),
        }
    }
}

/// Everything an experiment needs. Every field is optional in a file; the
/// resolved form written to CSV headers has every relevant field set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub method: Option<Method>,
    pub policies: Option<Vec<PolicyKind>>,
    pub constellation: Option<ConstellationName>,
    pub estimation_error: Option<bool>,
    pub link: Option<LinkSection>,
    pub policy: Option<PolicySection>,
    pub grid: Option<GridSection>,
    pub optimize: Option<OptimizeSection>,
    pub quadrature: Option<QuadratureSection>,
    pub pathloss: Option<PathLossSection>,
}

pub const HEADER_TAG: &str = "# dstc ";

/// Parses a TOML config, or the provenance header of a CSV written by this
/// tool.
pub fn parse_config(text: &str) -> anyhow::Result<ExperimentConfig> {
    let toml_text = if text.starts_with(HEADER_TAG) {
        text.lines()
            .skip(1)
            .map_while(|l| l.strip_prefix('#'))
            .map(|l| l.strip_prefix(' ').unwrap_or(l))
            .collect::<Vec<_>>()
            .join("\n")
    } else {
        text.to_string()
    };
    toml::from_str(&toml_text).map_err(|e| config_error(e.to_string()))
}

pub fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

/// Expands `start:stop:step` or a comma-separated list into grid values.
pub fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let bad = || config_error(format!("cannot parse grid `{spec}` (use start:stop:step or a,b,c)"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| start + step * k as f64).collect());
    }
    if parts.len() != 1 {
        return Err(bad());
    }
    spec.split(',').map(num).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:10:2.5").unwrap(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert_eq!(parse_grid("1, 3,-2").unwrap(), vec![1.0, 3.0, -2.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("5:0:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse_config("sead = 3").unwrap_err();
        assert!(e.to_string().contains("sead"), "{e}");
        let e = parse_config("[link]\nsnr_db = [1.0, 2.0]").unwrap_err();
        assert!(e.to_string().contains("snr_db"), "{e}");
    }

    #[test]
    fn pathloss_section_requires_carrier() {
        let e = parse_config("[pathloss]\nd0 = 100.0").unwrap_err();
        assert!(e.to_string().contains("carrier_freq_mhz"), "{e}");
        let c = parse_config("[pathloss]\ncarrier_freq_mhz = 2400.0").unwrap();
        assert_eq!(c.pathloss.unwrap(), PathLossSection::default());
    }

    #[test]
    fn header_round_trip() {
        let cfg = ExperimentConfig {
            seed: Some(9),
            policies: Some(vec![PolicyKind::OnoffXi, PolicyKind::Full]),
            link: Some(LinkSection {
                snr_sr_db: Some([25.0, 25.0]),
                snr_rd_db: None,
                gamma_t_db: Some(10.0),
            }),
            ..Default::default()
        };
        let body = toml::to_string(&cfg).unwrap();
        let header: String = std::iter::once("# dstc 0.1.0 outage".to_string())
            .chain(body.lines().map(|l| format!("# {l}")))
            .chain(["gamma_t_db,policy".to_string()])
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(parse_config(&header).unwrap(), cfg);
    }
}
