//! Relay scaling rules `α_i(g_sr_i)` and forwarding-mode selection.
//!
//! All thresholds are composite source-hop gains `g_sr = Γ_sr·|h_sr|²` in
//! linear units. A relay exactly at a threshold transmits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dstc::{Constellation, SymbolFrame};
use crate::error::{domain, Result};

/// Piecewise-constant scaling function over the composite gain.
///
/// Bin `k` covers `[bin_edges[k-1], bin_edges[k])`, with an implicit
/// `bin_edges[-1] = 0` and the last bin running to infinity, so there are
/// `bin_edges.len() + 1` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedAlphaFunction {
    pub bin_edges: Vec<f64>,
    pub alpha_values: Vec<f64>,
}

impl QuantizedAlphaFunction {
    pub fn new(bin_edges: Vec<f64>, alpha_values: Vec<f64>) -> Result<Self> {
        let q = Self {
            bin_edges,
            alpha_values,
        };
        q.validate()?;
        Ok(q)
    }

    /// One bin per relay at constant `alpha`.
    pub fn constant(alpha: f64) -> Self {
        Self {
            bin_edges: Vec::new(),
            alpha_values: vec![alpha],
        }
    }

    /// `per_decade` log-spaced edges per decade over `decades` decades on
    /// each side of `center` (which is itself an edge).
    pub fn log_spaced(center: f64, decades: usize, per_decade: usize, alpha: f64) -> Result<Self> {
        if !(center > 0.0) || per_decade == 0 {
            return Err(domain("log-spaced bins need a positive center and per_decade >= 1"));
        }
        let n = (decades * per_decade) as i64;
        let edges: Vec<f64> = (-n..=n)
            .map(|k| center * 10f64.powf(k as f64 / per_decade as f64))
            .collect();
        let values = vec![alpha; edges.len() + 1];
        Self::new(edges, values)
    }

    pub fn bins(&self) -> usize {
        self.alpha_values.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha_values.len() != self.bin_edges.len() + 1 {
            return Err(domain(format!(
                "{} bin edges need {} alpha values, got {}",
                self.bin_edges.len(),
                self.bin_edges.len() + 1,
                self.alpha_values.len()
            )));
        }
        if self.bin_edges.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(domain("bin edges must be positive and finite"));
        }
        if self.bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("bin edges must be strictly increasing"));
        }
        if self.alpha_values.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(domain("alpha values must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn bin_of(&self, g: f64) -> usize {
        self.bin_edges.partition_point(|&e| e <= g)
    }

    pub fn alpha(&self, g: f64) -> f64 {
        self.alpha_values[self.bin_of(g)]
    }
}

/// Relay scaling policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    FullPower,
    OnOff { threshold: f64 },
    PiecewiseLinear { tau1: f64, tau2: f64 },
    ThresholdDf { threshold: f64 },
    /// On-off below or at `t2` with threshold `onoff_threshold`, DF above `t2`.
    HybridAfDf { onoff_threshold: f64, t2: f64 },
    Tabulated(QuantizedAlphaFunction),
}

/// What a relay does with one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelayMode {
    Silent,
    Amplify(f64),
    Detect,
}

impl RelayMode {
    pub fn is_active(self) -> bool {
        !matches!(self, RelayMode::Silent)
    }

    /// Scaling factor applied to the forwarded signal; detect-and-forward
    /// relays transmit at full power.
    pub fn alpha(self) -> f64 {
        match self {
            RelayMode::Silent => 0.0,
            RelayMode::Amplify(a) => a,
            RelayMode::Detect => 1.0,
        }
    }
}

impl PolicySpec {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |x: f64, name: &str| {
            if x >= 0.0 && !x.is_nan() {
                Ok(())
            } else {
                Err(domain(format!("{name} must be >= 0, got {x}")))
            }
        };
        match self {
            PolicySpec::FullPower => Ok(()),
            PolicySpec::OnOff { threshold } | PolicySpec::ThresholdDf { threshold } => {
                nonneg(*threshold, "threshold")
            }
            PolicySpec::PiecewiseLinear { tau1, tau2 } => {
                nonneg(*tau1, "tau1")?;
                if tau1 < tau2 {
                    Ok(())
                } else {
                    Err(domain(format!("tau1 < tau2 required, got {tau1} >= {tau2}")))
                }
            }
            PolicySpec::HybridAfDf { onoff_threshold, t2 } => {
                nonneg(*onoff_threshold, "onoff_threshold")?;
                if onoff_threshold <= t2 {
                    Ok(())
                } else {
                    Err(domain(format!(
                        "onoff_threshold <= t2 required, got {onoff_threshold} > {t2}"
                    )))
                }
            }
            PolicySpec::Tabulated(q) => q.validate(),
        }
    }

    /// Gains at which the policy is discontinuous or has a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            PolicySpec::FullPower => Vec::new(),
            PolicySpec::OnOff { threshold } | PolicySpec::ThresholdDf { threshold } => {
                vec![*threshold]
            }
            PolicySpec::PiecewiseLinear { tau1, tau2 } => vec![*tau1, *tau2],
            PolicySpec::HybridAfDf { onoff_threshold, t2 } => vec![*onoff_threshold, *t2],
            PolicySpec::Tabulated(q) => q.bin_edges.clone(),
        }
        .into_iter()
        .filter(|x| x.is_finite() && *x > 0.0)
        .collect()
    }

    pub fn uses_detection(&self) -> bool {
        matches!(self, PolicySpec::ThresholdDf { .. } | PolicySpec::HybridAfDf { .. })
    }
}

/// `α(g)` for the policy; detect-and-forward kinds report 1 whenever the
/// relay transmits.
pub fn scaling_factor(p: &PolicySpec, g_sr: f64) -> f64 {
    relay_mode(p, g_sr).alpha()
}

pub fn relay_mode(p: &PolicySpec, g_sr: f64) -> RelayMode {
    let af = |alpha: f64| {
        if alpha > 0.0 {
            RelayMode::Amplify(alpha)
        } else {
            RelayMode::Silent
        }
    };
    match *p {
        PolicySpec::FullPower => RelayMode::Amplify(1.0),
        PolicySpec::OnOff { threshold } => af(if g_sr >= threshold { 1.0 } else { 0.0 }),
        PolicySpec::PiecewiseLinear { tau1, tau2 } => {
            let a = if g_sr < tau1 {
                0.0
            } else if g_sr < tau2 {
                (g_sr - tau1) / (tau2 - tau1)
            } else {
                1.0
            };
            af(a)
        }
        PolicySpec::ThresholdDf { threshold } => {
            if g_sr >= threshold {
                RelayMode::Detect
            } else {
                RelayMode::Silent
            }
        }
        PolicySpec::HybridAfDf { onoff_threshold, t2 } => {
            if g_sr < onoff_threshold {
                RelayMode::Silent
            } else if g_sr <= t2 {
                RelayMode::Amplify(1.0)
            } else {
                RelayMode::Detect
            }
        }
        PolicySpec::Tabulated(ref q) => af(q.alpha(g_sr)),
    }
}

/// Asymptotically optimal on-off threshold `ξ = γ_t / (P_s/N0)` on the
/// composite gain. Divide by `Γ_sr` for the threshold on `|h_sr|²`.
pub fn optimal_onoff_threshold(gamma_t: f64, ps_over_n0: f64) -> f64 {
    gamma_t / ps_over_n0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub frame: SymbolFrame,
    pub degenerate: bool,
}

/// Coherent per-symbol detection of `x[k]` from `u[k] = coefficient·x[k] + n`,
/// where `coefficient = √P_s·L_sr` as known to the relay.
pub fn df_detect(u: [Complex64; 2], coefficient: Complex64, constellation: Constellation) -> Detection {
    let mag = coefficient.norm_sqr();
    if mag == 0.0 {
        let p = constellation.points()[0];
        return Detection {
            frame: SymbolFrame { x: [p, p] },
            degenerate: true,
        };
    }
    let eq = |v: Complex64| v * coefficient.conj() / mag;
    Detection {
        frame: SymbolFrame {
            x: [
                constellation.nearest(eq(u[0])),
                constellation.nearest(eq(u[1])),
            ],
        },
        degenerate: false,
    }
}
