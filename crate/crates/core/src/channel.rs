//! Propagation and fading: the IEEE 802.16j terrain-B path-loss model,
//! per-link average SNR bookkeeping, Rayleigh block fading and the
//! pilot-estimation error model.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `10·log10(x)` for power ratios.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `10^(x/10)` for power ratios.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

/// Parameters of the intermediate path-loss condition (suburban terrain B,
/// above-roof-top transmitter to below-roof-top receiver).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub carrier_freq_mhz: f64,
    /// Reference distance in meters.
    pub d0: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Transmit (ART) antenna height in meters.
    pub h_b: f64,
    /// Receive (BRT) antenna height in meters.
    pub h_t: f64,
}

impl PathLossParams {
    /// 2.4 GHz carrier, `d0 = 100 m`, `a = 4`, `b = 0.0065`, `c = 17.1`,
    /// with the given antenna heights.
    pub fn terrain_b(h_b: f64, h_t: f64) -> Self {
        Self {
            carrier_freq_mhz: 2400.0,
            d0: 100.0,
            a: 4.0,
            b: 0.0065,
            c: 17.1,
            h_b,
            h_t,
        }
    }

    pub fn with_heights(self, h_b: f64, h_t: f64) -> Self {
        Self { h_b, h_t, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq_mhz", self.carrier_freq_mhz),
            ("d0", self.d0),
            ("h_b", self.h_b),
            ("h_t", self.h_t),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let beta = self.exponent();
        if !(beta > 0.0) {
            return Err(domain(format!("path-loss exponent must be positive, got {beta}")));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / (self.carrier_freq_mhz * 1e6)
    }

    /// Path-loss exponent `a − b·h_b + c/h_b`.
    pub fn exponent(&self) -> f64 {
        self.a - self.b * self.h_b + self.c / self.h_b
    }

    /// Carrier-frequency correction in dB.
    pub fn freq_correction_db(&self) -> f64 {
        6.0 * (self.carrier_freq_mhz / 2000.0).log10()
    }

    /// Receive-antenna-height correction in dB.
    pub fn height_correction_db(&self) -> f64 {
        if self.h_t <= 3.0 {
            -10.0 * (self.h_t / 3.0).log10()
        } else {
            -20.0 * (self.h_t / 3.0).log10()
        }
    }

    /// Breakpoint distance `d0'` where the free-space branch hands over.
    pub fn breakpoint(&self) -> f64 {
        let corr = self.freq_correction_db() + self.height_correction_db();
        self.d0 * 10f64.powf(-corr / (10.0 * self.exponent()))
    }

    fn free_space_db(&self, d: f64) -> f64 {
        20.0 * (4.0 * std::f64::consts::PI * d / self.wavelength()).log10()
    }

    fn far_db(&self, d: f64) -> f64 {
        let k = self.free_space_db(self.breakpoint());
        k + 10.0 * self.exponent() * (d / self.d0).log10()
            + self.freq_correction_db()
            + self.height_correction_db()
    }
}

/// Path loss in dB at distance `d` meters.
pub fn path_loss_db(d: f64, p: &PathLossParams) -> Result<f64> {
    p.validate()?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(domain(format!("distance must be positive and finite, got {d}")));
    }
    if d <= p.breakpoint() {
        Ok(p.free_space_db(d))
    } else {
        Ok(p.far_db(d))
    }
}

/// Node placement for the source, two relays and the destination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Source to relay distances in meters.
    pub d_sr: [f64; 2],
    /// Relay to destination distances in meters.
    pub d_rd: [f64; 2],
    pub bs_height: f64,
    pub rs_height: f64,
    pub ms_height: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        Self {
            d_sr: [5000.0, 8000.0],
            d_rd: [2000.0, 1000.0],
            bs_height: 32.0,
            rs_height: 15.0,
            ms_height: 1.5,
        }
    }
}

impl LinkGeometry {
    /// Per-link parameters: the source hop uses BS/RS heights, the relay hop RS/MS.
    pub fn link_params(&self, model: &PathLossParams) -> ([PathLossParams; 2], [PathLossParams; 2]) {
        let sr = model.with_heights(self.bs_height, self.rs_height);
        let rd = model.with_heights(self.rs_height, self.ms_height);
        ([sr, sr], [rd, rd])
    }
}

/// Transmit powers normalized by the noise density `N0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Powers {
    pub ps_over_n0: f64,
    pub pr_over_n0: [f64; 2],
}

/// Path gains and average SNRs of the four links.
///
/// Index `i` is relay `i + 1`. `snr_sr[i] == ps_over_n0 * gamma_sr[i]` and
/// `snr_rd[i] == pr_over_n0[i] * gamma_rd[i]` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub gamma_sr: [f64; 2],
    pub gamma_rd: [f64; 2],
    pub snr_sr: [f64; 2],
    pub snr_rd: [f64; 2],
    pub ps_over_n0: f64,
    pub pr_over_n0: [f64; 2],
}

impl LinkBudget {
    pub fn new(gamma_sr: [f64; 2], gamma_rd: [f64; 2], powers: Powers) -> Result<Self> {
        let all = gamma_sr
            .iter()
            .chain(&gamma_rd)
            .chain(&powers.pr_over_n0)
            .chain(std::iter::once(&powers.ps_over_n0));
        for &v in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("link budget entries must be positive, got {v}")));
            }
        }
        Ok(Self {
            gamma_sr,
            gamma_rd,
            snr_sr: [
                powers.ps_over_n0 * gamma_sr[0],
                powers.ps_over_n0 * gamma_sr[1],
            ],
            snr_rd: [
                powers.pr_over_n0[0] * gamma_rd[0],
                powers.pr_over_n0[1] * gamma_rd[1],
            ],
            ps_over_n0: powers.ps_over_n0,
            pr_over_n0: powers.pr_over_n0,
        })
    }

    /// Budget that realizes the given average SNRs (linear) directly.
    ///
    /// A single source power cannot produce two prescribed source-hop SNRs
    /// over unequal distances, so the source hop of relay 1 is the reference
    /// (`Γ_sr1 = 1`, `P_s/N0 = snr_sr1`) and relay 2 carries the ratio in its
    /// gain. Relay-hop gains are 1 with `P_r/N0 = snr_rd`. Every quantity the
    /// end-to-end SNR depends on is a product `P·Γ`, so this is equivalent to
    /// any geometry with the same SNRs.
    pub fn from_snrs(snr_sr: [f64; 2], snr_rd: [f64; 2]) -> Result<Self> {
        let ps = snr_sr[0];
        Self::new(
            [1.0, snr_sr[1] / ps],
            [1.0, 1.0],
            Powers {
                ps_over_n0: ps,
                pr_over_n0: snr_rd,
            },
        )
    }

    /// Symmetric budget from dB values: both source hops at `snr_sr_db`,
    /// both relay hops at `snr_rd_db`.
    pub fn symmetric_db(snr_sr_db: f64, snr_rd_db: f64) -> Result<Self> {
        let sr = db_to_linear(snr_sr_db);
        let rd = db_to_linear(snr_rd_db);
        Self::from_snrs([sr, sr], [rd, rd])
    }
}

/// Path gains from geometry, then SNRs from the transmit powers.
pub fn build_link_budget(
    geometry: &LinkGeometry,
    powers: Powers,
    model: &PathLossParams,
) -> Result<LinkBudget> {
    let (sr, rd) = geometry.link_params(model);
    let gain = |d: f64, p: &PathLossParams| path_loss_db(d, p).map(|l| db_to_linear(-l));
    LinkBudget::new(
        [gain(geometry.d_sr[0], &sr[0])?, gain(geometry.d_sr[1], &sr[1])?],
        [gain(geometry.d_rd[0], &rd[0])?, gain(geometry.d_rd[1], &rd[1])?],
        powers,
    )
}

/// One block-fading draw of the four small-scale coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    pub h_sr: [Complex64; 2],
    pub h_rd: [Complex64; 2],
}

impl ChannelRealization {
    pub fn from_real(h_sr: [f64; 2], h_rd: [f64; 2]) -> Self {
        Self {
            h_sr: h_sr.map(|x| Complex64::new(x, 0.0)),
            h_rd: h_rd.map(|x| Complex64::new(x, 0.0)),
        }
    }

    /// Normalized fading gains `|h_sr_i|²`.
    pub fn fading_gains(&self) -> [f64; 2] {
        self.h_sr.map(|h| h.norm_sqr())
    }
}

/// Circularly symmetric complex Gaussian with total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draws `h_sr1, h_sr2, h_r1d, h_r2d` in that order, each `CN(0, 1)`.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R) -> ChannelRealization {
    let h_sr = [complex_gaussian(rng, 1.0), complex_gaussian(rng, 1.0)];
    let h_rd = [complex_gaussian(rng, 1.0), complex_gaussian(rng, 1.0)];
    ChannelRealization { h_sr, h_rd }
}

/// Variances of the additive channel-estimation errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationErrorModel {
    pub var_sr: [f64; 2],
    pub var_rd: [f64; 2],
}

impl EstimationErrorModel {
    pub fn perfect() -> Self {
        Self {
            var_sr: [0.0; 2],
            var_rd: [0.0; 2],
        }
    }

    /// Error variance equal to the inverse average SNR of each link.
    pub fn from_link_budget(lb: &LinkBudget) -> Self {
        Self {
            var_sr: lb.snr_sr.map(|s| 1.0 / s),
            var_rd: lb.snr_rd.map(|s| 1.0 / s),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &v in self.var_sr.iter().chain(&self.var_rd) {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain(format!("estimation error variance must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedChannel {
    pub true_channel: ChannelRealization,
    pub estimated: ChannelRealization,
}

/// `ĥ = h + e` per link; errors are drawn in the order sr1, sr2, r1d, r2d.
pub fn apply_estimation_error<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    m: &EstimationErrorModel,
    rng: &mut R,
) -> EstimatedChannel {
    let mut est = *ch;
    for i in 0..2 {
        est.h_sr[i] += complex_gaussian(rng, m.var_sr[i]);
    }
    for i in 0..2 {
        est.h_rd[i] += complex_gaussian(rng, m.var_rd[i]);
    }
    EstimatedChannel {
        true_channel: *ch,
        estimated: est,
    }
}
