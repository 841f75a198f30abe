//! Two-phase distributed Alamouti signal chain.
//!
//! Phase one: the source broadcasts `x[1], x[2]` to both relays. Phase two:
//! each relay normalizes its observations, removes the source-hop phase and
//! forwards one column of the Alamouti matrix. The destination sees
//!
//! ```text
//! [r_d[1], r_d[2]*]ᵀ = [[L'_1, L'_2], [L'_2*, -L'_1*]] · x + z
//! ```
//!
//! with `E[z z† | h] = σ² I`. Everything is expressed in units of `N0 = 1`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::channel::{complex_gaussian, ChannelRealization, LinkBudget};
use crate::error::{domain, Result};
use crate::policy::{df_detect, RelayMode};

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const BPSK: [Complex64; 2] = [c(1.0, 0.0), c(-1.0, 0.0)];
const QPSK: [Complex64; 4] = [
    c(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    c(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    c(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    c(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// Unit-energy constellation. Point `k` carries the bit label `k`; QPSK is
/// Gray mapped (first bit on the in-phase sign, second on quadrature).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    Bpsk,
    Qpsk,
}

impl Constellation {
    pub fn points(self) -> &'static [Complex64] {
        match self {
            Constellation::Bpsk => &BPSK,
            Constellation::Qpsk => &QPSK,
        }
    }

    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Constellation::Bpsk => 1,
            Constellation::Qpsk => 2,
        }
    }

    /// Label of the minimum-distance point. Ties resolve to the positive side.
    pub fn nearest_label(self, z: Complex64) -> usize {
        let neg = |v: f64| usize::from(v < 0.0);
        match self {
            Constellation::Bpsk => neg(z.re),
            Constellation::Qpsk => 2 * neg(z.re) + neg(z.im),
        }
    }

    pub fn nearest(self, z: Complex64) -> Complex64 {
        self.points()[self.nearest_label(z)]
    }

    /// Number of differing bits between the labels of two points.
    pub fn bit_errors(self, sent: Complex64, decided: Complex64) -> u32 {
        (self.nearest_label(sent) ^ self.nearest_label(decided)).count_ones()
    }

    pub fn random_symbol<R: Rng + ?Sized>(self, rng: &mut R) -> Complex64 {
        let pts = self.points();
        pts[rng.random_range(0..pts.len())]
    }
}

/// Outage threshold on the end-to-end SNR. Powers live in [`LinkBudget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub gamma_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolFrame {
    pub x: [Complex64; 2],
}

impl SymbolFrame {
    pub fn random<R: Rng + ?Sized>(constellation: Constellation, rng: &mut R) -> Self {
        let a = constellation.random_symbol(rng);
        let b = constellation.random_symbol(rng);
        Self { x: [a, b] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedFrame {
    pub rd: [Complex64; 2],
}

/// Composite coefficients seen by the destination for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveChannel {
    pub l: [Complex64; 2],
    /// `|L'_1|² + |L'_2|²`.
    pub lambda: f64,
    /// Equivalent noise power per received sample.
    pub sigma_sq: f64,
}

impl EffectiveChannel {
    /// Row-major `[[L'_1, L'_2], [L'_2*, -L'_1*]]`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let [l1, l2] = self.l;
        [[l1, l2], [l2.conj(), -l1.conj()]]
    }
}

/// `𝓛†𝓛` for any 2×2 matrix.
pub fn gram(m: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
        }
    }
    out
}

fn check_alpha(alpha: [f64; 2]) -> Result<()> {
    for a in alpha {
        if !(0.0..=1.0).contains(&a) {
            return Err(domain(format!("scaling factor must lie in [0, 1], got {a}")));
        }
    }
    Ok(())
}

/// Effective channel for amplify-and-forward relays with scaling `alpha`.
pub fn effective_channel(
    ch: &ChannelRealization,
    lb: &LinkBudget,
    alpha: [f64; 2],
) -> Result<EffectiveChannel> {
    check_alpha(alpha)?;
    let modes = alpha.map(|a| {
        if a > 0.0 {
            RelayMode::Amplify(a)
        } else {
            RelayMode::Silent
        }
    });
    Ok(effective_channel_for_modes(ch, lb, modes))
}

/// Effective channel when each relay normalizes with the gain it believes,
/// `relay_csi`, while the signal travels over `ch`.
///
/// A detect-and-forward branch contributes the noiseless full-power
/// amplitude and nothing to `σ²`.
pub fn effective_channel_mismatched(
    ch: &ChannelRealization,
    relay_csi: &ChannelRealization,
    lb: &LinkBudget,
    modes: [RelayMode; 2],
) -> EffectiveChannel {
    let ps = lb.ps_over_n0;
    let mut l = [Complex64::new(0.0, 0.0); 2];
    let mut noise = 0.0;
    for i in 0..2 {
        let g = lb.gamma_sr[i] * ch.h_sr[i].norm_sqr();
        let g_known = lb.gamma_sr[i] * relay_csi.h_sr[i].norm_sqr();
        let pr = lb.pr_over_n0[i];
        let l_rd = lb.gamma_rd[i].sqrt() * ch.h_rd[i];
        let denom = ps * g_known + 1.0;
        match modes[i] {
            RelayMode::Silent => {}
            RelayMode::Amplify(a) => {
                l[i] = l_rd * (a * ps * pr * g / denom).sqrt();
                // |L'|²·N0/(g·P_s) without dividing by g
                noise += a * pr * l_rd.norm_sqr() / denom;
            }
            RelayMode::Detect => {
                l[i] = l_rd * (ps * pr * g_known / denom).sqrt();
            }
        }
    }
    EffectiveChannel {
        l,
        lambda: l[0].norm_sqr() + l[1].norm_sqr(),
        sigma_sq: noise + 1.0,
    }
}

pub fn effective_channel_for_modes(
    ch: &ChannelRealization,
    lb: &LinkBudget,
    modes: [RelayMode; 2],
) -> EffectiveChannel {
    effective_channel_mismatched(ch, ch, lb, modes)
}

/// Instantaneous end-to-end SNR `Λ/σ²` (zero when no relay is heard).
pub fn end_to_end_snr(ec: &EffectiveChannel) -> f64 {
    if ec.lambda > 0.0 {
        ec.lambda / ec.sigma_sq
    } else {
        0.0
    }
}

/// `e^{-jθ}` for a source-hop coefficient; 1 for a zero coefficient.
pub fn phase_factor(h: Complex64) -> Complex64 {
    let m = h.norm();
    if m > 0.0 {
        h.conj() / m
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// Relay transmissions `tx[slot][relay]` from normalized observations
/// `y[relay][slot]`, following the distributed Alamouti schedule.
pub fn relay_encode(
    y: [[Complex64; 2]; 2],
    h_sr_known: [Complex64; 2],
    alpha: [f64; 2],
    phase_compensation: bool,
) -> [[Complex64; 2]; 2] {
    let p = h_sr_known.map(|h| {
        if phase_compensation {
            phase_factor(h)
        } else {
            Complex64::new(1.0, 0.0)
        }
    });
    let s = alpha.map(f64::sqrt);
    [
        [s[0] * p[0] * y[0][0], s[1] * p[1] * y[1][1]],
        [-s[0] * (p[0] * y[0][1]).conj(), s[1] * (p[1] * y[1][0]).conj()],
    ]
}

/// Unit-variance noise samples for one block: relay noise `relay[i][k]`
/// and destination noise `dest[k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameNoise {
    pub relay: [[Complex64; 2]; 2],
    pub dest: [Complex64; 2],
}

impl FrameNoise {
    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            relay: [[z; 2]; 2],
            dest: [z; 2],
        }
    }

    /// Draws relay 1 slots 1–2, relay 2 slots 1–2, then destination slots 1–2.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut n = Self::zero();
        for relay in n.relay.iter_mut() {
            for v in relay.iter_mut() {
                *v = complex_gaussian(rng, 1.0);
            }
        }
        for v in n.dest.iter_mut() {
            *v = complex_gaussian(rng, 1.0);
        }
        n
    }
}

/// Everything fixed for one block except the symbols and the noise.
#[derive(Debug, Clone, Copy)]
pub struct FrameContext<'a> {
    pub link_budget: &'a LinkBudget,
    /// Physical channel.
    pub channel: &'a ChannelRealization,
    /// What each relay knows about its source hop (equals `channel` under
    /// perfect CSI).
    pub relay_csi: &'a ChannelRealization,
    pub modes: [RelayMode; 2],
    pub constellation: Constellation,
    pub phase_compensation: bool,
}

impl<'a> FrameContext<'a> {
    pub fn perfect(
        lb: &'a LinkBudget,
        ch: &'a ChannelRealization,
        modes: [RelayMode; 2],
        constellation: Constellation,
    ) -> Self {
        Self {
            link_budget: lb,
            channel: ch,
            relay_csi: ch,
            modes,
            constellation,
            phase_compensation: true,
        }
    }
}

/// Runs both hops for one symbol pair. There is no direct source link.
pub fn simulate_frame(x: &SymbolFrame, ctx: &FrameContext<'_>, noise: &FrameNoise) -> ReceivedFrame {
    let lb = ctx.link_budget;
    let sqrt_ps = lb.ps_over_n0.sqrt();
    let zero = Complex64::new(0.0, 0.0);
    let mut y = [[zero; 2]; 2];
    let mut alpha = [0.0; 2];
    for i in 0..2 {
        let coef = sqrt_ps * lb.gamma_sr[i].sqrt() * ctx.channel.h_sr[i];
        let coef_known = sqrt_ps * lb.gamma_sr[i].sqrt() * ctx.relay_csi.h_sr[i];
        let norm = 1.0 / (coef_known.norm_sqr() + 1.0).sqrt();
        let u = [
            coef * x.x[0] + noise.relay[i][0],
            coef * x.x[1] + noise.relay[i][1],
        ];
        match ctx.modes[i] {
            RelayMode::Silent => {}
            RelayMode::Amplify(a) => {
                alpha[i] = a;
                y[i] = u.map(|v| v * norm);
            }
            RelayMode::Detect => {
                alpha[i] = 1.0;
                let d = df_detect(u, coef_known, ctx.constellation);
                y[i] = d.frame.x.map(|s| coef_known * s * norm);
            }
        }
    }
    let tx = relay_encode(
        y,
        ctx.relay_csi.h_sr,
        alpha,
        ctx.phase_compensation,
    );
    let hop = [0, 1].map(|i| lb.pr_over_n0[i].sqrt() * lb.gamma_rd[i].sqrt() * ctx.channel.h_rd[i]);
    ReceivedFrame {
        rd: [0, 1].map(|k| tx[k][0] * hop[0] + tx[k][1] * hop[1] + noise.dest[k]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub frame: SymbolFrame,
    /// Set when `Λ = 0`; the frame then holds the first constellation point.
    pub degenerate: bool,
}

/// Alamouti combining `𝓛†·[r_d[1], r_d[2]*]` followed by per-symbol
/// minimum-distance decisions against `Λ·x̂`.
pub fn destination_decode(rf: &ReceivedFrame, ec: &EffectiveChannel, constellation: Constellation) -> Decoded {
    if !(ec.lambda > 0.0) {
        let p = constellation.points()[0];
        return Decoded {
            frame: SymbolFrame { x: [p, p] },
            degenerate: true,
        };
    }
    let [l1, l2] = ec.l;
    let r2c = rf.rd[1].conj();
    let combined = [
        l1.conj() * rf.rd[0] + l2 * r2c,
        l2.conj() * rf.rd[0] - l1 * r2c,
    ];
    Decoded {
        frame: SymbolFrame {
            x: combined.map(|r| constellation.nearest(r / ec.lambda)),
        },
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channel;
    use crate::rng::TrialRng;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use statrs::function::erf::erfc;

    fn unit_budget() -> LinkBudget {
        LinkBudget::from_snrs([1.0, 1.0], [1.0, 1.0]).unwrap()
    }

    fn one(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Recovers the linear map x -> [r_d[1], r_d[2]*] of a noiseless AF chain.
    fn probe_matrix(ctx: &FrameContext<'_>) -> [[Complex64; 2]; 2] {
        let z = FrameNoise::zero();
        let c0 = simulate_frame(&SymbolFrame { x: [one(1.0), one(0.0)] }, ctx, &z);
        let c1 = simulate_frame(&SymbolFrame { x: [one(0.0), one(1.0)] }, ctx, &z);
        [[c0.rd[0], c1.rd[0]], [c0.rd[1].conj(), c1.rd[1].conj()]]
    }

    #[test]
    fn silent_relays() {
        let mut rng = TrialRng::seed_from_u64(1);
        let ch = sample_channel(&mut rng);
        let ec = effective_channel(&ch, &unit_budget(), [0.0, 0.0]).unwrap();
        assert_eq!(ec.l, [one(0.0), one(0.0)]);
        assert_eq!(ec.lambda, 0.0);
        assert_eq!(ec.sigma_sq, 1.0);
        assert_eq!(end_to_end_snr(&ec), 0.0);
    }

    #[test]
    fn single_relay_hand_value() {
        // Hand evaluation: L'_1 = sqrt(1·1·1·1/(1+1)), σ² = (1/2)/1·1 + 1
        let ch = ChannelRealization::from_real([1.0, 1.0], [1.0, 1.0]);
        let ec = effective_channel(&ch, &unit_budget(), [1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(ec.l[0].re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(ec.lambda, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ec.sigma_sq, 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(end_to_end_snr(&ec), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_alpha_out_of_range() {
        let ch = ChannelRealization::from_real([1.0, 1.0], [1.0, 1.0]);
        assert!(effective_channel(&ch, &unit_budget(), [1.1, 0.0]).is_err());
        assert!(effective_channel(&ch, &unit_budget(), [0.0, -0.1]).is_err());
    }

    #[test]
    fn zero_source_gain_forwards_pure_noise() {
        let ch = ChannelRealization::from_real([0.0, 1.0], [1.0, 1.0]);
        let lb = LinkBudget::from_snrs([10.0, 10.0], [5.0, 5.0]).unwrap();
        let ec = effective_channel(&ch, &lb, [1.0, 0.0]).unwrap();
        assert_eq!(ec.l[0], one(0.0));
        // limit of |L'|²/(g·P_s) as g -> 0 is α·P_r·g_rd
        assert_abs_diff_eq!(ec.sigma_sq, 1.0 + 5.0, epsilon = 1e-12);
    }

    #[test]
    fn second_hop_phase_rotation_is_invisible() {
        let mut rng = TrialRng::seed_from_u64(2);
        let lb = LinkBudget::symmetric_db(15.0, 20.0).unwrap();
        let ch = sample_channel(&mut rng);
        let mut rot = ch;
        rot.h_rd[0] *= Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let a = effective_channel(&ch, &lb, [1.0, 0.7]).unwrap();
        let b = effective_channel(&rot, &lb, [1.0, 0.7]).unwrap();
        assert_abs_diff_eq!(a.lambda, b.lambda, epsilon = 1e-12);
        assert_abs_diff_eq!(a.sigma_sq, b.sigma_sq, epsilon = 1e-12);
    }

    #[test]
    fn doubling_relay_power_is_sublinear() {
        let ch = ChannelRealization::from_real([0.8, 1.3], [1.1, 0.6]);
        let lb = LinkBudget::from_snrs([20.0, 20.0], [10.0, 10.0]).unwrap();
        let lb2 = LinkBudget::from_snrs([20.0, 20.0], [20.0, 20.0]).unwrap();
        let g1 = end_to_end_snr(&effective_channel(&ch, &lb, [1.0, 1.0]).unwrap());
        let g2 = end_to_end_snr(&effective_channel(&ch, &lb2, [1.0, 1.0]).unwrap());
        assert!(g2 > g1 && g2 < 2.0 * g1);
    }

    #[test]
    fn noiseless_chain_matches_textbook_alamouti() {
        let ch = ChannelRealization::from_real([0.9, 1.4], [0.5, 1.2]);
        let lb = LinkBudget::from_snrs([30.0, 30.0], [20.0, 20.0]).unwrap();
        let modes = [RelayMode::Amplify(1.0); 2];
        let ctx = FrameContext::perfect(&lb, &ch, modes, Constellation::Bpsk);
        let ec = effective_channel_for_modes(&ch, &lb, modes);
        let m = probe_matrix(&ctx);
        let want = ec.matrix();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!((m[i][j] - want[i][j]).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn source_hop_phase_is_compensated() {
        let lb = LinkBudget::symmetric_db(20.0, 20.0).unwrap();
        let base = ChannelRealization::from_real([0.7, 1.1], [0.9, 0.4]);
        let modes = [RelayMode::Amplify(1.0), RelayMode::Amplify(0.5)];
        let x = SymbolFrame { x: [one(1.0), one(-1.0)] };
        let mut rng = TrialRng::seed_from_u64(9);
        let noise = FrameNoise::draw(&mut rng);
        let ref_ec = effective_channel_for_modes(&base, &lb, modes);
        let ref_rx = simulate_frame(&x, &FrameContext::perfect(&lb, &base, modes, Constellation::Bpsk), &noise);
        let ref_dec = destination_decode(&ref_rx, &ref_ec, Constellation::Bpsk);
        for phi in [0.3, 1.7, -2.9] {
            let mut ch = base;
            ch.h_sr[0] *= Complex64::from_polar(1.0, phi);
            let ec = effective_channel_for_modes(&ch, &lb, modes);
            assert_abs_diff_eq!(ec.lambda, ref_ec.lambda, epsilon = 1e-12);
            assert_abs_diff_eq!(ec.sigma_sq, ref_ec.sigma_sq, epsilon = 1e-12);
            let ctx = FrameContext::perfect(&lb, &ch, modes, Constellation::Bpsk);
            let gram_m = gram(&probe_matrix(&ctx));
            assert_abs_diff_eq!(gram_m[0][0].re, ec.lambda, epsilon = 1e-12);
            assert!(gram_m[0][1].norm() < 1e-12);
            // relay noise picks up the rotation, so compare decisions rather than samples
            let mut rotated = noise;
            rotated.relay[0] = noise.relay[0].map(|n| n * Complex64::from_polar(1.0, phi));
            let rx = simulate_frame(&x, &ctx, &rotated);
            assert_eq!(destination_decode(&rx, &ec, Constellation::Bpsk).frame, ref_dec.frame);
        }
    }

    #[test]
    fn disabling_compensation_breaks_orthogonality() {
        let lb = LinkBudget::symmetric_db(20.0, 20.0).unwrap();
        let mut rng = TrialRng::seed_from_u64(4);
        let ch = sample_channel(&mut rng);
        let mut ctx = FrameContext::perfect(&lb, &ch, [RelayMode::Amplify(1.0); 2], Constellation::Qpsk);
        ctx.phase_compensation = false;
        let g = gram(&probe_matrix(&ctx));
        assert!(g[0][1].norm() > 1e-3 * g[0][0].norm());
    }

    #[test]
    fn silent_relays_deliver_only_destination_noise() {
        let lb = LinkBudget::symmetric_db(20.0, 20.0).unwrap();
        let mut rng = TrialRng::seed_from_u64(6);
        let ch = sample_channel(&mut rng);
        let noise = FrameNoise::draw(&mut rng);
        let ctx = FrameContext::perfect(&lb, &ch, [RelayMode::Silent; 2], Constellation::Bpsk);
        let rx = simulate_frame(&SymbolFrame { x: [one(1.0), one(1.0)] }, &ctx, &noise);
        assert_eq!(rx.rd, noise.dest);
    }

    #[test]
    fn noiseless_decoding_is_exact() {
        let lb = LinkBudget::symmetric_db(10.0, 10.0).unwrap();
        let mut rng = TrialRng::seed_from_u64(8);
        for (c, x) in [
            (Constellation::Bpsk, [one(1.0), one(-1.0)]),
            (Constellation::Qpsk, [QPSK[0], QPSK[2]]),
        ] {
            for _ in 0..100 {
                let ch = sample_channel(&mut rng);
                let alpha = [rng.random_range(0.05..1.0), rng.random_range(0.0..1.0)];
                let modes = alpha.map(RelayMode::Amplify);
                let ctx = FrameContext::perfect(&lb, &ch, modes, c);
                let rx = simulate_frame(&SymbolFrame { x }, &ctx, &FrameNoise::zero());
                let ec = effective_channel_for_modes(&ch, &lb, modes);
                let d = destination_decode(&rx, &ec, c);
                assert!(!d.degenerate);
                assert_eq!(d.frame.x, x);
            }
        }
    }

    #[test]
    fn degenerate_decode_is_flagged() {
        let ec = EffectiveChannel {
            l: [one(0.0); 2],
            lambda: 0.0,
            sigma_sq: 1.0,
        };
        let d = destination_decode(&ReceivedFrame { rd: [one(0.3); 2] }, &ec, Constellation::Qpsk);
        assert!(d.degenerate);
        assert_eq!(d.frame.x, [QPSK[0]; 2]);
    }

    #[test]
    fn gray_labels() {
        let c = Constellation::Qpsk;
        assert_eq!(c.bit_errors(QPSK[0], QPSK[1]), 1);
        assert_eq!(c.bit_errors(QPSK[0], QPSK[2]), 1);
        assert_eq!(c.bit_errors(QPSK[0], QPSK[3]), 2);
        for p in QPSK {
            assert_abs_diff_eq!(p.norm(), 1.0, epsilon = 1e-15);
        }
        assert_eq!(Constellation::Bpsk.bit_errors(BPSK[0], BPSK[1]), 1);
    }

    #[test]
    fn received_noise_variance_matches_sigma_sq() {
        let lb = LinkBudget::symmetric_db(12.0, 15.0).unwrap();
        let ch = ChannelRealization {
            h_sr: [Complex64::new(0.4, -0.3), Complex64::new(-0.9, 0.2)],
            h_rd: [Complex64::new(0.6, 0.8), Complex64::new(0.1, -0.5)],
        };
        let modes = [RelayMode::Amplify(0.8), RelayMode::Amplify(1.0)];
        let ctx = FrameContext::perfect(&lb, &ch, modes, Constellation::Bpsk);
        let ec = effective_channel_for_modes(&ch, &lb, modes);
        let x = SymbolFrame { x: [one(1.0), one(-1.0)] };
        let mean = simulate_frame(&x, &ctx, &FrameNoise::zero());
        let mut rng = TrialRng::seed_from_u64(10);
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let rx = simulate_frame(&x, &ctx, &FrameNoise::draw(&mut rng));
            let e = (rx.rd[0] - mean.rd[0]).norm_sqr();
            s += e;
            s2 += e * e;
        }
        let m = s / n as f64;
        let se = ((s2 / n as f64 - m * m) / n as f64).sqrt();
        assert!((m - ec.sigma_sq).abs() < 3.0 * se, "{m} vs {}", ec.sigma_sq);
    }

    #[test]
    fn combined_noise_is_white() {
        let lb = LinkBudget::symmetric_db(12.0, 15.0).unwrap();
        let ch = ChannelRealization {
            h_sr: [Complex64::new(0.4, -0.3), Complex64::new(-0.9, 0.2)],
            h_rd: [Complex64::new(0.6, 0.8), Complex64::new(0.1, -0.5)],
        };
        let modes = [RelayMode::Amplify(1.0); 2];
        let ctx = FrameContext::perfect(&lb, &ch, modes, Constellation::Bpsk);
        let ec = effective_channel_for_modes(&ch, &lb, modes);
        let x = SymbolFrame { x: [one(1.0), one(1.0)] };
        let mean = simulate_frame(&x, &ctx, &FrameNoise::zero());
        let [l1, l2] = ec.l;
        let mut rng = TrialRng::seed_from_u64(12);
        let n = 100_000;
        let mut cov = [[Complex64::new(0.0, 0.0); 2]; 2];
        let mut sq = [0.0; 2];
        for _ in 0..n {
            let rx = simulate_frame(&x, &ctx, &FrameNoise::draw(&mut rng));
            let z = [rx.rd[0] - mean.rd[0], (rx.rd[1] - mean.rd[1]).conj()];
            let zt = [l1.conj() * z[0] + l2 * z[1], l2.conj() * z[0] - l1 * z[1]];
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += zt[i] * zt[j].conj();
                }
                sq[i] += zt[i].norm_sqr().powi(2);
            }
        }
        let target = ec.lambda * ec.sigma_sq;
        for i in 0..2 {
            let m = cov[i][i].re / n as f64;
            let se = ((sq[i] / n as f64 - m * m) / n as f64).sqrt();
            assert!((m - target).abs() < 3.0 * se, "{m} vs {target}");
        }
        // off-diagonal standard error is about target/sqrt(n)
        assert!((cov[0][1] / n as f64).norm() < 3.0 * target / (n as f64).sqrt());
    }

    #[test]
    fn conditional_bpsk_error_rate_matches_awgn() {
        // pick a channel and scale the relay hop until γ = 10 dB
        let ch = ChannelRealization::from_real([1.0, 0.8], [0.9, 1.1]);
        let lb = LinkBudget::from_snrs([100.0, 100.0], [20.0, 20.0]).unwrap();
        let modes = [RelayMode::Amplify(1.0); 2];
        let ec = effective_channel_for_modes(&ch, &lb, modes);
        let gamma = end_to_end_snr(&ec);
        let ctx = FrameContext::perfect(&lb, &ch, modes, Constellation::Bpsk);
        let mut rng = TrialRng::seed_from_u64(13);
        let n = 100_000;
        let mut errors = 0u64;
        for _ in 0..n {
            let x = SymbolFrame::random(Constellation::Bpsk, &mut rng);
            let rx = simulate_frame(&x, &ctx, &FrameNoise::draw(&mut rng));
            let d = destination_decode(&rx, &ec, Constellation::Bpsk);
            errors += u64::from(d.frame.x[0] != x.x[0]) + u64::from(d.frame.x[1] != x.x[1]);
        }
        let p = errors as f64 / (2 * n) as f64;
        let oracle = 0.5 * erfc((2.0 * gamma).sqrt() / std::f64::consts::SQRT_2);
        let se = (oracle * (1.0 - oracle) / (2 * n) as f64).sqrt();
        assert!((p - oracle).abs() < 3.0 * se, "{p} vs {oracle} at γ = {gamma}");
    }

    #[test]
    fn snr_monotone_in_alpha_toward_own_hop_snr() {
        // γ = Σ a_i p_i / (Σ a_i + 1) with a_i ∝ α_i, so raising α_1 moves γ
        // toward p_1 = P_s·g_sr1: up when p_1 exceeds γ(α_1 = 0), down otherwise.
        let lb = LinkBudget::symmetric_db(25.0, 40.0).unwrap();
        let mut rng = TrialRng::seed_from_u64(14);
        let (mut up, mut down) = (0, 0);
        for _ in 0..500 {
            let ch = sample_channel(&mut rng);
            let snr = |a: f64| end_to_end_snr(&effective_channel(&ch, &lb, [a, 1.0]).unwrap());
            let own = lb.ps_over_n0 * lb.gamma_sr[0] * ch.h_sr[0].norm_sqr();
            let rising = own >= snr(0.0);
            if rising { up += 1 } else { down += 1 }
            let mut prev = snr(0.0);
            for k in 1..=20 {
                let g = snr(k as f64 / 20.0);
                if rising {
                    assert!(g >= prev * (1.0 - 1e-12) && g <= own * (1.0 + 1e-12));
                } else {
                    assert!(g <= prev * (1.0 + 1e-12) && g >= own * (1.0 - 1e-12));
                }
                prev = g;
            }
        }
        assert!(up > 0 && down > 0);
    }
}
