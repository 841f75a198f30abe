//! Outage probability in the regime where both relay-to-destination links
//! are much stronger than the source hops.
//!
//! Conditioned on the source-hop fading gains `v_i = |h_sr_i|²`, the outage
//! event reduces to `(v1 − a1)·X1 < (a2 − v2)·X2` where `a_i = ξ/Γ_sr_i`,
//! `ξ = γ_t·N0/P_s`, and `X_i` is exponential with mean `F(v_i)`. Averaging
//! the conditional probability `Ω(v1, v2)` over the unit exponentials gives
//! the outage. On the rectangle below both thresholds `Ω = 1`; above both it
//! is 0; only the two mixed strips need numerical integration.

use crate::channel::LinkBudget;
use crate::error::Result;
use crate::policy::{scaling_factor, PolicySpec};
use crate::quadrature::{integrate_2d, QuadOptions};

/// Inputs to the asymptotic outage calculation.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticContext {
    /// `ξ = γ_t / (P_s/N0)` on the composite gain.
    pub xi: f64,
    pub gamma_sr: [f64; 2],
    pub gamma_rd: [f64; 2],
    pub ps_over_n0: f64,
    pub pr_over_n0: [f64; 2],
    /// Scaling rule of each relay, evaluated at the composite gain `Γ_sr·v`.
    pub policies: [PolicySpec; 2],
}

impl AsymptoticContext {
    pub fn new(lb: &LinkBudget, gamma_t: f64, policies: [PolicySpec; 2]) -> Self {
        Self {
            xi: gamma_t / lb.ps_over_n0,
            gamma_sr: lb.gamma_sr,
            gamma_rd: lb.gamma_rd,
            ps_over_n0: lb.ps_over_n0,
            pr_over_n0: lb.pr_over_n0,
            policies,
        }
    }

    /// Threshold on the fading gain `v_i` below which relay `i` cannot
    /// lift the end-to-end SNR above `γ_t` on its own.
    pub fn fading_threshold(&self, relay: usize) -> f64 {
        self.xi / self.gamma_sr[relay]
    }
}

/// `F(v) = α·P_s·P_r·Γ_sr·Γ_rd / (P_s·Γ_sr·v + N0)`.
pub fn amplification_gain(v: f64, relay: usize, ctx: &AsymptoticContext) -> f64 {
    let alpha = scaling_factor(&ctx.policies[relay], v * ctx.gamma_sr[relay]);
    if alpha == 0.0 {
        return 0.0;
    }
    let num = alpha * ctx.ps_over_n0 * ctx.pr_over_n0[relay] * ctx.gamma_sr[relay] * ctx.gamma_rd[relay];
    num / (ctx.ps_over_n0 * ctx.gamma_sr[relay] * v + 1.0)
}

/// Conditional outage `Ω(v1, v2)`.
///
/// In the mixed cases this is `w_below / (w_below + w_above)` with
/// `w_i = F(v_i)·|v_i − a_i|`, which equals the ratio of exponential CDFs
/// written with `φ` and stays finite at the thresholds. A gain exactly at its
/// threshold counts as above. When no relay forwards anything the outage is
/// certain.
pub fn omega_conditional(v1: f64, v2: f64, ctx: &AsymptoticContext) -> f64 {
    let a = [ctx.fading_threshold(0), ctx.fading_threshold(1)];
    let v = [v1, v2];
    let f = [amplification_gain(v1, 0, ctx), amplification_gain(v2, 1, ctx)];
    if f[0] == 0.0 && f[1] == 0.0 {
        return 1.0;
    }
    let above = [v1 >= a[0], v2 >= a[1]];
    match above {
        [false, false] => 1.0,
        [true, true] => 0.0,
        _ => {
            let (hi, lo) = if above[0] { (0, 1) } else { (1, 0) };
            let w_hi = f[hi] * (v[hi] - a[hi]);
            let w_lo = f[lo] * (a[lo] - v[lo]);
            if w_lo == 0.0 && w_hi == 0.0 {
                // the strong relay sits exactly on its threshold and the weak one is silent
                return if f[hi] == 0.0 { 1.0 } else { 0.0 };
            }
            w_lo / (w_lo + w_hi)
        }
    }
}

/// `(1 − e^{−γ_t/SNR_sr1})·(1 − e^{−γ_t/SNR_sr2})`.
pub fn outage_min_closed_form(gamma_t: f64, snr_sr: [f64; 2]) -> f64 {
    snr_sr
        .iter()
        .map(|&s| -(-gamma_t / s).exp_m1())
        .product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticOutage {
    pub value: f64,
    pub error_bound: f64,
    pub evaluations: usize,
}

/// Asymptotic outage probability by adaptive quadrature over the two mixed
/// strips, in the variables `t = e^{−v}` so every region is a finite box.
pub fn outage_asymptotic(ctx: &AsymptoticContext, opts: QuadOptions) -> Result<AsymptoticOutage> {
    let a = [ctx.fading_threshold(0), ctx.fading_threshold(1)];
    let rect = -(-a[0]).exp_m1() * -(-a[1]).exp_m1();
    let t_edge = [(-a[0]).exp(), (-a[1]).exp()];

    // policy breakpoints on v mapped to t
    let breaks = |relay: usize| -> Vec<f64> {
        ctx.policies[relay]
            .breakpoints()
            .into_iter()
            .map(|g| (-(g / ctx.gamma_sr[relay])).exp())
            .collect()
    };
    let (b1, b2) = (breaks(0), breaks(1));
    let half = QuadOptions {
        abs_tol: 0.5 * opts.abs_tol,
        max_evaluations: opts.max_evaluations / 2,
    };
    let omega_t = |t1: f64, t2: f64| omega_conditional(-t1.ln(), -t2.ln(), ctx);

    // relay 1 above (v1 >= a1 -> t1 in (0, e^{-a1}]), relay 2 below
    let strip_hi1 = integrate_2d(omega_t, (0.0, t_edge[0]), (t_edge[1], 1.0), &b1, &b2, half)?;
    // relay 1 below, relay 2 above
    let strip_hi2 = integrate_2d(omega_t, (t_edge[0], 1.0), (0.0, t_edge[1]), &b1, &b2, half)?;

    Ok(AsymptoticOutage {
        value: rect + strip_hi1.value + strip_hi2.value,
        error_bound: strip_hi1.error + strip_hi2.error,
        evaluations: strip_hi1.evaluations + strip_hi2.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TrialRng;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_distr::Exp1;

    fn ctx(gamma_t: f64, snr_sr: f64, snr_rd: f64, policy: PolicySpec) -> AsymptoticContext {
        let lb = LinkBudget::from_snrs([snr_sr; 2], [snr_rd; 2]).unwrap();
        AsymptoticContext::new(&lb, gamma_t, [policy.clone(), policy])
    }

    fn unit_ctx() -> AsymptoticContext {
        AsymptoticContext {
            xi: 1.0,
            gamma_sr: [1.0; 2],
            gamma_rd: [1.0; 2],
            ps_over_n0: 1.0,
            pr_over_n0: [1.0; 2],
            policies: [PolicySpec::FullPower, PolicySpec::FullPower],
        }
    }

    #[test]
    fn amplification_gain_values() {
        let c = unit_ctx();
        assert_abs_diff_eq!(amplification_gain(1.0, 0, &c), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(amplification_gain(0.0, 1, &c), 1.0, epsilon = 1e-15);
        let off = AsymptoticContext {
            policies: [PolicySpec::OnOff { threshold: 2.0 }, PolicySpec::FullPower],
            ..c
        };
        assert_eq!(amplification_gain(1.0, 0, &off), 0.0);
    }

    #[test]
    fn omega_corner_cases() {
        let c = ctx(10.0, 316.23, 1e4, PolicySpec::FullPower);
        let a = [c.fading_threshold(0), c.fading_threshold(1)];
        assert_eq!(omega_conditional(a[0] / 2.0, a[1] / 2.0, &c), 1.0);
        assert_eq!(omega_conditional(2.0 * a[0], 2.0 * a[1], &c), 0.0);
    }

    #[test]
    fn omega_symmetric_midpoint() {
        // F(v1) = F(v2) needs v1 = v2 under full power; φ = 1 needs a − v2 = v1 − a
        let c = unit_ctx();
        let v1 = 1.0 + 0.25;
        let v2 = 1.0 - 0.25;
        let c = AsymptoticContext {
            pr_over_n0: [1.0, (c.ps_over_n0 * v2 + 1.0) / (c.ps_over_n0 * v1 + 1.0)],
            ..c
        };
        assert_abs_diff_eq!(amplification_gain(v1, 0, &c), amplification_gain(v2, 1, &c), epsilon = 1e-15);
        assert_abs_diff_eq!(omega_conditional(v1, v2, &c), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn omega_degenerate_limits() {
        let base = unit_ctx();
        // relay 1 above but silent, relay 2 below and active -> certain outage
        let c = AsymptoticContext {
            policies: [PolicySpec::OnOff { threshold: 5.0 }, PolicySpec::FullPower],
            ..base.clone()
        };
        assert_eq!(omega_conditional(2.0, 0.5, &c), 1.0);
        // relay 2 below and silent, relay 1 above -> no outage
        let c = AsymptoticContext {
            policies: [PolicySpec::FullPower, PolicySpec::OnOff { threshold: 0.9 }],
            ..base.clone()
        };
        assert_eq!(omega_conditional(2.0, 0.5, &c), 0.0);
        let c = AsymptoticContext {
            policies: [PolicySpec::OnOff { threshold: 9.0 }, PolicySpec::OnOff { threshold: 9.0 }],
            ..base
        };
        assert_eq!(omega_conditional(2.0, 0.5, &c), 1.0);
        assert_eq!(omega_conditional(2.0, 3.0, &c), 1.0);
    }

    fn brute_force_omega(v1: f64, v2: f64, c: &AsymptoticContext, n: usize, seed: u64) -> (f64, f64) {
        let a = [c.fading_threshold(0), c.fading_threshold(1)];
        let f = [amplification_gain(v1, 0, c), amplification_gain(v2, 1, c)];
        let mut rng = TrialRng::seed_from_u64(seed);
        let mut hits = 0usize;
        for _ in 0..n {
            let e1: f64 = rng.sample(Exp1);
            let e2: f64 = rng.sample(Exp1);
            let (x1, x2) = (f[0] * e1, f[1] * e2);
            if (v1 - a[0]) * x1 < (a[1] - v2) * x2 || (x1 == 0.0 && x2 == 0.0) {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        (p, (p * (1.0 - p) / n as f64).sqrt().max(1.0 / n as f64))
    }

    #[test]
    fn omega_matches_exponential_ratio_oracle() {
        let mut rng = TrialRng::seed_from_u64(21);
        for k in 0..6 {
            let c = ctx(
                10f64.powf(rng.random_range(0.0..2.0)),
                10f64.powf(rng.random_range(1.5..3.0)),
                10f64.powf(rng.random_range(1.0..4.0)),
                PolicySpec::PiecewiseLinear {
                    tau1: 0.0,
                    tau2: rng.random_range(0.01..0.5),
                },
            );
            let a = [c.fading_threshold(0), c.fading_threshold(1)];
            let (v1, v2) = if k % 2 == 0 {
                (a[0] * rng.random_range(1.05..3.0), a[1] * rng.random_range(0.05..0.95))
            } else {
                (a[0] * rng.random_range(0.05..0.95), a[1] * rng.random_range(1.05..3.0))
            };
            let exact = omega_conditional(v1, v2, &c);
            let (mc, se) = brute_force_omega(v1, v2, &c, 1_000_000, 100 + k);
            assert!((exact - mc).abs() < 3.0 * se, "case {k}: {exact} vs {mc} ± {se}");
        }
    }

    #[test]
    fn mixed_case_complement_identity() {
        // Case 3 is 1 − P{Z ≤ φ} with P{Z ≤ φ} = F2·φ/(F2·φ + F1)
        let c = ctx(3.0, 100.0, 1000.0, PolicySpec::FullPower);
        let a = [c.fading_threshold(0), c.fading_threshold(1)];
        for (s1, s2) in [(0.4, 1.7), (0.9, 1.01), (0.05, 4.0)] {
            let (v1, v2) = (s1 * a[0], s2 * a[1]);
            let f1 = amplification_gain(v1, 0, &c);
            let f2 = amplification_gain(v2, 1, &c);
            let phi = (a[1] - v2) / (v1 - a[0]);
            assert!(phi > 0.0);
            let cdf = f2 * phi / (f2 * phi + f1);
            assert_abs_diff_eq!(omega_conditional(v1, v2, &c) + cdf, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_form_values() {
        let s = 316.23;
        assert_abs_diff_eq!(outage_min_closed_form(10.0, [s, s]), 9.689_392_615_415_485e-4, epsilon = 1e-15);
        assert_eq!(outage_min_closed_form(0.0, [s, s]), 0.0);
        // a perfect first hop on either relay removes the outage entirely
        assert_eq!(outage_min_closed_form(10.0, [s, f64::INFINITY]), 0.0);
    }

    #[test]
    fn onoff_at_xi_hits_closed_form() {
        for gt_db in [0.0, 10.0, 20.0] {
            let gt = 10f64.powf(gt_db / 10.0);
            let ps = 10f64.powf(2.5);
            let xi = gt / ps;
            let c = ctx(gt, ps, 1e4, PolicySpec::OnOff { threshold: xi });
            let q = outage_asymptotic(&c, QuadOptions::default()).unwrap();
            let closed = outage_min_closed_form(gt, [ps, ps]);
            assert_abs_diff_eq!(q.value, closed, epsilon = 1e-6);
        }
    }

    #[test]
    fn full_power_is_worse_than_onoff() {
        let gt = 10.0;
        let ps = 10f64.powf(2.5);
        let full = outage_asymptotic(&ctx(gt, ps, 1e4, PolicySpec::FullPower), QuadOptions::default()).unwrap();
        let closed = outage_min_closed_form(gt, [ps, ps]);
        assert!(full.value > closed + 1e-5, "{} vs {closed}", full.value);
    }
}
