//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals,
//! plus an iterated two-dimensional driver.
//!
//! Subdivision always bisects the interval with the largest error estimate,
//! breaking ties by position, so results are bit-reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub max_evaluations: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-6,
            max_evaluations: 1_000_000,
        }
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = [0.0; 15];
    fv[7] = f(center);
    for j in 0..7 {
        let dx = half * XGK[j];
        fv[j] = f(center - dx);
        fv[14 - j] = f(center + dx);
    }
    let weight = |j: usize| WGK[j.min(14 - j)];
    let mut kronrod = 0.0;
    let mut gauss = fv[7] * WG[3];
    for (j, &v) in fv.iter().enumerate() {
        kronrod += weight(j) * v;
    }
    for j in (1..7).step_by(2) {
        gauss += WG[j / 2] * (fv[j] + fv[14 - j]);
    }
    // QUADPACK's error scaling, which is pessimistic for non-smooth integrands
    let mean = 0.5 * kronrod;
    let spread: f64 = fv.iter().enumerate().map(|(j, &v)| weight(j) * (v - mean).abs()).sum::<f64>() * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if spread != 0.0 && err != 0.0 {
        err = spread * (200.0 * err / spread).powf(1.5).min(1.0);
    }
    (kronrod * half, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrates `f` over `[a, b]`, splitting first at any `breakpoints` that
/// fall strictly inside. `f` is never evaluated at the endpoints.
///
/// On failure the error carries the best estimate reached.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<Quadrature> {
    if !(b > a) {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in edges.windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }

    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if error <= opts.abs_tol {
            return Ok(Quadrature {
                value,
                error,
                evaluations,
            });
        }
        let worst = heap.peek().expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if evaluations + 30 > opts.max_evaluations || !(mid > worst.a && mid < worst.b) {
            return Err(Error::NonConvergence {
                estimate: value,
                error_bound: error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("at least one segment");
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&mut f, lo, hi);
            heap.push(Segment {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
        evaluations += 30;
    }
}

/// Iterated integral `∫_{x0}^{x1} ∫_{y0}^{y1} f(x, y) dy dx`.
///
/// The inner integrals run at a tenth of the outer tolerance scaled by the
/// outer width; the returned error adds the outer bound and the largest
/// inner bound times the width.
pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    x_breaks: &[f64],
    y_breaks: &[f64],
    opts: QuadOptions,
) -> Result<Quadrature> {
    let width = (x1 - x0).max(f64::MIN_POSITIVE);
    let inner_opts = QuadOptions {
        abs_tol: 0.1 * opts.abs_tol / width,
        max_evaluations: opts.max_evaluations,
    };
    let mut inner_evals = 0usize;
    let mut inner_err: f64 = 0.0;
    let mut failure: Option<Error> = None;
    let outer = integrate(
        |x| {
            if failure.is_some() {
                return 0.0;
            }
            match integrate(|y| f(x, y), y0, y1, y_breaks, inner_opts) {
                Ok(q) => {
                    inner_evals += q.evaluations;
                    inner_err = inner_err.max(q.error);
                    q.value
                }
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        x0,
        x1,
        x_breaks,
        QuadOptions {
            abs_tol: 0.9 * opts.abs_tol,
            max_evaluations: opts.max_evaluations,
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let q = outer?;
    let evaluations = inner_evals;
    let error = q.error + inner_err * width;
    if evaluations > opts.max_evaluations {
        return Err(Error::NonConvergence {
            estimate: q.value,
            error_bound: error,
            evaluations,
        });
    }
    Ok(Quadrature {
        value: q.value,
        error,
        evaluations,
    })
}
