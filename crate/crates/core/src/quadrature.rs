//! Globally adaptive Gauss–Kronrod (7/15) integration.
//!
//! Integrands in this crate are piecewise smooth with known kinks (security
//! payoffs, piecewise densities), so every entry point accepts breakpoints.
//! On each smooth piece the 15-point Kronrod rule is exact for polynomials up
//! to degree 22, which makes the piecewise-polynomial Example-1 integrals exact
//! to rounding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integral value with an absolute error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq)]
#[error("quadrature did not converge: estimate {estimate} with error {error:e} after {intervals} subintervals")]
pub struct QuadratureError {
    /// Best estimate reached before giving up.
    pub estimate: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_intervals: 4000,
        }
    }
}

impl Options {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let s = f(center - dx) + f(center + dx);
        kronrod += w * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Piece { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, splitting first at every breakpoint strictly
/// inside the interval.
pub fn integrate<F>(mut f: F, a: f64, b: f64, breakpoints: &[f64], opts: Options) -> Result<Estimate, QuadratureError>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok(Estimate::default());
    }
    if b < a {
        return integrate(f, b, a, breakpoints, opts).map(|e| Estimate::new(-e.value, e.error));
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b && p.is_finite())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + x.abs()));

    let mut heap = BinaryHeap::with_capacity(cuts.len() + 16);
    let mut lo = a;
    for &c in cuts.iter().chain(std::iter::once(&b)) {
        if c > lo {
            heap.push(gk15(&mut f, lo, c));
            lo = c;
        }
    }

    let sum = |heap: &BinaryHeap<Piece>| -> (f64, f64) {
        heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };

    let (mut value, mut error) = sum(&heap);
    while error > opts.abs_tol.max(opts.rel_tol * value.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(QuadratureError {
                estimate: value,
                error,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("nonempty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(QuadratureError {
                estimate: value,
                error,
                intervals: heap.len() + 1,
            });
        }
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Re-sum occasionally to keep the running totals from drifting.
        if heap.len() % 64 == 0 {
            (value, error) = sum(&heap);
        }
    }
    let (value, error) = sum(&heap);
    Ok(Estimate { value, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| 3.0 * x * x - x + 2.0, 0.0, 2.0, &[], Options::default()).unwrap();
        assert_abs_diff_eq!(est.value, 8.0 - 2.0 + 4.0, epsilon = 1e-13);
        assert!(est.error < 1e-12);
    }

    #[test]
    fn kink_with_breakpoint_is_exact() {
        let f = |x: f64| x.min(0.3675);
        let est = integrate(f, 0.0, 1.0, &[0.3675], Options::default()).unwrap();
        let b = 0.3675;
        assert_abs_diff_eq!(est.value, b - b * b / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn kink_without_breakpoint_converges() {
        let f = |x: f64| (x - 0.3).abs();
        let est = integrate(f, 0.0, 1.0, &[], Options::abs(1e-12)).unwrap();
        assert_abs_diff_eq!(est.value, 0.045 + 0.245, epsilon = 1e-11);
    }

    #[test]
    fn smooth_transcendental() {
        let est = integrate(|x: f64| (-x).exp(), 0.0, 1.0, &[], Options::abs(1e-13)).unwrap();
        assert_abs_diff_eq!(est.value, 1.0 - (-1.0f64).exp(), epsilon = 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let est = integrate(|x| x, 1.0, 0.0, &[], Options::default()).unwrap();
        assert_abs_diff_eq!(est.value, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn reports_best_estimate_on_failure() {
        let opts = Options {
            abs_tol: 1e-14,
            rel_tol: 0.0,
            max_intervals: 3,
        };
        let err = integrate(|x: f64| (1.0 / x.max(1e-300)).sin(), 0.0, 1.0, &[], opts).unwrap_err();
        assert!(err.estimate.is_finite());
        assert!(err.intervals >= 3);
    }
}
