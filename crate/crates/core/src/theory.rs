//! Numeric checkers for the single-crossing lemmas behind the revenue
//! rankings: the concave-transform comparison of single-crossing pairs
//! (Ohlin) and preservation of single crossing under MLR shifts.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{max_bid, AuctionInstance};
use crate::error::{Error, Result};
use crate::information::{
    check_dependence, conditional_expectation_tol, default_dependence_grids, DependenceProperty, Example1,
    InformationModel, LinearTilt,
};
use crate::preferences::UtilityFunction;
use crate::quadrature::{integrate, Options};
use crate::securities::SecurityFamily;

/// Tolerance of every lemma assertion.
pub const LEMMA_TOL: f64 = 1e-8;
/// Target for the part-two shift search.
pub const SHIFT_TOL: f64 = 1e-9;
const MOMENT_TOL: f64 = 1e-12;
const MAX_REGENERATIONS: usize = 1000;

/// Continuous piecewise-linear function, extended linearly past its end knots.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::Input(
                "piecewise-linear map needs two or more matching knots and values".into(),
            ));
        }
        if !knots.iter().chain(&values).all(|v| v.is_finite()) {
            return Err(Error::Input("piecewise-linear map has non-finite entries".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input(
                "piecewise-linear knots must be strictly increasing".into(),
            ));
        }
        Ok(Self { knots, values })
    }

    pub fn constant(lo: f64, hi: f64, c: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![c, c])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.knots.len();
        self.knots.partition_point(|&k| k <= x).clamp(1, n - 1) - 1
    }

    fn slope_of(&self, k: usize) -> f64 {
        (self.values[k + 1] - self.values[k]) / (self.knots[k + 1] - self.knots[k])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.segment(x);
        self.values[k] + self.slope_of(k) * (x - self.knots[k])
    }

    pub fn right_derivative(&self, x: f64) -> f64 {
        self.slope_of(self.segment(x))
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Pointwise sum on the union of both knot sets.
    pub fn add(&self, other: &Self) -> Self {
        let mut knots: Vec<f64> = self.knots.iter().chain(&other.knots).copied().collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let values = knots.iter().map(|&x| self.eval(x) + other.eval(x)).collect();
        Self { knots, values }
    }

    /// Points where the function crosses `level` strictly inside a segment.
    pub fn preimages(&self, level: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for k in 0..self.knots.len() - 1 {
            let (a, b) = (self.values[k] - level, self.values[k + 1] - level);
            if a * b < 0.0 {
                out.push(self.knots[k] + (self.knots[k + 1] - self.knots[k]) * a / (a - b));
            }
        }
        out
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    pub fn is_concave(&self, tol: f64) -> bool {
        (1..self.knots.len() - 1).all(|k| self.slope_of(k) <= self.slope_of(k - 1) + tol)
    }
}

/// Concave transforms `h` used by the lemma checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConcaveFn {
    PiecewiseLinear {
        map: PiecewiseLinear,
    },
    /// `-exp(-w)`.
    NegExp,
    /// `-(w - center)²`.
    NegQuadratic {
        center: f64,
    },
    Affine {
        slope: f64,
        intercept: f64,
    },
    Utility {
        utility: UtilityFunction,
    },
}

impl ConcaveFn {
    pub fn piecewise_linear(map: PiecewiseLinear) -> Result<Self> {
        if !map.is_concave(1e-12) {
            return Err(Error::Input("piecewise-linear h is not concave".into()));
        }
        Ok(ConcaveFn::PiecewiseLinear { map })
    }

    pub fn value(&self, w: f64) -> f64 {
        match self {
            ConcaveFn::PiecewiseLinear { map } => map.eval(w),
            ConcaveFn::NegExp => -(-w).exp(),
            ConcaveFn::NegQuadratic { center } => -(w - center) * (w - center),
            ConcaveFn::Affine { slope, intercept } => slope * w + intercept,
            ConcaveFn::Utility { utility } => utility.evaluate(w),
        }
    }

    pub fn right_derivative(&self, w: f64) -> f64 {
        match self {
            ConcaveFn::PiecewiseLinear { map } => map.right_derivative(w),
            ConcaveFn::NegExp => (-w).exp(),
            ConcaveFn::NegQuadratic { center } => -2.0 * (w - center),
            ConcaveFn::Affine { slope, .. } => *slope,
            ConcaveFn::Utility { utility } => utility.derivative(w),
        }
    }

    fn knots(&self) -> &[f64] {
        match self {
            ConcaveFn::PiecewiseLinear { map } => map.knots(),
            _ => &[],
        }
    }
}

/// Law of the random variable `W` in the lemma checks.
#[derive(Clone, Debug)]
pub enum ValueDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `X₁` given `Y₁ = y`, `Z₁ = z`.
    Conditional {
        model: Arc<dyn InformationModel>,
        y: f64,
        z: f64,
    },
}

impl ValueDistribution {
    pub fn support(&self) -> (f64, f64) {
        match self {
            ValueDistribution::Uniform { lo, hi } => (*lo, *hi),
            ValueDistribution::Conditional { model, .. } => model.value_support(),
        }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64, breakpoints: &[f64]) -> Result<f64> {
        match self {
            ValueDistribution::Uniform { lo, hi } => {
                Ok(integrate(f, *lo, *hi, breakpoints, Options::abs(MOMENT_TOL))?.value / (hi - lo))
            }
            ValueDistribution::Conditional { model, y, z } => {
                Ok(conditional_expectation_tol(model.as_ref(), f, breakpoints, *y, *z, MOMENT_TOL)?.value)
            }
        }
    }

    /// `E[h(g(W))]`, split at the kinks of `g` and of `h ∘ g`.
    fn expect_composed(&self, h: &ConcaveFn, g: &PiecewiseLinear) -> Result<f64> {
        let mut cuts = g.knots().to_vec();
        for &k in h.knots() {
            cuts.extend(g.preimages(k));
        }
        self.expect(|w| h.value(g.eval(w)), &cuts)
    }
}

/// Nondecreasing `g1`, `g2` with `g1` crossing `g2` once from below at `w0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingleCrossingPair {
    pub g1: PiecewiseLinear,
    pub g2: PiecewiseLinear,
    pub w0: f64,
}

impl SingleCrossingPair {
    /// Locates the crossing on `[lo, hi]`; `w0` follows the last point where
    /// `g1 < g2 - tol`.
    pub fn new(g1: PiecewiseLinear, g2: PiecewiseLinear, lo: f64, hi: f64) -> Result<Self> {
        let pts = Self::points(&g1, &g2, lo, hi);
        let d: Vec<f64> = pts.iter().map(|&w| g1.eval(w) - g2.eval(w)).collect();
        let w0 = match d.iter().rposition(|&v| v < -LEMMA_TOL) {
            None => lo,
            Some(i) if i + 1 == pts.len() => hi,
            Some(i) => {
                let (a, b) = (d[i], d[i + 1]);
                let t = if b > a { (-a / (b - a)).clamp(0.0, 1.0) } else { 1.0 };
                pts[i] + t * (pts[i + 1] - pts[i])
            }
        };
        Self::with_crossing(g1, g2, w0, lo, hi)
    }

    /// Uses a supplied crossing point and verifies it.
    pub fn with_crossing(g1: PiecewiseLinear, g2: PiecewiseLinear, w0: f64, lo: f64, hi: f64) -> Result<Self> {
        let pts = Self::points(&g1, &g2, lo, hi);
        for (name, g) in [("g1", &g1), ("g2", &g2)] {
            if let Some(w) = pts.windows(2).find(|w| g.eval(w[1]) < g.eval(w[0]) - LEMMA_TOL) {
                return Err(Error::Input(format!(
                    "{name} decreases between w={} and w={}",
                    w[0], w[1]
                )));
            }
        }
        for &w in &pts {
            let d = g1.eval(w) - g2.eval(w);
            if (w < w0 && d > LEMMA_TOL) || (w > w0 && d < -LEMMA_TOL) {
                return Err(Error::Input(format!(
                    "g1 does not single cross g2 from below at w0={w0}: g1 - g2 = {d} at w={w}"
                )));
            }
        }
        Ok(Self { g1, g2, w0 })
    }

    fn points(g1: &PiecewiseLinear, g2: &PiecewiseLinear, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = g1
            .knots()
            .iter()
            .chain(g2.knots())
            .copied()
            .filter(|&w| w > lo && w < hi)
            .collect();
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OhlinPart {
    /// Equal means imply the concave transform favours `g2`.
    One,
    /// Equal concave transforms imply `g1` has the larger mean.
    Two,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OhlinReport {
    pub part: OhlinPart,
    /// Constant added to `g2` to meet the moment precondition.
    pub shift: f64,
    pub w0: f64,
    pub t0: f64,
    pub h_prime: f64,
    pub e_g1: f64,
    pub e_g2: f64,
    pub e_h_g1: f64,
    pub e_h_g2: f64,
    /// `E[h(g1)] - E[h(g2)] <= h'(t0)(E[g1] - E[g2]) + tol`.
    pub master_inequality: bool,
    pub verdict: bool,
}

/// Checks one part of the Ohlin lemma. With `enforce`, `g2` is shifted by a
/// constant (closed form in part one, bisection in part two) until the
/// moment precondition holds; otherwise a mismatch is a precondition error.
pub fn check_ohlin(
    pair: &SingleCrossingPair,
    h: &ConcaveFn,
    dist: &ValueDistribution,
    part: OhlinPart,
    enforce: bool,
) -> Result<OhlinReport> {
    let (lo, hi) = dist.support();
    let mut pair = pair.clone();
    let mut shift = 0.0;
    match part {
        OhlinPart::One => {
            let gap = dist.expect(|w| pair.g1.eval(w), pair.g1.knots())?
                - dist.expect(|w| pair.g2.eval(w), pair.g2.knots())?;
            if gap.abs() > LEMMA_TOL {
                if !enforce {
                    return Err(Error::Precondition {
                        reason: "E[g1(W)] != E[g2(W)]".into(),
                        gap,
                    });
                }
                shift = gap;
            }
        }
        OhlinPart::Two => {
            let target = dist.expect_composed(h, &pair.g1)?;
            let gap = target - dist.expect_composed(h, &pair.g2)?;
            if gap.abs() > SHIFT_TOL {
                if !enforce {
                    return Err(Error::Precondition {
                        reason: "E[h(g1(W))] != E[h(g2(W))]".into(),
                        gap,
                    });
                }
                shift = equalizing_shift(h, &pair.g2, dist, target)?;
            }
        }
    }
    if shift != 0.0 {
        pair = SingleCrossingPair::new(pair.g1.clone(), pair.g2.shifted(shift), lo, hi)?;
    }
    let t0 = pair.g1.eval(pair.w0);
    let h_prime = h.right_derivative(t0);
    if part == OhlinPart::Two && h_prime <= 0.0 {
        return Err(Error::Precondition {
            reason: format!("h'(t0) = {h_prime} is not positive at t0 = {t0}"),
            gap: h_prime,
        });
    }
    let e_g1 = dist.expect(|w| pair.g1.eval(w), pair.g1.knots())?;
    let e_g2 = dist.expect(|w| pair.g2.eval(w), pair.g2.knots())?;
    let e_h_g1 = dist.expect_composed(h, &pair.g1)?;
    let e_h_g2 = dist.expect_composed(h, &pair.g2)?;
    let master = e_h_g1 - e_h_g2 <= h_prime * (e_g1 - e_g2) + LEMMA_TOL;
    let claim = match part {
        OhlinPart::One => e_h_g1 <= e_h_g2 + LEMMA_TOL,
        OhlinPart::Two => e_g1 >= e_g2 - LEMMA_TOL,
    };
    Ok(OhlinReport {
        part,
        shift,
        w0: pair.w0,
        t0,
        h_prime,
        e_g1,
        e_g2,
        e_h_g1,
        e_h_g2,
        master_inequality: master,
        verdict: master && claim,
    })
}

/// `c` with `E[h(g + c)] = target`, by bracketing and bisection.
fn equalizing_shift(h: &ConcaveFn, g: &PiecewiseLinear, dist: &ValueDistribution, target: f64) -> Result<f64> {
    let f = |c: f64| dist.expect_composed(h, &g.shifted(c)).map(|v| v - target);
    let spread = g.values().iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
    let (mut a, mut b) = (-spread, spread);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    let mut tries = 0;
    while fa.signum() == fb.signum() {
        tries += 1;
        if tries > 60 {
            return Err(Error::Precondition {
                reason: "no shift of g2 equalizes E[h(g)]".into(),
                gap: fa,
            });
        }
        a *= 2.0;
        b *= 2.0;
        fa = f(a)?;
        fb = f(b)?;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.abs() <= SHIFT_TOL * 1e-2 || b - a <= 1e-15 * (1.0 + m.abs()) {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MlrPreservationReport {
    pub y_hat: f64,
    pub y: f64,
    pub z: f64,
    /// `E[g(X) | ŷ, z]`.
    pub e_hat: f64,
    /// `E[g(X) | y, z]`.
    pub e: f64,
    pub mlr_certified: bool,
    /// `e >= -tol`.
    pub preserved: bool,
    /// Asserted outcome; `None` when the model is not PD-MLR certified and
    /// the sign is only reported.
    pub verdict: Option<bool>,
}

/// With `E[g(X) | ŷ, z] >= 0` and `g` crossing zero once from below, checks
/// `E[g(X) | y, z] >= 0` for `y > ŷ`.
pub fn check_mlr_single_crossing_preservation(
    model: &dyn InformationModel,
    g: &PiecewiseLinear,
    y_hat: f64,
    y: f64,
    z: f64,
    mlr_certified: bool,
) -> Result<MlrPreservationReport> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(y > y_hat) {
        return Err(Error::Input(format!("need y > ŷ, got y={y}, ŷ={y_hat}")));
    }
    let (lo, hi) = model.value_support();
    let mut pts: Vec<f64> = g.knots().iter().copied().filter(|&x| x > lo && x < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    let mut positive_at = None;
    for &x in &pts {
        let v = g.eval(x);
        if v > LEMMA_TOL && positive_at.is_none() {
            positive_at = Some(x);
        }
        if let (Some(p), true) = (positive_at, v < -LEMMA_TOL) {
            return Err(Error::Input(format!(
                "g is not single crossing: g({p}) > 0 but g({x}) = {v}"
            )));
        }
    }
    let e_hat = conditional_expectation_tol(model, |x| g.eval(x), g.knots(), y_hat, z, MOMENT_TOL)?.value;
    if e_hat < -LEMMA_TOL {
        return Err(Error::Precondition {
            reason: "E[g(X) | ŷ, z] < 0".into(),
            gap: e_hat,
        });
    }
    let e = conditional_expectation_tol(model, |x| g.eval(x), g.knots(), y, z, MOMENT_TOL)?.value;
    let preserved = e >= -LEMMA_TOL;
    Ok(MlrPreservationReport {
        y_hat,
        y,
        z,
        e_hat,
        e,
        mlr_certified,
        preserved,
        verdict: mlr_certified.then_some(preserved),
    })
}

/// PD-MLR verdict on the default checker grids.
pub fn mlr_certified(model: &dyn InformationModel, n: usize) -> Result<bool> {
    let (xg, yg, zg) = default_dependence_grids(model, n);
    Ok(check_dependence(model, DependenceProperty::PdMlr, &xg, &yg, &zg)?.verdict)
}

/// The failure witness in Example 1: `g(x) = b_e·x - min(x, b_d)` with the
/// zero-signal equity and debt bids, `ŷ = 0`, `y = 1`.
pub fn example1_mlr_witness(investment: f64) -> Result<MlrPreservationReport> {
    let model: Arc<dyn InformationModel> = Arc::new(Example1);
    let bid = |fam| -> Result<f64> {
        let inst = AuctionInstance::new(model.clone(), fam, UtilityFunction::Linear, investment)?;
        Ok(max_bid(&inst, 0.0, 0.0)?.bid)
    };
    let b_e = bid(SecurityFamily::equity(1.0))?;
    let b_d = bid(SecurityFamily::debt(1.0))?;
    let g = PiecewiseLinear::new(vec![0.0, b_d, 1.0], vec![0.0, (b_e - 1.0) * b_d, b_e - b_d])?;
    let certified = mlr_certified(model.as_ref(), 101)?;
    check_mlr_single_crossing_preservation(model.as_ref(), &g, 0.0, 1.0, 0.0, certified)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OhlinInputs {
    pub y: f64,
    pub z: f64,
    pub g1: PiecewiseLinear,
    pub g2: PiecewiseLinear,
    pub h: ConcaveFn,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OhlinTrial {
    pub trial: usize,
    /// Instances discarded because `h'(t0) <= 0`.
    pub regenerated: usize,
    pub inputs: OhlinInputs,
    pub report: OhlinReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MlrTrial {
    pub trial: usize,
    pub g: PiecewiseLinear,
    pub report: MlrPreservationReport,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Sorted interior points of `(lo, hi)` plus both ends.
fn random_knots(rng: &mut ChaCha8Rng, lo: f64, hi: f64, interior: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..interior).map(|_| rng.random_range(lo..hi)).collect();
    k.push(lo);
    k.push(hi);
    k.sort_by(f64::total_cmp);
    k.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    k
}

fn random_nondecreasing(rng: &mut ChaCha8Rng, start: f64) -> PiecewiseLinear {
    let n = rng.random_range(0..=5);
    let knots = random_knots(rng, 0.0, 1.0, n);
    let mut v = start;
    let values = knots
        .iter()
        .enumerate()
        .map(|(i, _)| {
            if i > 0 && rng.random_bool(0.8) {
                v += rng.random_range(0.0..1.0);
            }
            v
        })
        .collect();
    PiecewiseLinear::new(knots, values).expect("valid random knots")
}

fn random_concave(rng: &mut ChaCha8Rng, lo: f64, hi: f64, increasing: bool) -> ConcaveFn {
    if rng.random_bool(0.3) {
        return ConcaveFn::NegExp;
    }
    let n = rng.random_range(1..=8);
    let knots = random_knots(rng, lo, hi, n);
    let slope_lo = if increasing { 0.05 } else { -2.0 };
    let mut slopes: Vec<f64> = (1..knots.len()).map(|_| rng.random_range(slope_lo..3.0)).collect();
    slopes.sort_by(|a, b| b.total_cmp(a));
    let mut values = vec![rng.random_range(-1.0..1.0)];
    for (k, s) in slopes.iter().enumerate() {
        values.push(values[k] + s * (knots[k + 1] - knots[k]));
    }
    ConcaveFn::piecewise_linear(PiecewiseLinear::new(knots, values).expect("valid random knots"))
        .expect("slopes are decreasing")
}

fn ohlin_instance(rng: &mut ChaCha8Rng, part: OhlinPart) -> Result<(OhlinInputs, OhlinReport)> {
    let y: f64 = rng.random();
    let z: f64 = rng.random();
    let start = rng.random_range(-1.0..1.0);
    let g2 = random_nondecreasing(rng, start);
    // Nondecreasing difference running from negative to positive.
    let d = {
        let raw = random_nondecreasing(rng, 0.0);
        let top = raw.values()[raw.values().len() - 1];
        let (neg, pos) = (rng.random_range(0.05..1.0), rng.random_range(0.05..1.0));
        let scale = if top > 0.0 { (neg + pos) / top } else { 0.0 };
        let values = raw.values().iter().map(|v| v * scale - neg).collect();
        PiecewiseLinear::new(raw.knots().to_vec(), values)?
    };
    let g1 = g2.add(&d);
    let all = g1.values().iter().chain(g2.values());
    let (vmin, vmax) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let h = random_concave(rng, vmin - 0.5, vmax + 0.5, part == OhlinPart::Two);
    let model: Arc<dyn InformationModel> = Arc::new(Example1);
    let dist = ValueDistribution::Conditional { model, y, z };
    let pair = SingleCrossingPair::new(g1.clone(), g2.clone(), 0.0, 1.0)?;
    let report = check_ohlin(&pair, &h, &dist, part, true)?;
    Ok((OhlinInputs { y, z, g1, g2, h }, report))
}

/// Randomized Ohlin trials with `W` drawn from Example 1 conditionals.
/// Instances violating `h'(t0) > 0` in part two are regenerated.
pub fn ohlin_trials(part: OhlinPart, trials: usize, seed: u64) -> Result<Vec<OhlinTrial>> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            for regenerated in 0..MAX_REGENERATIONS {
                match ohlin_instance(&mut rng, part) {
                    Ok((inputs, report)) => {
                        return Ok(OhlinTrial {
                            trial,
                            regenerated,
                            inputs,
                            report,
                        });
                    }
                    Err(Error::Precondition { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::Validation(format!("trial {trial}: no valid instance generated")))
        })
        .collect()
}

/// Randomized single-crossing `g` on a linear-tilt model, scaled so that
/// `E[g | ŷ, z] >= 0` (tight in about half the trials).
pub fn mlr_trials(model: &LinearTilt, trials: usize, seed: u64) -> Result<Vec<MlrTrial>> {
    let certified = mlr_certified(model, 101)?;
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let y_hat = rng.random_range(0.0..0.9);
            let y = rng.random_range(y_hat + 1e-3..=1.0);
            let z: f64 = rng.random();
            let c = rng.random_range(0.05..0.95);
            let n = rng.random_range(0..=6);
            let mut knots = random_knots(&mut rng, 0.0, 1.0, n);
            knots.retain(|&k| (k - c).abs() > 1e-6);
            knots.push(c);
            knots.sort_by(f64::total_cmp);
            let mut values: Vec<f64> = knots
                .iter()
                .map(|&k| match k.total_cmp(&c) {
                    std::cmp::Ordering::Less => -rng.random_range(0.01..1.0),
                    std::cmp::Ordering::Equal => 0.0,
                    std::cmp::Ordering::Greater => rng.random_range(0.01..1.0),
                })
                .collect();
            let g = PiecewiseLinear::new(knots.clone(), values.clone())?;
            let part = |f: fn(f64) -> f64| {
                conditional_expectation_tol(model, |x| f(g.eval(x)), g.knots(), y_hat, z, MOMENT_TOL).map(|e| e.value)
            };
            let (neg, pos) = (part(|v| v.min(0.0))?, part(|v| v.max(0.0))?);
            if neg + pos < 0.0 {
                let slack = if rng.random_bool(0.5) {
                    0.0
                } else {
                    rng.random_range(0.0..0.5)
                };
                let s = -neg / pos * (1.0 + slack);
                for v in values.iter_mut().filter(|v| **v > 0.0) {
                    *v *= s;
                }
            }
            let g = PiecewiseLinear::new(knots, values)?;
            let report = check_mlr_single_crossing_preservation(model, &g, y_hat, y, z, certified)?;
            Ok(MlrTrial { trial, g, report })
        })
        .collect()
}
