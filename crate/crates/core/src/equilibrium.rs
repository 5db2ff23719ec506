//! Indifference bids and the symmetric equilibrium strategy.
//!
//! The indifference bid `s(y, z)` is the root in `b` of the winner's
//! conditional expected utility `E[u(X - I - payoff(X, b)) | y, z]`, which is
//! continuous and decreasing in `b`; bisection is all that is assumed. The
//! equilibrium strategy is `β(y) = s(y, y)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_in, Error, Result};
use crate::grid::Grid;
use crate::information::{check_dependence, conditional_expectation_tol, DependenceProperty, InformationModel};
use crate::preferences::UtilityFunction;
use crate::quadrature::{self, Estimate, Options};
use crate::securities::{locate, SecurityFamily};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute quadrature target for conditional expectations.
    #[serde(default = "default_quadrature")]
    pub quadrature: f64,
    /// Bisection stops once the bracket is narrower than this.
    #[serde(default = "default_root")]
    pub root: f64,
    /// Required `|expected utility|` at a returned bid.
    #[serde(default = "default_residual")]
    pub residual: f64,
}

fn default_quadrature() -> f64 {
    1e-10
}

fn default_root() -> f64 {
    1e-10
}

fn default_residual() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: default_quadrature(),
            root: default_root(),
            residual: default_residual(),
        }
    }
}

pub const MAX_BISECTIONS: usize = 200;

#[derive(Clone)]
pub struct AuctionInstance {
    pub model: Arc<dyn InformationModel>,
    pub family: SecurityFamily,
    pub utility: UtilityFunction,
    pub investment: f64,
    pub tolerances: Tolerances,
}

impl fmt::Debug for AuctionInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AuctionInstance")
            .field("model", &self.model.name())
            .field("family", &self.family.name())
            .field("utility", &self.utility)
            .field("investment", &self.investment)
            .finish()
    }
}

impl AuctionInstance {
    /// Builds an instance and checks participation (`E[u(X - I)] > 0`) and
    /// bracketing of the indifference bid on a 5×5 signal grid.
    pub fn new(
        model: Arc<dyn InformationModel>,
        family: SecurityFamily,
        utility: UtilityFunction,
        investment: f64,
    ) -> Result<Self> {
        Self::with_tolerances(model, family, utility, investment, Tolerances::default())
    }

    pub fn with_tolerances(
        model: Arc<dyn InformationModel>,
        family: SecurityFamily,
        utility: UtilityFunction,
        investment: f64,
        tolerances: Tolerances,
    ) -> Result<Self> {
        if !(investment > 0.0 && investment.is_finite()) {
            return Err(Error::Parameter(format!(
                "investment must be positive, got {investment}"
            )));
        }
        utility.validate()?;
        let (mlo, mhi) = model.value_support();
        let (flo, fhi) = family.value_support();
        if flo > mlo + 1e-12 || fhi < mhi - 1e-12 {
            return Err(Error::Parameter(format!(
                "family {} is defined on [{flo}, {fhi}] but values range over [{mlo}, {mhi}]",
                family.name()
            )));
        }
        let inst = Self {
            model,
            family,
            utility,
            investment,
            tolerances,
        };
        let (slo, shi) = inst.model.signal_support();
        let (blo, bhi) = inst.family.bid_interval();
        for &y in Grid::uniform(slo, shi, 5).iter() {
            for &z in Grid::uniform(slo, shi, 5).iter() {
                let gain = conditional_expectation_tol(
                    inst.model.as_ref(),
                    |x| inst.utility.evaluate(x - inst.investment),
                    &[],
                    y,
                    z,
                    inst.tolerances.quadrature,
                )?;
                if gain.value <= 0.0 {
                    return Err(Error::Assumption {
                        y,
                        z,
                        reason: format!("no positive expected profit: E[u(X - I)] = {}", gain.value),
                    });
                }
                inst.check_bracket(y, z, blo, bhi)?;
            }
        }
        Ok(inst)
    }

    fn check_bracket(&self, y: f64, z: f64, blo: f64, bhi: f64) -> Result<(f64, f64)> {
        let at_lo = expected_utility(self, blo, y, z)?.value;
        let at_hi = expected_utility(self, bhi, y, z)?.value;
        if at_lo < -self.tolerances.residual || at_hi > self.tolerances.residual {
            return Err(Error::Assumption {
                y,
                z,
                reason: format!("expected utility does not bracket zero: {at_lo} at bid {blo}, {at_hi} at bid {bhi}"),
            });
        }
        Ok((at_lo, at_hi))
    }

    pub(crate) fn quadrature_options(&self) -> Options {
        Options::abs(self.tolerances.quadrature)
    }
}

/// `E[u(X - I - payoff(X, b)) | Y₁ = y, Z₁ = z]`.
pub fn expected_utility(inst: &AuctionInstance, b: f64, y: f64, z: f64) -> Result<Estimate> {
    let (blo, bhi) = inst.family.bid_interval();
    check_in("bid", b, blo, bhi)?;
    let b = b.clamp(blo, bhi);
    conditional_expectation_tol(
        inst.model.as_ref(),
        |x| {
            inst.utility
                .evaluate(x - inst.investment - inst.family.payoff_unchecked(x, b))
        },
        &inst.family.kinks(b),
        y,
        z,
        inst.tolerances.quadrature,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxBid {
    pub bid: f64,
    /// Expected utility at `bid`.
    pub residual: f64,
    pub iterations: usize,
}

/// Highest bid buyer 1 accepts given `(y, z)`: the root of [`expected_utility`].
pub fn max_bid(inst: &AuctionInstance, y: f64, z: f64) -> Result<MaxBid> {
    let (mut lo, mut hi) = inst.family.bid_interval();
    let (f_lo, f_hi) = inst.check_bracket(y, z, lo, hi)?;
    if f_lo <= 0.0 {
        return Ok(MaxBid {
            bid: lo,
            residual: f_lo,
            iterations: 0,
        });
    }
    if f_hi >= 0.0 {
        return Ok(MaxBid {
            bid: hi,
            residual: f_hi,
            iterations: 0,
        });
    }
    let tol = inst.tolerances;
    let mut best = MaxBid {
        bid: 0.5 * (lo + hi),
        residual: f64::INFINITY,
        iterations: 0,
    };
    for it in 1..=MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let f = expected_utility(inst, mid, y, z)?.value;
        if f.abs() < best.residual.abs() || hi - lo <= tol.root {
            best = MaxBid {
                bid: mid,
                residual: f,
                iterations: it,
            };
        }
        if f == 0.0 {
            return Ok(MaxBid {
                bid: mid,
                residual: f,
                iterations: it,
            });
        }
        if hi - lo <= tol.root && f.abs() <= tol.residual {
            return Ok(MaxBid {
                bid: mid,
                residual: f,
                iterations: it,
            });
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * (1.0 + hi.abs()) {
            break;
        }
    }
    if best.residual.abs() <= tol.residual {
        return Ok(best);
    }
    Err(Error::Root {
        reason: format!(
            "residual {} above {} after {} bisections at (y={y}, z={z})",
            best.residual, tol.residual, best.iterations
        ),
        best: best.bid,
    })
}

/// Tabulated symmetric equilibrium strategy `β(y) = s(y, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidCurve {
    pub family: String,
    pub signals: Vec<f64>,
    pub bids: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Set when the model could not be certified PD-FOSD on the working grid.
    pub warning: Option<String>,
    /// Running maximum of `bids`, used for inversion.
    #[serde(skip)]
    envelope: Vec<f64>,
}

impl BidCurve {
    pub fn from_parts(
        family: impl Into<String>,
        signals: Vec<f64>,
        bids: Vec<f64>,
        residuals: Vec<f64>,
    ) -> Result<Self> {
        Grid::new(signals.clone())?;
        if signals.len() < 2 || bids.len() != signals.len() || residuals.len() != signals.len() {
            return Err(Error::Input(
                "bid curve needs matching signal, bid and residual columns".into(),
            ));
        }
        let envelope = bids
            .iter()
            .scan(f64::NEG_INFINITY, |m, &b| {
                *m = m.max(b);
                Some(*m)
            })
            .collect();
        let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        Ok(Self {
            family: family.into(),
            signals,
            bids,
            residuals,
            max_residual,
            warning: None,
            envelope,
        })
    }

    /// Piecewise-linear interpolation, clamped outside the signal grid.
    pub fn bid_at(&self, y: f64) -> f64 {
        let (k, t) = locate(&self.signals, y);
        self.bids[k] * (1.0 - t) + self.bids[k + 1] * t
    }

    /// `sup { z : β(z) <= b }`, or `None` when `b` is below every bid (the
    /// bidder never wins). Ties count as wins.
    pub fn max_signal_beaten(&self, b: f64) -> Option<f64> {
        let env = &self.envelope;
        if b < env[0] {
            return None;
        }
        let n = env.len();
        if b >= env[n - 1] {
            return Some(self.signals[n - 1]);
        }
        // last index with envelope <= b
        let k = env.partition_point(|&e| e <= b) - 1;
        let (b0, b1) = (env[k], env[k + 1]);
        let (z0, z1) = (self.signals[k], self.signals[k + 1]);
        Some(if b1 > b0 {
            z0 + (z1 - z0) * (b - b0) / (b1 - b0)
        } else {
            z0
        })
    }

    /// True when the tabulated bids never decrease by more than `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.bids.windows(2).all(|w| w[1] >= w[0] - tol)
    }
}

/// Tabulates `β` on `signal_grid`. The model is first checked for PD-FOSD on
/// a working grid; if certified, a decreasing curve is an invariant failure,
/// otherwise the curve is returned with a warning attached.
pub fn bid_curve(inst: &AuctionInstance, signal_grid: &Grid) -> Result<BidCurve> {
    let (slo, shi) = inst.model.signal_support();
    signal_grid.check_within("signal grid", slo, shi)?;
    let fosd = {
        let (xlo, xhi) = inst.model.value_support();
        let xg = Grid::uniform(xlo, xhi, 101).with_points(inst.model.value_landmarks());
        let sg = if signal_grid.len() > 101 {
            Grid::uniform(slo, shi, 101)
        } else {
            signal_grid.clone()
        };
        check_dependence(inst.model.as_ref(), DependenceProperty::PdFosd, &xg, &sg, &sg)?.verdict
    };
    bid_curve_with(inst, signal_grid, fosd)
}

/// [`bid_curve`] with the PD-FOSD verdict supplied by the caller.
pub fn bid_curve_with(inst: &AuctionInstance, signal_grid: &Grid, fosd_certified: bool) -> Result<BidCurve> {
    let roots = signal_grid
        .par_iter()
        .map(|&y| max_bid(inst, y, y))
        .collect::<Result<Vec<_>>>()?;
    let mut curve = BidCurve::from_parts(
        inst.family.name(),
        signal_grid.to_vec(),
        roots.iter().map(|r| r.bid).collect(),
        roots.iter().map(|r| r.residual).collect(),
    )?;
    let mono_tol = 10.0 * inst.tolerances.root;
    if !curve.is_monotone(mono_tol) {
        let w = curve.bids.windows(2).position(|w| w[1] < w[0] - mono_tol).unwrap();
        let msg = format!(
            "bid decreases from {} at y={} to {} at y={}",
            curve.bids[w],
            curve.signals[w],
            curve.bids[w + 1],
            curve.signals[w + 1]
        );
        if fosd_certified {
            return Err(Error::Invariant(msg));
        }
        curve.warning = Some(format!("model not certified PD-FOSD; {msg}"));
    } else if !fosd_certified {
        curve.warning = Some("model not certified PD-FOSD on the working grid".into());
    }
    Ok(curve)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub signal: f64,
    pub equilibrium_bid: f64,
    /// Interim expected utility from bidding `β(y)`.
    pub equilibrium_utility: f64,
    pub best_deviation: f64,
    pub best_deviation_utility: f64,
    /// `max_b U(b) - U(β(y))` over the deviation grid.
    pub gain: f64,
}

/// Largest interim gain buyer 1 with signal `y` obtains by deviating from
/// `β(y)` to any bid in `deviations`, when rivals follow `curve`.
///
/// `U(b)` integrates the conditional expected utility of winning against a
/// price-setter with signal `z` over `{z : β(z) <= b}` against the density of
/// `Z₁` given `Y₁ = y`.
pub fn best_response_gain(inst: &AuctionInstance, y: f64, curve: &BidCurve, deviations: &Grid) -> Result<BestResponse> {
    let model = inst.model.as_ref();
    let (slo, shi) = model.signal_support();
    check_in("signal y", y, slo, shi)?;
    let (blo, bhi) = inst.family.bid_interval();
    deviations.check_within("deviation grid", blo, bhi)?;
    let opts = inst.quadrature_options();

    let norm = quadrature::integrate(|z| model.signal_density(y, z), slo, shi, &curve.signals, opts)?;
    if norm.value <= 0.0 {
        return Err(Error::Assumption {
            y,
            z: f64::NAN,
            reason: "signal density of Z₁ given Y₁ vanishes".into(),
        });
    }

    let eq_bid = curve.bid_at(y);
    let mut bids: Vec<f64> = deviations.to_vec();
    bids.push(eq_bid);
    let reach: Vec<Option<f64>> = bids.iter().map(|&b| curve.max_signal_beaten(b)).collect();

    let mut cuts: Vec<f64> = curve.signals.clone();
    cuts.extend(reach.iter().flatten());
    cuts.push(slo);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let win_value = |z: f64| -> f64 {
        let b = curve.bid_at(z).clamp(blo, bhi);
        let w = conditional_expectation_tol(
            model,
            |x| {
                inst.utility
                    .evaluate(x - inst.investment - inst.family.payoff_unchecked(x, b))
            },
            &inst.family.kinks(b),
            y,
            z,
            inst.tolerances.quadrature,
        )
        .map(|e| e.value)
        .unwrap_or(f64::NAN);
        w * model.signal_density(y, z)
    };
    let pieces = cuts
        .par_windows(2)
        .map(|w| quadrature::integrate(win_value, w[0], w[1], &[], Options::abs(opts.abs_tol * 1e-2)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut cumulative = Vec::with_capacity(cuts.len());
    cumulative.push(0.0);
    for p in &pieces {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + p.value);
    }
    let utility_at = |reach: Option<f64>| -> f64 {
        match reach {
            None => 0.0,
            Some(z) => {
                let k = cuts.partition_point(|&c| c < z);
                cumulative[k.min(cuts.len() - 1)] / norm.value
            }
        }
    };
    let eq_utility = utility_at(reach[reach.len() - 1]);
    let (best_dev, best_u) = bids[..bids.len() - 1]
        .iter()
        .zip(&reach)
        .map(|(&b, &r)| (b, utility_at(r)))
        .fold(
            (eq_bid, f64::NEG_INFINITY),
            |acc, cur| if cur.1 > acc.1 { cur } else { acc },
        );
    Ok(BestResponse {
        signal: y,
        equilibrium_bid: eq_bid,
        equilibrium_utility: eq_utility,
        best_deviation: best_dev,
        best_deviation_utility: best_u,
        gain: best_u - eq_utility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::information::{Example1, LinearTilt};
    use approx::assert_abs_diff_eq;

    fn inst(fam: SecurityFamily) -> AuctionInstance {
        AuctionInstance::new(Arc::new(Example1), fam, UtilityFunction::linear(), 0.2).unwrap()
    }

    #[test]
    fn expected_utility_closed_forms() {
        let debt = inst(SecurityFamily::debt(1.0));
        assert_abs_diff_eq!(
            expected_utility(&debt, 0.0, 0.0, 0.0).unwrap().value,
            0.3,
            epsilon = 1e-13
        );
        let eq = inst(SecurityFamily::equity(1.0));
        assert_abs_diff_eq!(
            expected_utility(&eq, 1.0, 0.0, 0.0).unwrap().value,
            -0.2,
            epsilon = 1e-13
        );
        assert!(matches!(
            expected_utility(&eq, 1.5, 0.0, 0.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn max_bid_closed_forms() {
        let eq = inst(SecurityFamily::equity(1.0));
        assert_abs_diff_eq!(max_bid(&eq, 0.0, 0.0).unwrap().bid, 0.6, epsilon = 1e-9);
        assert_abs_diff_eq!(
            max_bid(&eq, 1.0, 1.0).unwrap().bid,
            1.0 - 0.2 / (0.5 + 1.0 / 54.0),
            epsilon = 1e-9
        );
        let debt = max_bid(&inst(SecurityFamily::debt(1.0)), 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(debt.bid, 1.0 - 0.4f64.sqrt(), epsilon = 1e-9);
        assert!(debt.bid > 1.0 / 3.0);
        assert!(debt.residual.abs() <= 1e-9);
        let cash = max_bid(&inst(SecurityFamily::cash(1.0)), 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(cash.bid, 0.3, epsilon = 1e-9);
    }

    #[test]
    fn non_bracketing_family_is_an_assumption_error() {
        // Bids capped at 0.1 never exhaust the profit.
        let fam = SecurityFamily::cash(1.0).with_bid_interval(0.0, 0.1).unwrap();
        let err = AuctionInstance::new(Arc::new(Example1), fam, UtilityFunction::linear(), 0.2).unwrap_err();
        assert!(matches!(err, Error::Assumption { .. }), "{err}");
    }

    #[test]
    fn nonpositive_investment_is_rejected() {
        assert!(AuctionInstance::new(
            Arc::new(Example1),
            SecurityFamily::cash(1.0),
            UtilityFunction::linear(),
            0.0
        )
        .is_err());
    }

    #[test]
    fn curve_inversion() {
        let c = BidCurve::from_parts("t", vec![0.0, 0.5, 1.0], vec![0.2, 0.3, 0.3], vec![0.0; 3]).unwrap();
        assert_eq!(c.max_signal_beaten(0.1), None);
        assert_abs_diff_eq!(c.max_signal_beaten(0.25).unwrap(), 0.25, epsilon = 1e-15);
        // ties at the flat top resolve toward winning
        assert_eq!(c.max_signal_beaten(0.3), Some(1.0));
        assert_abs_diff_eq!(c.bid_at(0.75), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn cash_curve_equals_conditional_mean_minus_investment() {
        let m = Arc::new(LinearTilt::new(2, 0.6).unwrap());
        let cash = AuctionInstance::new(m.clone(), SecurityFamily::cash(1.0), UtilityFunction::linear(), 0.2).unwrap();
        let curve = bid_curve(&cash, &Grid::uniform(0.0, 1.0, 11)).unwrap();
        assert!(curve.warning.is_none());
        for (&y, &b) in curve.signals.iter().zip(&curve.bids) {
            let mean = crate::information::conditional_expectation(m.as_ref(), |x| x, &[], y, y).unwrap();
            assert_abs_diff_eq!(b, mean.value - 0.2, epsilon = 1e-9);
        }
    }

    #[test]
    fn never_winning_deviation_earns_zero() {
        let debt = inst(SecurityFamily::debt(1.0));
        let curve = bid_curve(&debt, &Grid::uniform(0.0, 1.0, 41)).unwrap();
        let br = best_response_gain(&debt, 0.7, &curve, &Grid::new(vec![0.0]).unwrap()).unwrap();
        assert_eq!(br.best_deviation_utility, 0.0);
        assert!(br.equilibrium_utility > 0.0);
    }
}
