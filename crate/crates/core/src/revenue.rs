//! Seller revenue: conditional and expected revenue per family, ex-post
//! dominance, rankings, Monte Carlo cross-checks and the Example 1 gap.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{bid_curve, max_bid, AuctionInstance, BidCurve, Tolerances};
use crate::error::{check_in, Error, Result};
use crate::grid::Grid;
use crate::information::{conditional_expectation_tol, Example1, InformationModel};
use crate::preferences::UtilityFunction;
use crate::quadrature::{integrate, Estimate, Options};
use crate::securities::{SecurityFamily, SecurityKind, MAX_WITNESSES};

pub const SCHEMA_VERSION: u32 = 1;

/// Absolute error target of [`expected_revenue`].
pub const REVENUE_TOL: f64 = 1e-6;

const MC_BATCH: usize = 1 << 16;

/// `E[payoff(X, bid) | Y₁ = y, Z₁ = z]` with no ordering constraint on the
/// signals.
pub fn conditional_payment(inst: &AuctionInstance, bid: f64, y: f64, z: f64) -> Result<Estimate> {
    let (blo, bhi) = inst.family.bid_interval();
    check_in("bid", bid, blo, bhi)?;
    let bid = bid.clamp(blo, bhi);
    conditional_expectation_tol(
        inst.model.as_ref(),
        |x| inst.family.payoff_unchecked(x, bid),
        &inst.family.kinks(bid),
        y,
        z,
        inst.tolerances.quadrature,
    )
}

/// Revenue conditional on the winner holding `y1` and the price-setter `z1`:
/// the winner pays the security at `β(z1)`.
pub fn conditional_revenue(inst: &AuctionInstance, curve: &BidCurve, y1: f64, z1: f64) -> Result<Estimate> {
    if y1 <= z1 {
        let (lo, hi) = inst.model.signal_support();
        return Err(Error::Domain {
            what: "winner signal y1 (must exceed z1)",
            value: y1,
            lo: z1.max(lo),
            hi,
        });
    }
    conditional_payment(inst, curve.bid_at(z1), y1, z1)
}

/// `E[payoff(X, β(Z₁)) | Y₁ > Z₁]` by nested quadrature over the signal
/// triangle, normalized by the integrated signal density.
pub fn expected_revenue(inst: &AuctionInstance, curve: &BidCurve) -> Result<Estimate> {
    expected_revenue_tol(inst, curve, REVENUE_TOL)
}

pub fn expected_revenue_tol(inst: &AuctionInstance, curve: &BidCurve, tol: f64) -> Result<Estimate> {
    let model = inst.model.as_ref();
    let (lo, hi) = model.signal_support();
    // Outer integral over the price-setter signal, whose kinks sit at the
    // curve nodes; the inner one over the winner signal is smooth.
    let inner_tol = tol * 1e-2 / (hi - lo);
    let mut z_breaks = curve.signals.clone();
    z_breaks.extend(model.signal_knots());
    let y_breaks = model.signal_knots();

    let slab = |z: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        if z >= hi {
            return 0.0;
        }
        let breaks: Vec<f64> = y_breaks.iter().copied().filter(|&b| b > z).collect();
        integrate(f, z, hi, &breaks, Options::abs(inner_tol)).map_or(f64::NAN, |e| e.value)
    };
    let outer = |g: &(dyn Fn(f64) -> f64 + Sync)| -> Result<Estimate> {
        let pieces = split(lo, hi, &z_breaks)
            .par_iter()
            .map(|&(a, b)| integrate(g, a, b, &[], Options::abs(tol * 1e-1 * (b - a) / (hi - lo))))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(pieces.iter().fold(Estimate::new(0.0, 0.0), |acc, e| {
            Estimate::new(acc.value + e.value, acc.error + e.error)
        }))
    };

    let mass = outer(&|z: f64| slab(z, &|y: f64| model.signal_density(y, z)))?;
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(mass.value > 0.0) {
        return Err(Error::Validation("signal density puts no mass on {y > z}".into()));
    }
    let revenue = outer(&|z: f64| {
        let bid = curve.bid_at(z);
        slab(z, &|y: f64| {
            let g = model.signal_density(y, z);
            if g == 0.0 {
                return 0.0;
            }
            conditional_payment(inst, bid, y, z).map_or(f64::NAN, |e| e.value) * g
        })
    })?;
    if !revenue.value.is_finite() {
        return Err(Error::Validation("revenue integrand failed to evaluate".into()));
    }
    let value = revenue.value / mass.value;
    let error = (revenue.error + value.abs() * mass.error) / mass.value + 2.0 * inner_tol;
    Ok(Estimate::new(value, error))
}

fn split(lo: f64, hi: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2).map(|w| (w[0], w[1])).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Draws with `y > z` that entered the average.
    pub samples: usize,
    /// Signal pairs drawn.
    pub draws: usize,
    pub seed: u64,
}

/// Monte Carlo estimate of expected revenue from `draws` signal pairs.
///
/// Draws are split into fixed batches, each with its own ChaCha stream of
/// the master seed, and reduced in batch order, so the result does not depend
/// on scheduling.
pub fn monte_carlo_revenue(inst: &AuctionInstance, curve: &BidCurve, draws: usize, seed: u64) -> Result<McEstimate> {
    if draws < 2 {
        return Err(Error::Parameter(format!("need at least 2 draws, got {draws}")));
    }
    let model = inst.model.as_ref();
    let batches = draws.div_ceil(MC_BATCH);
    let partial: Vec<(f64, f64, usize)> = (0..batches)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let n = MC_BATCH.min(draws - k * MC_BATCH);
            let (mut s, mut s2, mut kept) = (0.0, 0.0, 0usize);
            for _ in 0..n {
                let (y, z) = model.sample_signals(&mut rng);
                let u: f64 = rng.random();
                if y <= z {
                    continue;
                }
                let x = model.value_quantile(u, y, z);
                let p = inst.family.payoff_unchecked(x, curve.bid_at(z));
                s += p;
                s2 += p * p;
                kept += 1;
            }
            (s, s2, kept)
        })
        .collect();
    let (s, s2, kept) = partial
        .iter()
        .fold((0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    if kept < 2 {
        return Err(Error::Validation(format!("only {kept} of {draws} draws had y > z")));
    }
    let n = kept as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples: kept,
        draws,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceWitness {
    pub y1: f64,
    pub z1: f64,
    pub revenue_a: f64,
    pub revenue_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub family_a: String,
    pub family_b: String,
    /// True iff `a` earns at least as much as `b` at every grid pair `y1 > z1`.
    pub verdict: bool,
    pub tolerance: f64,
    pub points: usize,
    pub total_violations: usize,
    pub witnesses: Vec<DominanceWitness>,
    /// Smallest `revenue_a - revenue_b` over the grid.
    pub min_difference: f64,
}

/// Revenue table over the grid pairs `y1 > z1`, in row-major order.
fn revenue_table(inst: &AuctionInstance, curve: &BidCurve, grid: &Grid) -> Result<Vec<(f64, f64, f64)>> {
    let pairs: Vec<(f64, f64)> = grid
        .iter()
        .flat_map(|&y| grid.iter().filter(move |&&z| z < y).map(move |&z| (y, z)))
        .collect();
    pairs
        .par_iter()
        .map(|&(y, z)| conditional_revenue(inst, curve, y, z).map(|e| (y, z, e.value)))
        .collect()
}

/// Checks `conditional_revenue(a) >= conditional_revenue(b) - 2·tol_quad` at
/// every grid pair with `y1 > z1`.
pub fn expost_dominance(
    a: (&AuctionInstance, &BidCurve),
    b: (&AuctionInstance, &BidCurve),
    yz_grid: &Grid,
) -> Result<DominanceReport> {
    let (lo, hi) = a.0.model.signal_support();
    yz_grid.check_within("signal grid", lo, hi)?;
    let ta = revenue_table(a.0, a.1, yz_grid)?;
    let tb = revenue_table(b.0, b.1, yz_grid)?;
    Ok(dominance_from_tables(a.0, b.0, &ta, &tb))
}

fn dominance_from_tables(
    a: &AuctionInstance,
    b: &AuctionInstance,
    ta: &[(f64, f64, f64)],
    tb: &[(f64, f64, f64)],
) -> DominanceReport {
    let tol = 2.0 * a.tolerances.quadrature.max(b.tolerances.quadrature);
    let mut witnesses = Vec::new();
    let mut total = 0;
    let mut min_diff = f64::INFINITY;
    for (&(y1, z1, ra), &(_, _, rb)) in ta.iter().zip(tb) {
        min_diff = min_diff.min(ra - rb);
        if ra < rb - tol {
            total += 1;
            if witnesses.len() < MAX_WITNESSES {
                witnesses.push(DominanceWitness {
                    y1,
                    z1,
                    revenue_a: ra,
                    revenue_b: rb,
                });
            }
        }
    }
    DominanceReport {
        family_a: a.family.name().to_string(),
        family_b: b.family.name().to_string(),
        verdict: total == 0,
        tolerance: tol,
        points: ta.len(),
        total_violations: total,
        witnesses,
        min_difference: min_diff,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRevenue {
    pub name: String,
    pub kind: SecurityKind,
    pub revenue: f64,
    pub quad_error: f64,
    pub mc: Option<McEstimate>,
    /// Quadrature within three Monte Carlo standard errors.
    pub mc_agrees: Option<bool>,
    pub max_root_residual: f64,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevenueReport {
    pub schema_version: u32,
    pub model: String,
    pub utility: UtilityFunction,
    pub investment: f64,
    pub families: Vec<FamilyRevenue>,
    /// Family names by descending expected revenue.
    pub ranking: Vec<String>,
    /// `dominance[i][j]` compares family `i` against family `j`; `None` on
    /// the diagonal.
    pub dominance: Vec<Vec<Option<DominanceReport>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankOptions {
    pub signal_grid: Grid,
    pub dominance_grid: Grid,
    /// Monte Carlo draws per family; zero skips the cross-check.
    pub mc_draws: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl RankOptions {
    pub fn for_model(model: &dyn InformationModel) -> Self {
        let (lo, hi) = model.signal_support();
        Self {
            signal_grid: Grid::uniform(lo, hi, 201),
            dominance_grid: Grid::uniform(lo, hi, 21),
            mc_draws: 0,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

/// Equilibrium curves, expected revenues, Monte Carlo checks and the
/// pairwise dominance matrix for each family on one model.
pub fn rank_families(
    model: Arc<dyn InformationModel>,
    utility: UtilityFunction,
    investment: f64,
    families: &[SecurityFamily],
    opts: &RankOptions,
) -> Result<RevenueReport> {
    if families.is_empty() {
        return Err(Error::Input("no families to rank".into()));
    }
    let mut solved = Vec::with_capacity(families.len());
    for fam in families {
        let inst = AuctionInstance::with_tolerances(model.clone(), fam.clone(), utility, investment, opts.tolerances)?;
        let curve = bid_curve(&inst, &opts.signal_grid)?;
        solved.push((inst, curve));
    }
    let mut rows = Vec::with_capacity(solved.len());
    let mut tables = Vec::with_capacity(solved.len());
    for (inst, curve) in &solved {
        let est = expected_revenue(inst, curve)?;
        let mc = if opts.mc_draws > 0 {
            Some(monte_carlo_revenue(inst, curve, opts.mc_draws, opts.seed)?)
        } else {
            None
        };
        let mc_agrees = mc
            .as_ref()
            .map(|m| (m.mean - est.value).abs() <= 3.0 * m.std_error + est.error);
        rows.push(FamilyRevenue {
            name: inst.family.name().to_string(),
            kind: inst.family.kind(),
            revenue: est.value,
            quad_error: est.error,
            mc,
            mc_agrees,
            max_root_residual: curve.max_residual,
            warning: curve.warning.clone(),
        });
        tables.push(revenue_table(inst, curve, &opts.dominance_grid)?);
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&i, &j| rows[j].revenue.total_cmp(&rows[i].revenue));
    let dominance = (0..solved.len())
        .map(|i| {
            (0..solved.len())
                .map(|j| (i != j).then(|| dominance_from_tables(&solved[i].0, &solved[j].0, &tables[i], &tables[j])))
                .collect()
        })
        .collect();
    Ok(RevenueReport {
        schema_version: SCHEMA_VERSION,
        model: model.name(),
        utility,
        investment,
        ranking: order.iter().map(|&i| rows[i].name.clone()).collect(),
        families: rows,
        dominance,
    })
}

/// Closed-form conditional revenue gap (equity minus debt) in Example 1 at
/// winner signal `y1` and price-setter signal `y2 <= y1`, with linear
/// utility: `(b_e - 1)(y1 - y2)/54`, where `b_e` is the equity bid at `y2`.
///
/// Valid while the zero-signal debt bid exceeds 1/3, which is checked by
/// solving for it.
pub fn example1_gap(y1: f64, y2: f64, investment: f64) -> Result<f64> {
    check_in("signal y1", y1, 0.0, 1.0)?;
    check_in("signal y2", y2, 0.0, y1)?;
    let model: Arc<dyn InformationModel> = Arc::new(Example1);
    let build = |fam| AuctionInstance::new(model.clone(), fam, UtilityFunction::Linear, investment);
    let debt = build(SecurityFamily::debt(1.0)).map_err(|e| gap_precondition(investment, e.to_string()))?;
    let b_debt = max_bid(&debt, 0.0, 0.0)?.bid;
    if b_debt <= 1.0 / 3.0 {
        return Err(Error::Precondition {
            reason: format!("zero-signal debt bid {b_debt} does not exceed 1/3 at I = {investment}"),
            gap: 1.0 / 3.0 - b_debt,
        });
    }
    let equity = build(SecurityFamily::equity(1.0))?;
    let b_eq = max_bid(&equity, y2, y2)?.bid;
    Ok((b_eq - 1.0) * (y1 - y2) / 54.0)
}

fn gap_precondition(investment: f64, reason: String) -> Error {
    Error::Precondition {
        reason: format!("I = {investment} outside the valid range: {reason}"),
        gap: f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::information::LinearTilt;
    use approx::assert_abs_diff_eq;

    fn solved(fam: SecurityFamily, n: usize) -> (AuctionInstance, BidCurve) {
        let inst = AuctionInstance::new(Arc::new(Example1), fam, UtilityFunction::Linear, 0.2).unwrap();
        let curve = bid_curve(&inst, &Grid::uniform(0.0, 1.0, n)).unwrap();
        (inst, curve)
    }

    #[test]
    fn conditional_revenue_examples() {
        let (eq, c) = solved(SecurityFamily::equity(1.0), 21);
        let r = conditional_revenue(&eq, &c, 1.0, 0.0).unwrap().value;
        assert_abs_diff_eq!(r, 0.6 * (0.5 + 1.0 / 54.0), epsilon = 1e-9);

        let (debt, c) = solved(SecurityFamily::debt(1.0), 21);
        let b = 1.0 - 0.4f64.sqrt();
        let oracle = 2.0 / 27.0 + (b * b - 1.0 / 9.0) / 2.0 + b * (1.0 - b);
        assert_abs_diff_eq!(
            conditional_revenue(&debt, &c, 1.0, 0.0).unwrap().value,
            oracle,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(oracle, 0.3185185, epsilon = 1e-6);

        assert!(matches!(
            conditional_revenue(&debt, &c, 0.3, 0.3),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn indifference_anchor_on_the_diagonal() {
        for z in [0.0, 0.35, 0.8] {
            let mut pays = Vec::new();
            for fam in SecurityFamily::standard_set(1.0) {
                let (inst, c) = solved(fam, 21);
                pays.push(conditional_payment(&inst, c.bid_at(z), z, z).unwrap().value);
            }
            let mean = crate::information::conditional_expectation(&Example1, |x| x, &[], z, z)
                .unwrap()
                .value;
            for p in pays {
                assert_abs_diff_eq!(p, mean - 0.2, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn gap_examples() {
        assert_abs_diff_eq!(example1_gap(1.0, 0.0, 0.2).unwrap(), -0.4 / 54.0, epsilon = 1e-10);
        assert_eq!(example1_gap(0.4, 0.4, 0.2).unwrap(), 0.0);
        assert!(example1_gap(0.2, 0.4, 0.2).is_err());
        // At I = 0.25 the zero-signal debt bid is 1 - √0.5 < 1/3.
        assert!(matches!(example1_gap(1.0, 0.0, 0.25), Err(Error::Precondition { .. })));
    }

    #[test]
    fn mc_is_deterministic() {
        let (inst, c) = solved(SecurityFamily::cash(1.0), 11);
        let a = monte_carlo_revenue(&inst, &c, 5000, 9).unwrap();
        let b = monte_carlo_revenue(&inst, &c, 5000, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.samples > 2000 && a.samples < 3000);
        assert!(monte_carlo_revenue(&inst, &c, 1, 9).is_err());
    }

    #[test]
    fn single_family_ranking() {
        let m: Arc<dyn InformationModel> = Arc::new(LinearTilt::new(2, 1.0).unwrap());
        let mut opts = RankOptions::for_model(m.as_ref());
        opts.signal_grid = Grid::uniform(0.0, 1.0, 41);
        opts.dominance_grid = Grid::uniform(0.0, 1.0, 5);
        let rep = rank_families(m, UtilityFunction::Linear, 0.2, &[SecurityFamily::debt(1.0)], &opts).unwrap();
        assert_eq!(rep.ranking, vec!["debt".to_string()]);
        assert_eq!(rep.dominance, vec![vec![None]]);
    }
}
