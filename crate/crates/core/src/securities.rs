//! Security families and their structural conditions.
//!
//! A family is a one-parameter set of payment schedules `payoff(x, b)` with the
//! parameter `b` ranging over a closed bid interval. The four standard kinds
//! are piecewise linear in `x`; their kinks are reported by
//! [`SecurityFamily::kinks`] so that quadrature and grid checks can place nodes
//! exactly on them.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_in, Error, Result};
use crate::grid::Grid;

/// Absolute tolerance on payoff differences for the quasi-monotonicity and
/// admissibility checks.
pub const STRUCTURE_TOL: f64 = 1e-9;

/// Number of witnesses kept in a report; the total count is always recorded.
pub const MAX_WITNESSES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecurityKind {
    Cash,
    Debt,
    Equity,
    CallOption,
    Custom,
}

impl SecurityKind {
    pub const STANDARD: [SecurityKind; 4] = [
        SecurityKind::Cash,
        SecurityKind::Debt,
        SecurityKind::Equity,
        SecurityKind::CallOption,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SecurityKind::Cash => "cash",
            SecurityKind::Debt => "debt",
            SecurityKind::Equity => "equity",
            SecurityKind::CallOption => "call_option",
            SecurityKind::Custom => "custom",
        }
    }
}

impl fmt::Display for SecurityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tabulated payoff surface, bilinearly interpolated.
///
/// CSV layout: header row `x,<b_1>,<b_2>,...`; every following row holds an
/// `x` value followed by the payoffs at each bid.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffTable {
    xs: Vec<f64>,
    bids: Vec<f64>,
    /// `values[i][j]` is the payoff at `xs[i]`, `bids[j]`.
    values: Vec<Vec<f64>>,
}

impl PayoffTable {
    pub fn new(xs: Vec<f64>, bids: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let xs = Grid::new(xs)?;
        let bids = Grid::new(bids)?;
        if xs.len() < 2 || bids.len() < 2 {
            return Err(Error::Validation(
                "payoff table needs at least two x values and two bids".into(),
            ));
        }
        if values.len() != xs.len() || values.iter().any(|r| r.len() != bids.len()) {
            return Err(Error::Validation(format!(
                "payoff table body must be {}x{}",
                xs.len(),
                bids.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("payoff table contains non-finite values".into()));
        }
        Ok(Self {
            xs: xs.into(),
            bids: bids.into(),
            values,
        })
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        let bids = header
            .iter()
            .skip(1)
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Validation(format!("bad bid header {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Validation(format!("bad number {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let (x, rest) = row
                .split_first()
                .ok_or_else(|| Error::Validation("empty payoff row".into()))?;
            xs.push(*x);
            values.push(rest.to_vec());
        }
        Self::new(xs, bids, values)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn bids(&self) -> &[f64] {
        &self.bids
    }

    pub fn eval(&self, x: f64, b: f64) -> f64 {
        let (i, tx) = locate(&self.xs, x);
        let (j, tb) = locate(&self.bids, b);
        let v = &self.values;
        let lo = v[i][j] * (1.0 - tb) + v[i][j + 1] * tb;
        let hi = v[i + 1][j] * (1.0 - tb) + v[i + 1][j + 1] * tb;
        lo * (1.0 - tx) + hi * tx
    }
}

/// Cell index and fractional offset of `t` in a sorted node list (clamped).
pub(crate) fn locate(nodes: &[f64], t: f64) -> (usize, f64) {
    let n = nodes.len();
    if t <= nodes[0] {
        return (0, 0.0);
    }
    if t >= nodes[n - 1] {
        return (n - 2, 1.0);
    }
    let k = nodes.partition_point(|&p| p <= t) - 1;
    let k = k.min(n - 2);
    (k, (t - nodes[k]) / (nodes[k + 1] - nodes[k]))
}

pub type PayoffFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// User-supplied payoff for `SecurityKind::Custom`.
#[derive(Clone)]
pub enum CustomPayoff {
    Table(Arc<PayoffTable>),
    Function(Arc<PayoffFn>),
}

impl fmt::Debug for CustomPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CustomPayoff::Table(t) => f
                .debug_struct("Table")
                .field("xs", &t.xs.len())
                .field("bids", &t.bids.len())
                .finish(),
            CustomPayoff::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SecurityFamily {
    name: String,
    kind: SecurityKind,
    bid_lo: f64,
    bid_hi: f64,
    value_lo: f64,
    value_cap: f64,
    custom: Option<CustomPayoff>,
}

impl SecurityFamily {
    /// One of the four standard families over value support `[0, value_cap]`,
    /// with its conventional bid interval (`[0, 1]` for equity, `[0, value_cap]`
    /// otherwise).
    pub fn standard(kind: SecurityKind, value_cap: f64) -> Result<Self> {
        if !(value_cap > 0.0 && value_cap.is_finite()) {
            return Err(Error::Parameter(format!("value cap must be positive, got {value_cap}")));
        }
        let bid_hi = match kind {
            SecurityKind::Equity => 1.0,
            SecurityKind::Custom => {
                return Err(Error::Parameter(
                    "custom families need a payoff; use SecurityFamily::custom".into(),
                ))
            }
            _ => value_cap,
        };
        Ok(Self {
            name: kind.as_str().to_string(),
            kind,
            bid_lo: 0.0,
            bid_hi,
            value_lo: 0.0,
            value_cap,
            custom: None,
        })
    }

    pub fn cash(value_cap: f64) -> Self {
        Self::standard(SecurityKind::Cash, value_cap).expect("positive cap")
    }

    pub fn debt(value_cap: f64) -> Self {
        Self::standard(SecurityKind::Debt, value_cap).expect("positive cap")
    }

    pub fn equity(value_cap: f64) -> Self {
        Self::standard(SecurityKind::Equity, value_cap).expect("positive cap")
    }

    pub fn call_option(value_cap: f64) -> Self {
        Self::standard(SecurityKind::CallOption, value_cap).expect("positive cap")
    }

    /// The four standard families in the order cash, debt, equity, call option.
    pub fn standard_set(value_cap: f64) -> Vec<Self> {
        SecurityKind::STANDARD
            .iter()
            .map(|&k| Self::standard(k, value_cap).expect("positive cap"))
            .collect()
    }

    pub fn custom(
        name: impl Into<String>,
        bid_interval: (f64, f64),
        value_support: (f64, f64),
        payoff: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_interval("bid interval", bid_interval)?;
        check_interval("value support", value_support)?;
        Ok(Self {
            name: name.into(),
            kind: SecurityKind::Custom,
            bid_lo: bid_interval.0,
            bid_hi: bid_interval.1,
            value_lo: value_support.0,
            value_cap: value_support.1,
            custom: Some(CustomPayoff::Function(Arc::new(payoff))),
        })
    }

    /// Custom family backed by a payoff table; supports are the table's ranges.
    pub fn from_table(name: impl Into<String>, table: PayoffTable) -> Self {
        Self {
            name: name.into(),
            kind: SecurityKind::Custom,
            bid_lo: table.bids[0],
            bid_hi: *table.bids.last().unwrap(),
            value_lo: table.xs[0],
            value_cap: *table.xs.last().unwrap(),
            custom: Some(CustomPayoff::Table(Arc::new(table))),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_bid_interval(mut self, lo: f64, hi: f64) -> Result<Self> {
        check_interval("bid interval", (lo, hi))?;
        self.bid_lo = lo;
        self.bid_hi = hi;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SecurityKind {
        self.kind
    }

    pub fn bid_interval(&self) -> (f64, f64) {
        (self.bid_lo, self.bid_hi)
    }

    pub fn value_support(&self) -> (f64, f64) {
        (self.value_lo, self.value_cap)
    }

    pub fn value_cap(&self) -> f64 {
        self.value_cap
    }

    /// Payment to the seller at realized value `x` for bid `b`.
    pub fn payoff(&self, x: f64, b: f64) -> Result<f64> {
        check_in("bid", b, self.bid_lo, self.bid_hi)?;
        check_in("value", x, self.value_lo, self.value_cap)?;
        Ok(self.payoff_unchecked(x, b))
    }

    /// Payoff without domain checks; used in inner loops where the caller
    /// already guarantees the bounds.
    #[inline]
    pub fn payoff_unchecked(&self, x: f64, b: f64) -> f64 {
        match self.kind {
            SecurityKind::Cash => b,
            SecurityKind::Debt => x.min(b),
            SecurityKind::Equity => b * x,
            SecurityKind::CallOption => (x - self.value_cap + b).max(0.0),
            SecurityKind::Custom => match self.custom.as_ref().expect("custom payoff") {
                CustomPayoff::Table(t) => t.eval(x, b),
                CustomPayoff::Function(f) => f(x, b),
            },
        }
    }

    /// Values of `x` at which `payoff(·, b)` may fail to be smooth.
    pub fn kinks(&self, b: f64) -> Vec<f64> {
        match self.kind {
            SecurityKind::Cash | SecurityKind::Equity => Vec::new(),
            SecurityKind::Debt => vec![b],
            SecurityKind::CallOption => vec![self.value_cap - b],
            SecurityKind::Custom => match &self.custom {
                Some(CustomPayoff::Table(t)) => t.xs.clone(),
                _ => Vec::new(),
            },
        }
    }

    /// `n` uniform bids over the bid interval.
    pub fn bid_grid(&self, n: usize) -> Grid {
        Grid::uniform(self.bid_lo, self.bid_hi, n)
    }
}

fn check_interval(what: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Parameter(format!("{what} [{lo}, {hi}] must satisfy lo < hi")));
    }
    Ok(())
}

/// Configuration-side description of a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: SecurityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bid_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bid_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_cap: Option<f64>,
    /// Payoff table CSV for `kind = "custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
}

impl FamilySpec {
    pub fn standard(kind: SecurityKind) -> Self {
        Self {
            kind,
            name: None,
            bid_lo: None,
            bid_hi: None,
            value_cap: None,
            table: None,
        }
    }

    /// Builds the family; `default_cap` is the model's upper value bound and
    /// relative table paths are resolved against `base_dir`.
    pub fn build(&self, default_cap: f64, base_dir: &Path) -> Result<SecurityFamily> {
        let mut fam = match self.kind {
            SecurityKind::Custom => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Validation("custom family requires a `table` payoff CSV".into()))?;
                let table = PayoffTable::from_path(base_dir.join(path))?;
                SecurityFamily::from_table("custom", table)
            }
            k => {
                if self.table.is_some() {
                    return Err(Error::Validation(format!(
                        "`table` is only valid for custom families, not {k}"
                    )));
                }
                SecurityFamily::standard(k, self.value_cap.unwrap_or(default_cap))?
            }
        };
        if let Some(name) = &self.name {
            fam = fam.with_name(name.clone());
        }
        if self.bid_lo.is_some() || self.bid_hi.is_some() {
            let (lo, hi) = fam.bid_interval();
            fam = fam.with_bid_interval(self.bid_lo.unwrap_or(lo), self.bid_hi.unwrap_or(hi))?;
        }
        Ok(fam)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibilityFailure {
    /// `payoff(x, b)` decreased between adjacent grid points.
    PayoffDecreasing,
    /// `x - payoff(x, b)` decreased between adjacent grid points.
    ResidualDecreasing,
    /// `x - payoff(x, b)` is constant over the grid.
    ResidualConstant,
    /// Adjacent-point jump exceeds the continuity bound.
    Discontinuity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityWitness {
    pub failure: AdmissibilityFailure,
    pub bid: f64,
    pub x_prev: f64,
    pub x_next: f64,
    /// The offending difference (or residual range for `ResidualConstant`).
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub family: String,
    pub verdict: bool,
    pub witnesses: Vec<AdmissibilityWitness>,
    pub total_violations: usize,
    pub x_grid_len: usize,
    pub bid_grid_len: usize,
}

/// Grid check that every `payoff(·, b)` is continuous and nondecreasing and
/// that `x - payoff(x, b)` is nondecreasing and nonconstant.
///
/// Continuity is spot-checked for custom families only: an admissible payoff
/// is 1-Lipschitz in `x` (both it and `x - payoff` are nondecreasing), so an
/// adjacent jump above ten grid steps flags a discontinuity.
pub fn check_admissible(family: &SecurityFamily, x_grid: &Grid, b_grid: &Grid) -> Result<AdmissibilityReport> {
    let (xlo, xhi) = family.value_support();
    let (blo, bhi) = family.bid_interval();
    x_grid.check_within("value grid", xlo, xhi)?;
    b_grid.check_within("bid grid", blo, bhi)?;

    let per_bid: Vec<Vec<AdmissibilityWitness>> = b_grid
        .par_iter()
        .map(|&b| {
            let mut out = Vec::new();
            let pay: Vec<f64> = x_grid.iter().map(|&x| family.payoff_unchecked(x, b)).collect();
            let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for (i, &x) in x_grid.iter().enumerate() {
                let r = x - pay[i];
                rmin = rmin.min(r);
                rmax = rmax.max(r);
                if i == 0 {
                    continue;
                }
                let xp = x_grid[i - 1];
                let dp = pay[i] - pay[i - 1];
                let dr = (x - pay[i]) - (xp - pay[i - 1]);
                let mut push = |failure, value| {
                    out.push(AdmissibilityWitness {
                        failure,
                        bid: b,
                        x_prev: xp,
                        x_next: x,
                        value,
                    })
                };
                if dp < -STRUCTURE_TOL {
                    push(AdmissibilityFailure::PayoffDecreasing, dp);
                }
                if dr < -STRUCTURE_TOL {
                    push(AdmissibilityFailure::ResidualDecreasing, dr);
                }
                if family.kind() == SecurityKind::Custom && dp.abs() > 10.0 * (x - xp) + STRUCTURE_TOL {
                    push(AdmissibilityFailure::Discontinuity, dp);
                }
            }
            // At the top of the bid interval debt, equity and call surrender
            // the whole value, so nonconstancy is only required below it.
            let top = b >= bhi - STRUCTURE_TOL;
            if !top && (x_grid.len() < 2 || rmax - rmin <= STRUCTURE_TOL) {
                out.push(AdmissibilityWitness {
                    failure: AdmissibilityFailure::ResidualConstant,
                    bid: b,
                    x_prev: x_grid.first(),
                    x_next: x_grid.last(),
                    value: rmax - rmin,
                });
            }
            out
        })
        .collect();

    let total: usize = per_bid.iter().map(Vec::len).sum();
    let witnesses = per_bid.into_iter().flatten().take(MAX_WITNESSES).collect();
    Ok(AdmissibilityReport {
        family: family.name().to_string(),
        verdict: total == 0,
        witnesses,
        total_violations: total,
        x_grid_len: x_grid.len(),
        bid_grid_len: b_grid.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteepnessMode {
    /// `payoff_a(·, b') - payoff_b(·, b̂)` crosses zero at most once, from below.
    Steep,
    /// `payoff_a(·, b') - payoff_b(·, b̂)` is nondecreasing.
    Strong,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteepnessWitness {
    pub bid_a: f64,
    pub bid_b: f64,
    pub x_prev: f64,
    pub x_next: f64,
    pub diff_prev: f64,
    pub diff_next: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteepnessReport {
    pub family_a: String,
    pub family_b: String,
    pub mode: SteepnessMode,
    pub verdict: bool,
    pub witnesses: Vec<SteepnessWitness>,
    pub total_violations: usize,
    pub x_grid_len: usize,
    pub bid_grid_a_len: usize,
    pub bid_grid_b_len: usize,
}

/// Default value grid for structural checks: `n` uniform points on the value
/// support plus every kink of both families at every grid bid.
pub fn steepness_value_grid(a: &SecurityFamily, b: &SecurityFamily, bids_a: &Grid, bids_b: &Grid, n: usize) -> Grid {
    let (lo, hi) = a.value_support();
    let kinks = bids_a
        .iter()
        .flat_map(|&p| a.kinks(p))
        .chain(bids_b.iter().flat_map(|&p| b.kinks(p)));
    Grid::uniform(lo, hi, n).with_points(kinks)
}

/// Checks whether `a` is (strongly) steeper than `b` on the given grids.
pub fn check_steepness(
    a: &SecurityFamily,
    b: &SecurityFamily,
    mode: SteepnessMode,
    x_grid: &Grid,
    bid_grid_a: &Grid,
    bid_grid_b: &Grid,
) -> Result<SteepnessReport> {
    for fam in [a, b] {
        let (lo, hi) = fam.value_support();
        x_grid.check_within("value grid", lo, hi)?;
    }
    bid_grid_a.check_within("bid grid a", a.bid_lo, a.bid_hi)?;
    bid_grid_b.check_within("bid grid b", b.bid_lo, b.bid_hi)?;

    let pay_b: Vec<Vec<f64>> = bid_grid_b
        .iter()
        .map(|&bb| x_grid.iter().map(|&x| b.payoff_unchecked(x, bb)).collect())
        .collect();

    let per_bid: Vec<(usize, Vec<SteepnessWitness>)> = bid_grid_a
        .par_iter()
        .map(|&ba| {
            let pay_a: Vec<f64> = x_grid.iter().map(|&x| a.payoff_unchecked(x, ba)).collect();
            let mut count = 0;
            let mut found = Vec::new();
            for (jb, &bb) in bid_grid_b.iter().enumerate() {
                let diff = |i: usize| pay_a[i] - pay_b[jb][i];
                match mode {
                    SteepnessMode::Strong => {
                        for i in 1..x_grid.len() {
                            let (dp, dn) = (diff(i - 1), diff(i));
                            if dn < dp - STRUCTURE_TOL {
                                count += 1;
                                if found.len() < MAX_WITNESSES {
                                    found.push(SteepnessWitness {
                                        bid_a: ba,
                                        bid_b: bb,
                                        x_prev: x_grid[i - 1],
                                        x_next: x_grid[i],
                                        diff_prev: dp,
                                        diff_next: dn,
                                    });
                                }
                            }
                        }
                    }
                    SteepnessMode::Steep => {
                        // First point where the difference is strictly positive;
                        // any later strictly negative point violates quasi-monotonicity.
                        let mut first_pos: Option<usize> = None;
                        for i in 0..x_grid.len() {
                            let d = diff(i);
                            match first_pos {
                                None if d > STRUCTURE_TOL => first_pos = Some(i),
                                Some(p) if d < -STRUCTURE_TOL => {
                                    count += 1;
                                    if found.len() < MAX_WITNESSES {
                                        found.push(SteepnessWitness {
                                            bid_a: ba,
                                            bid_b: bb,
                                            x_prev: x_grid[p],
                                            x_next: x_grid[i],
                                            diff_prev: diff(p),
                                            diff_next: d,
                                        });
                                    }
                                    break;
                                }
                                _ => {}
                            }
                        }
                    }
                }
            }
            (count, found)
        })
        .collect();

    let total = per_bid.iter().map(|(c, _)| c).sum::<usize>();
    let witnesses = per_bid.into_iter().flat_map(|(_, w)| w).take(MAX_WITNESSES).collect();
    Ok(SteepnessReport {
        family_a: a.name().to_string(),
        family_b: b.name().to_string(),
        mode,
        verdict: total == 0,
        witnesses,
        total_violations: total,
        x_grid_len: x_grid.len(),
        bid_grid_a_len: bid_grid_a.len(),
        bid_grid_b_len: bid_grid_b.len(),
    })
}

/// [`check_steepness`] with default grids: 101 bids per family and a
/// 2001-point value grid augmented with every kink.
pub fn check_steepness_default(a: &SecurityFamily, b: &SecurityFamily, mode: SteepnessMode) -> Result<SteepnessReport> {
    let ga = a.bid_grid(101);
    let gb = b.bid_grid(101);
    let xg = steepness_value_grid(a, b, &ga, &gb, 2001);
    check_steepness(a, b, mode, &xg, &ga, &gb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn standard_payoffs() {
        assert_eq!(SecurityFamily::cash(1.0).payoff(0.7, 0.25).unwrap(), 0.25);
        assert_abs_diff_eq!(
            SecurityFamily::equity(1.0).payoff(0.5, 0.6).unwrap(),
            0.30,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            SecurityFamily::call_option(1.0).payoff(0.9, 0.3).unwrap(),
            0.2,
            epsilon = 1e-15
        );
        assert_eq!(SecurityFamily::debt(1.0).payoff(0.2, 0.3).unwrap(), 0.2);
    }

    #[test]
    fn out_of_range_arguments_name_the_bound() {
        let eq = SecurityFamily::equity(1.0);
        match eq.payoff(0.5, 1.2) {
            Err(Error::Domain { what, hi, .. }) => {
                assert_eq!(what, "bid");
                assert_eq!(hi, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(eq.payoff(-0.1, 0.5), Err(Error::Domain { what: "value", .. })));
    }

    #[test]
    fn debt_and_cash_are_admissible() {
        let xg = Grid::uniform(0.0, 1.0, 201);
        let bg = Grid::uniform(0.0, 1.0, 21);
        for fam in [SecurityFamily::debt(1.0), SecurityFamily::cash(1.0)] {
            let rep = check_admissible(&fam, &xg, &bg).unwrap();
            assert!(rep.verdict, "{:?}", rep.witnesses.first());
        }
    }

    #[test]
    fn constant_residual_is_flagged_below_the_top_bid() {
        // x - payoff = b/2 for every x
        let fam = SecurityFamily::custom("shifted", (0.0, 1.0), (0.0, 1.0), |x, b| x - b / 2.0).unwrap();
        let rep = check_admissible(&fam, &Grid::uniform(0.0, 1.0, 11), &Grid::uniform(0.0, 1.0, 3)).unwrap();
        let bids: Vec<f64> = rep
            .witnesses
            .iter()
            .filter(|w| w.failure == AdmissibilityFailure::ResidualConstant)
            .map(|w| w.bid)
            .collect();
        assert_eq!(bids, vec![0.0, 0.5]);
    }

    #[test]
    fn quadratic_share_is_not_admissible() {
        let fam = SecurityFamily::custom("bx2", (0.0, 1.0), (0.0, 1.0), |x, b| b * x * x).unwrap();
        let xg = Grid::uniform(0.0, 1.0, 201);
        let bg = Grid::uniform(0.0, 1.0, 11);
        let rep = check_admissible(&fam, &xg, &bg).unwrap();
        assert!(!rep.verdict);
        for w in &rep.witnesses {
            assert_eq!(w.failure, AdmissibilityFailure::ResidualDecreasing);
            // residual derivative 1 - 2bx is negative only beyond 1/(2b)
            assert!(w.x_next > 1.0 / (2.0 * w.bid) - 1e-9);
        }
    }

    #[test]
    fn jump_is_flagged_for_custom() {
        let fam = SecurityFamily::custom(
            "jump",
            (0.0, 1.0),
            (0.0, 1.0),
            |x, b| {
                if x > 0.5 {
                    b * 0.9
                } else {
                    0.0
                }
            },
        )
        .unwrap();
        let rep = check_admissible(&fam, &Grid::uniform(0.0, 1.0, 1001), &Grid::uniform(0.5, 1.0, 3)).unwrap();
        assert!(rep
            .witnesses
            .iter()
            .any(|w| w.failure == AdmissibilityFailure::Discontinuity));
    }

    #[test]
    fn unsorted_grid_is_an_input_error() {
        assert!(matches!(Grid::new(vec![0.2, 0.1]), Err(Error::Input(_))));
    }

    #[test]
    fn steepness_examples() {
        let cap = 1.0;
        let (cash, debt, equity, call) = (
            SecurityFamily::cash(cap),
            SecurityFamily::debt(cap),
            SecurityFamily::equity(cap),
            SecurityFamily::call_option(cap),
        );
        let strong = |a, b| check_steepness_default(a, b, SteepnessMode::Strong).unwrap();
        let steep = |a, b| check_steepness_default(a, b, SteepnessMode::Steep).unwrap();
        assert!(strong(&equity, &cash).verdict);
        assert!(steep(&call, &debt).verdict);

        let rep = strong(&call, &debt);
        assert!(!rep.verdict);
        // On (0, min(b̂, 1 - b')) the difference is -x.
        let w = &rep.witnesses[0];
        assert!(w.x_prev < w.bid_b && w.x_prev < cap - w.bid_a);
        assert_abs_diff_eq!(w.diff_prev, -w.x_prev, epsilon = 1e-12);
        assert_abs_diff_eq!(w.diff_next, -w.x_next, epsilon = 1e-12);
    }

    #[test]
    fn equal_equity_bids_are_trivially_steep() {
        let eq = SecurityFamily::equity(1.0);
        let g = Grid::new(vec![0.4]).unwrap();
        let rep = check_steepness(&eq, &eq, SteepnessMode::Steep, &Grid::uniform(0.0, 1.0, 101), &g, &g).unwrap();
        assert!(rep.verdict);
    }

    #[test]
    fn payoff_table_parses_and_interpolates() {
        let csv = "x,0,1\n0,0,0\n1,0,0.5\n";
        let t = PayoffTable::from_reader(csv.as_bytes()).unwrap();
        assert_abs_diff_eq!(t.eval(0.5, 0.5), 0.125, epsilon = 1e-15);
        let fam = SecurityFamily::from_table("half_equity", t);
        assert_eq!(fam.bid_interval(), (0.0, 1.0));
        assert_eq!(fam.kinks(0.3), vec![0.0, 1.0]);
    }

    #[test]
    fn ragged_table_is_rejected() {
        let csv = "x,0,1\n0,0\n1,0,0.5\n";
        assert!(PayoffTable::from_reader(csv.as_bytes()).is_err());
    }
}
