use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonempty, strictly increasing set of finite evaluation points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Input("grid is empty".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::Input(format!("grid contains non-finite point {p}")));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Input(format!(
                "grid is not strictly increasing: {} followed by {}",
                w[0], w[1]
            )));
        }
        Ok(Self(points))
    }

    /// `n` equally spaced points covering `[lo, hi]` (both ends included).
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Self {
        assert!(hi > lo, "uniform grid needs lo < hi");
        let n = n.max(2);
        let step = (hi - lo) / (n - 1) as f64;
        let mut pts: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        pts[n - 1] = hi;
        Self(pts)
    }

    /// Adds `extra` points lying inside `[first, last]`, dropping near-duplicates.
    pub fn with_points(&self, extra: impl IntoIterator<Item = f64>) -> Self {
        let (lo, hi) = (self.first(), self.last());
        let mut pts = self.0.clone();
        pts.extend(extra.into_iter().filter(|p| p.is_finite() && *p >= lo && *p <= hi));
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + a.abs()));
        Self(pts)
    }

    /// Fails unless every point lies in `[lo, hi]`.
    pub fn check_within(&self, what: &'static str, lo: f64, hi: f64) -> Result<()> {
        crate::error::check_in(what, self.first(), lo, hi)?;
        crate::error::check_in(what, self.last(), lo, hi)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Grid::new(v)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

impl std::ops::Deref for Grid {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
