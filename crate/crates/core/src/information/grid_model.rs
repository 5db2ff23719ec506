use std::collections::BTreeMap;
use std::path::Path;

use rand::RngCore;
use serde::Deserialize;

use super::{iid_uniform_signal_density, sample_iid_uniform, InformationModel};
use crate::error::{Error, Result};
use crate::securities::locate;

/// Conditional value density tabulated on a `(y, z, x)` lattice.
///
/// Each `(y, z)` slice is interpolated piecewise-linearly in `x` and
/// renormalized; off-lattice signals blend the four neighbouring slices
/// bilinearly, which keeps every blend normalized and its cdf in closed form.
/// Signals are i.i.d. uniform over the tabulated signal range.
#[derive(Clone, Debug, PartialEq)]
pub struct GridModel {
    n_buyers: usize,
    ys: Vec<f64>,
    zs: Vec<f64>,
    xs: Vec<f64>,
    /// `pdf[iy][iz][ix]`, normalized per slice.
    pdf: Vec<Vec<Vec<f64>>>,
    /// Cumulative integral at each x node, per slice.
    cdf: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
struct Row {
    y: f64,
    z: f64,
    x: f64,
    pdf: f64,
}

fn key(v: f64) -> u64 {
    // Total order on finite floats, used to collect unique coordinates.
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

impl GridModel {
    /// Builds the model from `(y, z, x, pdf)` samples covering a full lattice.
    pub fn from_samples(samples: &[(f64, f64, f64, f64)], n_buyers: usize) -> Result<Self> {
        if n_buyers < 2 {
            return Err(Error::Validation(format!("need at least 2 buyers, got {n_buyers}")));
        }
        let mut map: BTreeMap<(u64, u64, u64), f64> = BTreeMap::new();
        let mut ys = BTreeMap::new();
        let mut zs = BTreeMap::new();
        let mut xs = BTreeMap::new();
        for &(y, z, x, p) in samples {
            if ![y, z, x, p].iter().all(|v| v.is_finite()) {
                return Err(Error::Validation("grid model contains non-finite values".into()));
            }
            if p < 0.0 {
                return Err(Error::Validation(format!(
                    "negative density {p} at (y={y}, z={z}, x={x})"
                )));
            }
            ys.insert(key(y), y);
            zs.insert(key(z), z);
            xs.insert(key(x), x);
            if map.insert((key(y), key(z), key(x)), p).is_some() {
                return Err(Error::Validation(format!("duplicate row (y={y}, z={z}, x={x})")));
            }
        }
        let ys: Vec<f64> = ys.into_values().collect();
        let zs: Vec<f64> = zs.into_values().collect();
        let xs: Vec<f64> = xs.into_values().collect();
        if ys.len() < 2 || zs.len() < 2 || xs.len() < 2 {
            return Err(Error::Validation(
                "grid model needs at least two values of each of y, z, x".into(),
            ));
        }
        if map.len() != ys.len() * zs.len() * xs.len() {
            return Err(Error::Validation(format!(
                "grid model has {} rows but the lattice needs {}",
                map.len(),
                ys.len() * zs.len() * xs.len()
            )));
        }
        if ys[0] != zs[0] || ys[ys.len() - 1] != zs[zs.len() - 1] {
            return Err(Error::Validation("y and z must span the same signal interval".into()));
        }

        let mut pdf = vec![vec![Vec::with_capacity(xs.len()); zs.len()]; ys.len()];
        let mut cdf = vec![vec![Vec::with_capacity(xs.len()); zs.len()]; ys.len()];
        for (iy, &y) in ys.iter().enumerate() {
            for (iz, &z) in zs.iter().enumerate() {
                let slice: Vec<f64> = xs.iter().map(|&x| map[&(key(y), key(z), key(x))]).collect();
                let mut cum = vec![0.0; xs.len()];
                for k in 1..xs.len() {
                    cum[k] = cum[k - 1] + 0.5 * (slice[k] + slice[k - 1]) * (xs[k] - xs[k - 1]);
                }
                let mass = cum[xs.len() - 1];
                if (mass - 1.0).abs() > 1e-6 {
                    return Err(Error::Validation(format!(
                        "density slice at (y={y}, z={z}) integrates to {mass}"
                    )));
                }
                pdf[iy][iz] = slice.iter().map(|p| p / mass).collect();
                cdf[iy][iz] = cum.iter().map(|c| c / mass).collect();
            }
        }
        Ok(Self {
            n_buyers,
            ys,
            zs,
            xs,
            pdf,
            cdf,
        })
    }

    pub fn from_reader<R: std::io::Read>(reader: R, n_buyers: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let rows = rdr
            .deserialize::<Row>()
            .map(|r| r.map(|r| (r.y, r.z, r.x, r.pdf)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::from_samples(&rows, n_buyers)
    }

    pub fn from_path(path: impl AsRef<Path>, n_buyers: usize) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?, n_buyers)
    }

    fn blend(&self, y: f64, z: f64, f: impl Fn(usize, usize) -> f64) -> f64 {
        let (iy, ty) = locate(&self.ys, y);
        let (iz, tz) = locate(&self.zs, z);
        (1.0 - ty) * ((1.0 - tz) * f(iy, iz) + tz * f(iy, iz + 1))
            + ty * ((1.0 - tz) * f(iy + 1, iz) + tz * f(iy + 1, iz + 1))
    }

    fn slice_pdf(&self, iy: usize, iz: usize, k: usize, t: f64) -> f64 {
        let p = &self.pdf[iy][iz];
        p[k] * (1.0 - t) + p[k + 1] * t
    }

    fn slice_cdf(&self, iy: usize, iz: usize, k: usize, t: f64) -> f64 {
        let p = &self.pdf[iy][iz];
        let dx = self.xs[k + 1] - self.xs[k];
        self.cdf[iy][iz][k] + dx * (p[k] * t + 0.5 * (p[k + 1] - p[k]) * t * t)
    }
}

impl InformationModel for GridModel {
    fn name(&self) -> String {
        format!(
            "grid({}x{}x{}, n={})",
            self.ys.len(),
            self.zs.len(),
            self.xs.len(),
            self.n_buyers
        )
    }

    fn n_buyers(&self) -> usize {
        self.n_buyers
    }

    fn value_support(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn signal_support(&self) -> (f64, f64) {
        (self.ys[0], self.ys[self.ys.len() - 1])
    }

    fn value_pdf(&self, x: f64, y: f64, z: f64) -> f64 {
        let (lo, hi) = self.value_support();
        if x < lo || x > hi {
            return 0.0;
        }
        let (k, t) = locate(&self.xs, x);
        self.blend(y, z, |iy, iz| self.slice_pdf(iy, iz, k, t))
    }

    fn value_cdf(&self, x: f64, y: f64, z: f64) -> f64 {
        let (lo, hi) = self.value_support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let (k, t) = locate(&self.xs, x);
        self.blend(y, z, |iy, iz| self.slice_cdf(iy, iz, k, t))
    }

    fn signal_density(&self, y: f64, z: f64) -> f64 {
        let (lo, hi) = self.signal_support();
        iid_uniform_signal_density(self.n_buyers, lo, hi, y, z)
    }

    fn value_knots(&self) -> Vec<f64> {
        self.xs[1..self.xs.len() - 1].to_vec()
    }

    fn signal_knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.ys[1..self.ys.len() - 1].to_vec();
        k.extend_from_slice(&self.zs[1..self.zs.len() - 1]);
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    fn sample_signals(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        let (lo, hi) = self.signal_support();
        sample_iid_uniform(rng, self.n_buyers, lo, hi)
    }
}
