//! Information environments seen from buyer 1: the conditional law of the
//! value `X₁` given the own signal `Y₁ = y` and the highest rival signal
//! `Z₁ = z`, and the joint density of `(Y₁, Z₁)`.

mod dependence;
mod grid_model;

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{check_in, Error, Result};
use crate::quadrature::{self, Estimate, Options};

pub use dependence::{
    check_dependence, default_dependence_grids, DependenceProperty, DependenceReport, DependenceWitness, WitnessKind,
    DEPENDENCE_TOL,
};
pub use grid_model::GridModel;

/// Conditional value distribution and signal density of a symmetric model.
pub trait InformationModel: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn n_buyers(&self) -> usize;

    fn value_support(&self) -> (f64, f64);

    fn signal_support(&self) -> (f64, f64);

    /// Density of `X₁` at `x` given `Y₁ = y`, `Z₁ = z`.
    fn value_pdf(&self, x: f64, y: f64, z: f64) -> f64;

    fn value_cdf(&self, x: f64, y: f64, z: f64) -> f64;

    /// Joint density of `(Y₁, Z₁)` at `(y, z)`.
    fn signal_density(&self, y: f64, z: f64) -> f64;

    /// Interior value points where the conditional pdf may be non-smooth.
    fn value_knots(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Signal abscissae where the model has kinks in either signal.
    fn signal_knots(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Notable value points that default checker grids always include.
    fn value_landmarks(&self) -> Vec<f64> {
        self.value_knots()
    }

    /// Inverse of the conditional cdf. The default bisects the cdf.
    fn value_quantile(&self, p: f64, y: f64, z: f64) -> f64 {
        let (mut lo, mut hi) = self.value_support();
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.value_cdf(mid, y, z) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Draws `(Y₁, Z₁)` from the joint signal law.
    fn sample_signals(&self, rng: &mut dyn RngCore) -> (f64, f64);
}

/// Draws `(Y₁, Z₁)` when the `N` signals are i.i.d. uniform on `[lo, hi]`.
pub(crate) fn sample_iid_uniform(rng: &mut dyn RngCore, n: usize, lo: f64, hi: f64) -> (f64, f64) {
    let y = rng.random::<f64>();
    let z = (1..n).map(|_| rng.random::<f64>()).fold(0.0, f64::max);
    (lo + (hi - lo) * y, lo + (hi - lo) * z)
}

/// Density of `(Y₁, Z₁)` for `N` i.i.d. uniform signals on `[lo, hi]`:
/// `f(y) (N-1) f(z) F(z)^{N-2}`.
pub(crate) fn iid_uniform_signal_density(n: usize, lo: f64, hi: f64, y: f64, z: f64) -> f64 {
    if y < lo || y > hi || z < lo || z > hi {
        return 0.0;
    }
    let w = hi - lo;
    let fz = (z - lo) / w;
    (n - 1) as f64 * fz.powi(n as i32 - 2) / (w * w)
}

/// Two i.i.d. uniform signals; the value depends on the own signal only, with
/// density `1 - y + 6xy` on `[0, 1/3]` and `1` on `(1/3, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Example1;

impl InformationModel for Example1 {
    fn name(&self) -> String {
        "example1".into()
    }

    fn n_buyers(&self) -> usize {
        2
    }

    fn value_support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn signal_support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn value_pdf(&self, x: f64, y: f64, _z: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            0.0
        } else if x <= 1.0 / 3.0 {
            1.0 - y + 6.0 * x * y
        } else {
            1.0
        }
    }

    fn value_cdf(&self, x: f64, y: f64, _z: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else if x <= 1.0 / 3.0 {
            x - y * (x - 3.0 * x * x)
        } else {
            x
        }
    }

    fn signal_density(&self, y: f64, z: f64) -> f64 {
        iid_uniform_signal_density(2, 0.0, 1.0, y, z)
    }

    fn value_knots(&self) -> Vec<f64> {
        vec![1.0 / 3.0]
    }

    // The likelihood ratio across signals exceeds one exactly on (1/6, 1/3].
    fn value_landmarks(&self) -> Vec<f64> {
        vec![1.0 / 6.0, 1.0 / 3.0]
    }

    fn value_quantile(&self, p: f64, y: f64, _z: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p > 1.0 / 3.0 {
            return p.min(1.0);
        }
        // 3y x² + (1 - y) x - p = 0, stable positive root
        let b = 1.0 - y;
        2.0 * p / (b + (b * b + 12.0 * y * p).sqrt())
    }

    fn sample_signals(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        sample_iid_uniform(rng, 2, 0.0, 1.0)
    }
}

/// `N` i.i.d. uniform signals on `[0, 1]`; value density
/// `1 + κ·((y + z)/2)·(2x - 1)` on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearTilt {
    n_buyers: usize,
    kappa: f64,
}

impl LinearTilt {
    pub fn new(n_buyers: usize, kappa: f64) -> Result<Self> {
        if n_buyers < 2 {
            return Err(Error::Parameter(format!("need at least 2 buyers, got {n_buyers}")));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::Parameter(format!(
                "tilt strength must lie in (0, 1], got {kappa}"
            )));
        }
        Ok(Self { n_buyers, kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    #[inline]
    fn slope(&self, y: f64, z: f64) -> f64 {
        self.kappa * 0.5 * (y + z)
    }
}

impl InformationModel for LinearTilt {
    fn name(&self) -> String {
        format!("linear_tilt(n={}, kappa={})", self.n_buyers, self.kappa)
    }

    fn n_buyers(&self) -> usize {
        self.n_buyers
    }

    fn value_support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn signal_support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn value_pdf(&self, x: f64, y: f64, z: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        1.0 + self.slope(y, z) * (2.0 * x - 1.0)
    }

    fn value_cdf(&self, x: f64, y: f64, z: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        x + self.slope(y, z) * (x * x - x)
    }

    fn signal_density(&self, y: f64, z: f64) -> f64 {
        iid_uniform_signal_density(self.n_buyers, 0.0, 1.0, y, z)
    }

    fn value_quantile(&self, p: f64, y: f64, z: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let c = self.slope(y, z);
        // c x² + (1 - c) x - p = 0
        let b = 1.0 - c;
        let disc = b * b + 4.0 * c * p;
        if p == 0.0 {
            return 0.0;
        }
        (2.0 * p / (b + disc.sqrt())).min(1.0)
    }

    fn sample_signals(&self, rng: &mut dyn RngCore) -> (f64, f64) {
        sample_iid_uniform(rng, self.n_buyers, 0.0, 1.0)
    }
}

/// Model descriptor as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Example1 {},
    LinearTilt {
        #[serde(default = "default_buyers")]
        n_buyers: usize,
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
    /// Tabulated conditional density (CSV with columns `y,z,x,pdf`).
    Grid {
        path: PathBuf,
        #[serde(default = "default_buyers")]
        n_buyers: usize,
    },
}

fn default_buyers() -> usize {
    2
}

fn default_kappa() -> f64 {
    1.0
}

/// Builds and validates a model. Relative grid paths resolve against `base_dir`.
pub fn make_model(spec: &ModelSpec, base_dir: &Path) -> Result<Arc<dyn InformationModel>> {
    let model: Arc<dyn InformationModel> = match spec {
        ModelSpec::Example1 {} => Arc::new(Example1),
        ModelSpec::LinearTilt { n_buyers, kappa } => Arc::new(LinearTilt::new(*n_buyers, *kappa)?),
        ModelSpec::Grid { path, n_buyers } => Arc::new(GridModel::from_path(base_dir.join(path), *n_buyers)?),
    };
    validate_model(model.as_ref(), 7)?;
    Ok(model)
}

/// Checks nonnegativity and normalization of the conditional density, cdf
/// endpoint values and cdf/pdf agreement, and normalization of the signal
/// density, on an `n × n` signal grid.
pub fn validate_model(model: &dyn InformationModel, n: usize) -> Result<()> {
    let (xlo, xhi) = model.value_support();
    let (slo, shi) = model.signal_support();
    let knots = model.value_knots();
    let opts = Options::abs(1e-11);
    let sg = crate::grid::Grid::uniform(slo, shi, n.max(2));
    for &y in sg.iter() {
        for &z in sg.iter() {
            let mass = quadrature::integrate(|x| model.value_pdf(x, y, z), xlo, xhi, &knots, opts)?;
            if (mass.value - 1.0).abs() > 1e-8 {
                return Err(Error::Validation(format!(
                    "conditional density at (y={y}, z={z}) integrates to {}",
                    mass.value
                )));
            }
            for &x in crate::grid::Grid::uniform(xlo, xhi, 33).iter() {
                let p = model.value_pdf(x, y, z);
                if p < 0.0 || !p.is_finite() {
                    return Err(Error::Validation(format!("negative density {p} at ({x}, {y}, {z})")));
                }
                let partial = quadrature::integrate(|t| model.value_pdf(t, y, z), xlo, x, &knots, opts)?;
                if (partial.value - model.value_cdf(x, y, z)).abs() > 1e-8 {
                    return Err(Error::Validation(format!(
                        "cdf at ({x}, {y}, {z}) is {} but the density integrates to {}",
                        model.value_cdf(x, y, z),
                        partial.value
                    )));
                }
            }
            if model.value_cdf(xlo, y, z).abs() > 1e-12 || (model.value_cdf(xhi, y, z) - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!("cdf endpoints wrong at (y={y}, z={z})")));
            }
        }
    }
    let total = quadrature::integrate(
        |y| {
            quadrature::integrate(|z| model.signal_density(y, z), slo, shi, &[], Options::abs(1e-12))
                .map(|e| e.value)
                .unwrap_or(f64::NAN)
        },
        slo,
        shi,
        &[],
        Options::abs(1e-11),
    )?;
    // Negated so that NaN fails too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !((total.value - 1.0).abs() <= 1e-8) {
        return Err(Error::Validation(format!(
            "signal density integrates to {}",
            total.value
        )));
    }
    Ok(())
}

/// Absolute quadrature target for conditional expectations.
pub const EXPECTATION_TOL: f64 = 1e-10;

/// `E[h(X₁) | Y₁ = y, Z₁ = z]` with an error estimate. `knots` lists extra
/// points where `h` is non-smooth.
pub fn conditional_expectation(
    model: &dyn InformationModel,
    h: impl Fn(f64) -> f64,
    knots: &[f64],
    y: f64,
    z: f64,
) -> Result<Estimate> {
    conditional_expectation_tol(model, h, knots, y, z, EXPECTATION_TOL)
}

pub fn conditional_expectation_tol(
    model: &dyn InformationModel,
    h: impl Fn(f64) -> f64,
    knots: &[f64],
    y: f64,
    z: f64,
    tol: f64,
) -> Result<Estimate> {
    let (slo, shi) = model.signal_support();
    check_in("signal y", y, slo, shi)?;
    check_in("signal z", z, slo, shi)?;
    let (xlo, xhi) = model.value_support();
    let mut cuts = model.value_knots();
    cuts.extend_from_slice(knots);
    Ok(quadrature::integrate(
        |x| h(x) * model.value_pdf(x, y, z),
        xlo,
        xhi,
        &cuts,
        Options::abs(tol),
    )?)
}

/// Inverse-cdf draw of `X₁` given `(y, z)`; deterministic for a seeded `rng`.
pub fn sample_value<R: Rng + ?Sized>(model: &dyn InformationModel, y: f64, z: f64, rng: &mut R) -> f64 {
    let (lo, hi) = model.value_support();
    model.value_quantile(rng.random::<f64>(), y, z).clamp(lo, hi)
}
