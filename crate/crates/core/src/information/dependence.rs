//! Grid checkers for affiliation, PD-MLR and PD-FOSD.
//!
//! All three are checked on adjacent grid steps. For PD-FOSD that is the
//! definition. For PD-MLR the likelihood ratio between any two ordered signal
//! pairs is a product of ratios along a monotone lattice path, so adjacent
//! y- and z-steps suffice wherever the density is positive. For affiliation,
//! adjacent-cell log-supermodularity in each coordinate pair implies the
//! lattice inequality on the grid. Zero densities void that reduction and are
//! reported as precondition witnesses, separately from violations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::InformationModel;
use crate::error::Result;
use crate::grid::Grid;
use crate::securities::MAX_WITNESSES;

/// Tolerance on density products and survival differences.
pub const DEPENDENCE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceProperty {
    Affiliation,
    PdMlr,
    PdFosd,
}

impl DependenceProperty {
    pub fn as_str(self) -> &'static str {
        match self {
            DependenceProperty::Affiliation => "affiliation",
            DependenceProperty::PdMlr => "pd_mlr",
            DependenceProperty::PdFosd => "pd_fosd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// The defining inequality `lhs >= rhs` fails by more than the tolerance.
    Violation,
    /// A density required to be positive vanishes at `(x[0], y[0], z[0])`.
    Precondition,
}

/// Grid location of a failed comparison.
///
/// The two-element coordinates are (lower, upper) ends of the step that was
/// compared; for a precondition witness both entries coincide.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependenceWitness {
    pub kind: WitnessKind,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
    pub lhs: f64,
    pub rhs: f64,
}

impl DependenceWitness {
    /// Recomputes the comparison from the model; true when it still fails.
    pub fn recheck(&self, model: &dyn InformationModel, property: DependenceProperty) -> bool {
        let [x0, x1] = self.x;
        let [y0, y1] = self.y;
        let [z0, z1] = self.z;
        match self.kind {
            WitnessKind::Precondition => {
                let d = match property {
                    DependenceProperty::Affiliation => model.value_pdf(x0, y0, z0) * model.signal_density(y0, z0),
                    _ => model.value_pdf(x0, y0, z0),
                };
                d <= 0.0
            }
            WitnessKind::Violation => {
                let (lhs, rhs) = match property {
                    DependenceProperty::PdFosd => {
                        (1.0 - model.value_cdf(x0, y1, z1), 1.0 - model.value_cdf(x0, y0, z0))
                    }
                    DependenceProperty::PdMlr => {
                        let f = |x, y, z| model.value_pdf(x, y, z);
                        (f(x1, y1, z1) * f(x0, y0, z0), f(x0, y1, z1) * f(x1, y0, z0))
                    }
                    DependenceProperty::Affiliation => {
                        let j = |x, y, z| model.value_pdf(x, y, z) * model.signal_density(y, z);
                        if x0 == x1 {
                            (j(x0, y1, z1) * j(x0, y0, z0), j(x0, y1, z0) * j(x0, y0, z1))
                        } else if y0 == y1 {
                            (j(x1, y0, z1) * j(x0, y0, z0), j(x1, y0, z0) * j(x0, y0, z1))
                        } else {
                            (j(x1, y1, z0) * j(x0, y0, z0), j(x1, y0, z0) * j(x0, y1, z0))
                        }
                    }
                };
                lhs < rhs - DEPENDENCE_TOL
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub model: String,
    pub property: DependenceProperty,
    pub verdict: bool,
    /// First violations found (capped); empty iff `verdict`.
    pub witnesses: Vec<DependenceWitness>,
    pub total_violations: usize,
    /// Points where a required positive density vanishes (capped).
    pub precondition_witnesses: Vec<DependenceWitness>,
    pub total_precondition: usize,
    pub x_grid_len: usize,
    pub y_grid_len: usize,
    pub z_grid_len: usize,
}

/// Default checker grids: `n` uniform points per axis, with the model's value
/// landmarks added to the value axis.
pub fn default_dependence_grids(model: &dyn InformationModel, n: usize) -> (Grid, Grid, Grid) {
    let (xlo, xhi) = model.value_support();
    let (slo, shi) = model.signal_support();
    let xg = Grid::uniform(xlo, xhi, n).with_points(model.value_landmarks());
    let sg = Grid::uniform(slo, shi, n);
    (xg, sg.clone(), sg)
}

#[derive(Default)]
struct Found {
    violations: Vec<DependenceWitness>,
    n_violations: usize,
    preconditions: Vec<DependenceWitness>,
    n_preconditions: usize,
}

impl Found {
    fn violation(&mut self, w: impl FnOnce() -> DependenceWitness) {
        self.n_violations += 1;
        if self.violations.len() < MAX_WITNESSES {
            self.violations.push(w());
        }
    }

    fn precondition(&mut self, x: f64, y: f64, z: f64, d: f64) {
        self.n_preconditions += 1;
        if self.preconditions.len() < MAX_WITNESSES {
            self.preconditions.push(DependenceWitness {
                kind: WitnessKind::Precondition,
                x: [x; 2],
                y: [y; 2],
                z: [z; 2],
                lhs: d,
                rhs: 0.0,
            });
        }
    }

    fn merge(mut self, other: Found) -> Found {
        self.n_violations += other.n_violations;
        self.n_preconditions += other.n_preconditions;
        let room = MAX_WITNESSES.saturating_sub(self.violations.len());
        self.violations.extend(other.violations.into_iter().take(room));
        let room = MAX_WITNESSES.saturating_sub(self.preconditions.len());
        self.preconditions.extend(other.preconditions.into_iter().take(room));
        self
    }
}

/// Row-major `(y, z)` slice of a function at fixed `x`.
struct Slice {
    nz: usize,
    v: Vec<f64>,
}

impl Slice {
    fn new(ys: &[f64], zs: &[f64], f: impl Fn(f64, f64) -> f64) -> Self {
        let mut v = Vec::with_capacity(ys.len() * zs.len());
        for &y in ys {
            for &z in zs {
                v.push(f(y, z));
            }
        }
        Slice { nz: zs.len(), v }
    }

    #[inline]
    fn at(&self, iy: usize, iz: usize) -> f64 {
        self.v[iy * self.nz + iz]
    }
}

pub fn check_dependence(
    model: &dyn InformationModel,
    property: DependenceProperty,
    x_grid: &Grid,
    y_grid: &Grid,
    z_grid: &Grid,
) -> Result<DependenceReport> {
    let (xlo, xhi) = model.value_support();
    let (slo, shi) = model.signal_support();
    x_grid.check_within("value grid", xlo, xhi)?;
    y_grid.check_within("y grid", slo, shi)?;
    z_grid.check_within("z grid", slo, shi)?;

    let (xs, ys, zs) = (x_grid.points(), y_grid.points(), z_grid.points());
    let found = match property {
        DependenceProperty::PdFosd => check_fosd(model, xs, ys, zs),
        DependenceProperty::PdMlr => check_pairs(model, xs, ys, zs, false),
        DependenceProperty::Affiliation => check_pairs(model, xs, ys, zs, true),
    };
    Ok(DependenceReport {
        model: model.name(),
        property,
        verdict: found.n_violations == 0,
        witnesses: found.violations,
        total_violations: found.n_violations,
        precondition_witnesses: found.preconditions,
        total_precondition: found.n_preconditions,
        x_grid_len: xs.len(),
        y_grid_len: ys.len(),
        z_grid_len: zs.len(),
    })
}

fn check_fosd(model: &dyn InformationModel, xs: &[f64], ys: &[f64], zs: &[f64]) -> Found {
    xs.par_iter()
        .map(|&x| {
            let mut found = Found::default();
            let s = Slice::new(ys, zs, |y, z| 1.0 - model.value_cdf(x, y, z));
            for iy in 0..ys.len() {
                for iz in 0..zs.len() {
                    let here = s.at(iy, iz);
                    if iy + 1 < ys.len() && s.at(iy + 1, iz) < here - DEPENDENCE_TOL {
                        found.violation(|| DependenceWitness {
                            kind: WitnessKind::Violation,
                            x: [x; 2],
                            y: [ys[iy], ys[iy + 1]],
                            z: [zs[iz]; 2],
                            lhs: s.at(iy + 1, iz),
                            rhs: here,
                        });
                    }
                    if iz + 1 < zs.len() && s.at(iy, iz + 1) < here - DEPENDENCE_TOL {
                        found.violation(|| DependenceWitness {
                            kind: WitnessKind::Violation,
                            x: [x; 2],
                            y: [ys[iy]; 2],
                            z: [zs[iz], zs[iz + 1]],
                            lhs: s.at(iy, iz + 1),
                            rhs: here,
                        });
                    }
                }
            }
            found
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Found::default(), Found::merge)
}

/// Adjacent-cell cross-product checks on the conditional density (MLR) or on
/// the joint density of `(X₁, Y₁, Z₁)` (affiliation).
fn check_pairs(model: &dyn InformationModel, xs: &[f64], ys: &[f64], zs: &[f64], joint: bool) -> Found {
    let density = |x: f64, y: f64, z: f64| {
        let p = model.value_pdf(x, y, z);
        if joint {
            p * model.signal_density(y, z)
        } else {
            p
        }
    };
    let nx = xs.len();
    (0..nx)
        .into_par_iter()
        .map(|i| {
            let mut found = Found::default();
            let x0 = xs[i];
            let lo = Slice::new(ys, zs, |y, z| density(x0, y, z));
            for (iy, &y) in ys.iter().enumerate() {
                for (iz, &z) in zs.iter().enumerate() {
                    let d = lo.at(iy, iz);
                    if d <= 0.0 {
                        found.precondition(x0, y, z, d);
                    }
                }
            }
            if joint {
                // (y, z) pair within the slice
                for iy in 0..ys.len().saturating_sub(1) {
                    for iz in 0..zs.len().saturating_sub(1) {
                        let lhs = lo.at(iy + 1, iz + 1) * lo.at(iy, iz);
                        let rhs = lo.at(iy + 1, iz) * lo.at(iy, iz + 1);
                        if lhs < rhs - DEPENDENCE_TOL {
                            found.violation(|| DependenceWitness {
                                kind: WitnessKind::Violation,
                                x: [x0; 2],
                                y: [ys[iy], ys[iy + 1]],
                                z: [zs[iz], zs[iz + 1]],
                                lhs,
                                rhs,
                            });
                        }
                    }
                }
            }
            if i + 1 == nx {
                return found;
            }
            let x1 = xs[i + 1];
            let hi = Slice::new(ys, zs, |y, z| density(x1, y, z));
            // (x, y) and (x, z) pairs: f(x1|θ+) f(x0|θ) >= f(x0|θ+) f(x1|θ)
            for iy in 0..ys.len() {
                for iz in 0..zs.len() {
                    if iy + 1 < ys.len() {
                        let lhs = hi.at(iy + 1, iz) * lo.at(iy, iz);
                        let rhs = lo.at(iy + 1, iz) * hi.at(iy, iz);
                        if lhs < rhs - DEPENDENCE_TOL {
                            found.violation(|| DependenceWitness {
                                kind: WitnessKind::Violation,
                                x: [x0, x1],
                                y: [ys[iy], ys[iy + 1]],
                                z: [zs[iz]; 2],
                                lhs,
                                rhs,
                            });
                        }
                    }
                    if iz + 1 < zs.len() {
                        let lhs = hi.at(iy, iz + 1) * lo.at(iy, iz);
                        let rhs = lo.at(iy, iz + 1) * hi.at(iy, iz);
                        if lhs < rhs - DEPENDENCE_TOL {
                            found.violation(|| DependenceWitness {
                                kind: WitnessKind::Violation,
                                x: [x0, x1],
                                y: [ys[iy]; 2],
                                z: [zs[iz], zs[iz + 1]],
                                lhs,
                                rhs,
                            });
                        }
                    }
                }
            }
            found
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Found::default(), Found::merge)
}
