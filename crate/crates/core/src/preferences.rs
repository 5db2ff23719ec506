//! Buyer risk preferences: concave increasing utilities with `u(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "UtilityRepr", into = "UtilityRepr")]
pub enum UtilityFunction {
    /// Risk neutral, `u(w) = w`.
    #[default]
    Linear,
    /// Constant absolute risk aversion, `u(w) = (1 - exp(-a w)) / a`.
    Cara { risk_aversion: f64 },
}

// Serde ignores extra keys on unit variants of tagged enums, so the wire
// form uses an empty struct variant.
#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum UtilityRepr {
    Linear {},
    Cara { risk_aversion: f64 },
}

impl From<UtilityRepr> for UtilityFunction {
    fn from(r: UtilityRepr) -> Self {
        match r {
            UtilityRepr::Linear {} => UtilityFunction::Linear,
            UtilityRepr::Cara { risk_aversion } => UtilityFunction::Cara { risk_aversion },
        }
    }
}

impl From<UtilityFunction> for UtilityRepr {
    fn from(u: UtilityFunction) -> Self {
        match u {
            UtilityFunction::Linear => UtilityRepr::Linear {},
            UtilityFunction::Cara { risk_aversion } => UtilityRepr::Cara { risk_aversion },
        }
    }
}

impl UtilityFunction {
    pub fn linear() -> Self {
        UtilityFunction::Linear
    }

    /// CARA utility; `a` must be positive (use [`UtilityFunction::linear`] for
    /// risk neutrality).
    pub fn cara(a: f64) -> Result<Self> {
        let u = UtilityFunction::Cara { risk_aversion: a };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            UtilityFunction::Linear => Ok(()),
            UtilityFunction::Cara { risk_aversion: a } if a > 0.0 && a.is_finite() => Ok(()),
            UtilityFunction::Cara { risk_aversion: a } => Err(Error::Parameter(format!(
                "CARA risk aversion must be positive, got {a}"
            ))),
        }
    }

    #[inline]
    pub fn evaluate(&self, w: f64) -> f64 {
        match *self {
            UtilityFunction::Linear => w,
            UtilityFunction::Cara { risk_aversion: a } => -(-a * w).exp_m1() / a,
        }
    }

    /// `u'(w)`; both built-in forms are smooth.
    #[inline]
    pub fn derivative(&self, w: f64) -> f64 {
        match *self {
            UtilityFunction::Linear => 1.0,
            UtilityFunction::Cara { risk_aversion: a } => (-a * w).exp(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            UtilityFunction::Linear => "linear".into(),
            UtilityFunction::Cara { risk_aversion } => format!("cara({risk_aversion})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        assert_eq!(UtilityFunction::linear().evaluate(0.3), 0.3);
        let u = UtilityFunction::cara(1.0).unwrap();
        assert_abs_diff_eq!(u.evaluate(1.0), 1.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(u.evaluate(1.0), 0.632121, epsilon = 1e-6);
        let tiny = UtilityFunction::cara(1e-6).unwrap();
        assert!((tiny.evaluate(0.5) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn nonpositive_risk_aversion_is_rejected() {
        assert!(matches!(UtilityFunction::cara(0.0), Err(Error::Parameter(_))));
        assert!(UtilityFunction::cara(-1.0).is_err());
        assert!(UtilityFunction::cara(f64::NAN).is_err());
    }

    #[test]
    fn normalized_at_zero() {
        for u in [
            UtilityFunction::linear(),
            UtilityFunction::cara(1e-8).unwrap(),
            UtilityFunction::cara(2.0).unwrap(),
            UtilityFunction::cara(50.0).unwrap(),
        ] {
            assert_eq!(u.evaluate(0.0), 0.0);
        }
    }

    proptest! {
        #[test]
        fn increasing_and_concave_on_random_grids(
            a in 1e-3f64..20.0,
            mut pts in prop::collection::vec(-2.0f64..2.0, 3..40),
        ) {
            pts.sort_by(f64::total_cmp);
            pts.dedup_by(|x, y| (*x - *y).abs() < 1e-6);
            prop_assume!(pts.len() >= 3);
            for u in [UtilityFunction::linear(), UtilityFunction::cara(a).unwrap()] {
                let v: Vec<f64> = pts.iter().map(|&w| u.evaluate(w)).collect();
                for i in 1..v.len() {
                    // saturation can round CARA differences to zero at large a·w
                    prop_assert!(v[i] - v[i - 1] >= 0.0);
                }
                // slopes of consecutive chords must not increase
                for i in 2..v.len() {
                    let s1 = (v[i - 1] - v[i - 2]) / (pts[i - 1] - pts[i - 2]);
                    let s2 = (v[i] - v[i - 1]) / (pts[i] - pts[i - 1]);
                    prop_assert!(s2 <= s1 + 1e-9 * s1.abs().max(1.0));
                }
            }
        }

        #[test]
        fn cara_approaches_linear(a in 1e-8f64..1e-4, w in -2.0f64..2.0) {
            let u = UtilityFunction::cara(a).unwrap();
            let bound = a * w * w / 2.0 * (a * w.abs()).exp();
            prop_assert!((u.evaluate(w) - w).abs() <= bound + 1e-15);
        }
    }
}
