//! Semivariogram estimation and modelling.
//!
//! Models are a nugget plus up to two nested structures drawn from the
//! spherical, exponential and sine hole-effect families. Each family is a
//! valid (conditionally negative semidefinite) variogram in the plane, and
//! non-negative sums of valid variograms stay valid.

mod cnsd;
mod empirical;
mod fit;
mod io;
mod optimize;

pub use cnsd::{check_cnsd, check_cnsd_with, CnsdReport, CNSD_TOLERANCE};
pub use empirical::{default_max_lag_km, empirical_semivariogram, max_pairwise_distance_km, EmpiricalVariogram,
                    DEFAULT_BIN_WIDTH_KM};
pub use fit::{fit_all, fit_model, wls_objective, FittedModel, MIN_BINS};
pub use io::{read_models_csv, write_empirical_csv, write_models_csv, EMPIRICAL_HEADER, MODEL_HEADER};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructureKind {
    Spherical,
    Exponential,
    HoleEffectSine,
}

impl StructureKind {
    pub const ALL: [StructureKind; 3] = [
        StructureKind::Spherical,
        StructureKind::Exponential,
        StructureKind::HoleEffectSine,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StructureKind::Spherical => "spherical",
            StructureKind::Exponential => "exponential",
            StructureKind::HoleEffectSine => "hole_effect",
        }
    }

    /// Unit-sill variogram value at scaled lag `x = h / range`.
    fn unit_gamma(&self, x: f64) -> f64 {
        match self {
            StructureKind::Spherical => {
                if x >= 1.0 {
                    1.0
                } else {
                    1.5 * x - 0.5 * x * x * x
                }
            }
            StructureKind::Exponential => -(-x).exp_m1(),
            StructureKind::HoleEffectSine => {
                if x < 1e-2 {
                    // 1 - sin(x)/x = x²/6 - x⁴/120 + x⁶/5040 + O(x⁸)
                    let x2 = x * x;
                    x2 / 6.0 - x2 * x2 / 120.0 + x2 * x2 * x2 / 5040.0
                } else {
                    1.0 - x.sin() / x
                }
            }
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StructureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spherical" | "sph" => Ok(StructureKind::Spherical),
            "exponential" | "exp" => Ok(StructureKind::Exponential),
            "hole_effect" | "hole-effect" | "holeeffect" | "hole_effect_sine" | "sine" => {
                Ok(StructureKind::HoleEffectSine)
            }
            other => Err(format!("unknown variogram structure `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    pub kind: StructureKind,
    /// Sill contribution.
    pub sill: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariogramModel {
    pub nugget: f64,
    pub structures: Vec<Structure>,
}

impl VariogramModel {
    pub fn new(nugget: f64, structures: Vec<Structure>) -> Result<Self> {
        if !(nugget >= 0.0) || !nugget.is_finite() {
            return Err(Error::Negative {
                what: "nugget",
                value: nugget,
            });
        }
        for s in &structures {
            if !(s.sill > 0.0 && s.sill.is_finite()) {
                return Err(Error::Negative {
                    what: "sill contribution",
                    value: s.sill,
                });
            }
            if !(s.range > 0.0 && s.range.is_finite()) {
                return Err(Error::Negative {
                    what: "range",
                    value: s.range,
                });
            }
        }
        Ok(Self { nugget, structures })
    }

    pub fn pure_nugget(nugget: f64) -> Self {
        Self {
            nugget,
            structures: Vec::new(),
        }
    }

    pub fn is_pure_nugget(&self) -> bool {
        self.structures.is_empty()
    }

    /// γ(h) for a lag magnitude; γ(0) = 0 and the limit from above is the nugget.
    pub fn gamma(&self, h: f64) -> f64 {
        let h = h.abs();
        if h == 0.0 {
            return 0.0;
        }
        self.gamma_continuous(h)
    }

    /// The model without its jump at zero: `η + Σ structures(h)`, equal to the
    /// right limit `η` at `h = 0`.
    pub fn gamma_continuous(&self, h: f64) -> f64 {
        let h = h.abs();
        self.nugget
            + self
                .structures
                .iter()
                .map(|s| s.sill * s.kind.unit_gamma(h / s.range))
                .sum::<f64>()
    }

    pub fn sill_total(&self) -> f64 {
        self.nugget + self.structures.iter().map(|s| s.sill).sum::<f64>()
    }

    pub fn family(&self) -> ModelFamily {
        ModelFamily::new(self.structures.iter().map(|s| s.kind).collect())
    }

    pub fn n_params(&self) -> usize {
        1 + 2 * self.structures.len()
    }
}

pub fn eval_model(m: &VariogramModel, h: f64) -> Result<f64> {
    if h < 0.0 {
        return Err(Error::NegativeLag(h));
    }
    Ok(m.gamma(h))
}

/// `C(h) = sill_total - γ(h)`.
pub fn cov_from_variogram(m: &VariogramModel, h: f64) -> f64 {
    m.sill_total() - m.gamma(h)
}

/// A nugget plus an ordered list of structure kinds (at most two).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelFamily {
    pub kinds: Vec<StructureKind>,
}

impl ModelFamily {
    pub fn new(kinds: Vec<StructureKind>) -> Self {
        Self { kinds }
    }

    pub fn nugget() -> Self {
        Self::new(Vec::new())
    }

    pub fn n_params(&self) -> usize {
        1 + 2 * self.kinds.len()
    }

    /// Pure nugget, each kind alone, and (optionally) every unordered pair.
    pub fn candidates(kinds: &[StructureKind], nested: bool) -> Vec<ModelFamily> {
        let mut out = vec![ModelFamily::nugget()];
        out.extend(kinds.iter().map(|k| ModelFamily::new(vec![*k])));
        if nested {
            for (i, a) in kinds.iter().enumerate() {
                for b in &kinds[i..] {
                    out.push(ModelFamily::new(vec![*a, *b]));
                }
            }
        }
        out
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kinds.is_empty() {
            return f.write_str("nugget");
        }
        let names: Vec<&str> = self.kinds.iter().map(|k| k.as_str()).collect();
        f.write_str(&names.join("+"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn single(kind: StructureKind, sill: f64, range: f64, nugget: f64) -> VariogramModel {
        VariogramModel::new(nugget, vec![Structure { kind, sill, range }]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let m = single(StructureKind::Spherical, 2.0, 100.0, 0.3);
        assert_eq!(eval_model(&m, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(eval_model(&m, 100.0).unwrap(), 2.3, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_model(&m, 250.0).unwrap(), 2.3, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_model(&m, 50.0).unwrap(), 0.3 + 2.0 * (0.75 - 0.0625), epsilon = 1e-15);

        let e = single(StructureKind::Exponential, 1.0, 50.0, 0.2);
        assert_abs_diff_eq!(eval_model(&e, 50.0).unwrap(), 0.2 + 0.63212, epsilon = 1e-5);

        let h = single(StructureKind::HoleEffectSine, 1.0, 10.0, 0.0);
        assert_abs_diff_eq!(eval_model(&h, 10.0 * std::f64::consts::PI).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eval_model(&h, 1e-6).unwrap(), 0.0, epsilon = 1e-12);
        // Series and closed form agree near the switch point.
        let x: f64 = 1e-2;
        assert_abs_diff_eq!(StructureKind::HoleEffectSine.unit_gamma(x * (1.0 - 1e-12)), 1.0 - x.sin() / x, epsilon = 1e-15);

        assert!(matches!(eval_model(&m, -1.0), Err(Error::NegativeLag(_))));
        assert_eq!(VariogramModel::pure_nugget(0.4).gamma(1e-9), 0.4);
    }

    #[test]
    fn nugget_limit() {
        let m = single(StructureKind::Exponential, 1.0, 30.0, 0.25);
        assert_eq!(m.gamma(0.0), 0.0);
        assert_abs_diff_eq!(m.gamma(1e-12), 0.25, epsilon = 1e-12);
        assert_eq!(m.gamma_continuous(0.0), 0.25);
    }

    #[test]
    fn covariance_examples() {
        let s = single(StructureKind::Spherical, 2.0, 100.0, 0.0);
        assert_eq!(cov_from_variogram(&s, 0.0), 2.0);
        assert_eq!(cov_from_variogram(&s, 100.0), 0.0);
        assert_eq!(cov_from_variogram(&s, 400.0), 0.0);
        let e = single(StructureKind::Exponential, 1.0, 50.0, 0.0);
        assert_abs_diff_eq!(cov_from_variogram(&e, 50.0), 0.36788, epsilon = 1e-5);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(VariogramModel::new(-0.1, vec![]).is_err());
        let bad = Structure {
            kind: StructureKind::Spherical,
            sill: 0.0,
            range: 1.0,
        };
        assert!(VariogramModel::new(0.0, vec![bad]).is_err());
    }

    #[test]
    fn candidate_families() {
        let all = ModelFamily::candidates(&StructureKind::ALL, true);
        assert_eq!(all.len(), 1 + 3 + 6);
        assert_eq!(all[0].to_string(), "nugget");
        assert!(all.iter().any(|f| f.to_string() == "spherical+hole_effect"));
        assert_eq!(ModelFamily::candidates(&StructureKind::ALL, false).len(), 4);
        assert_eq!("hole-effect".parse::<StructureKind>().unwrap(), StructureKind::HoleEffectSine);
    }

    fn arb_model() -> impl Strategy<Value = VariogramModel> {
        (0.0f64..1.0, prop::collection::vec((0usize..3, 0.01f64..3.0, 1.0f64..300.0), 0..3)).prop_map(|(n, s)| {
            VariogramModel::new(
                n,
                s.into_iter()
                    .map(|(k, sill, range)| Structure {
                        kind: StructureKind::ALL[k],
                        sill,
                        range,
                    })
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn even_and_sill_identity(m in arb_model(), h in 1e-6f64..1000.0) {
            prop_assert_eq!(m.gamma(h), m.gamma(-h));
            prop_assert!((cov_from_variogram(&m, h) + m.gamma(h) - m.sill_total()).abs() <= 1e-12 * m.sill_total().max(1.0));
        }

        #[test]
        fn monotone_without_hole_effect(m in arb_model(), h in 0.0f64..500.0, dh in 0.0f64..100.0) {
            prop_assume!(m.structures.iter().all(|s| s.kind != StructureKind::HoleEffectSine));
            prop_assert!(m.gamma(h + dh) >= m.gamma(h) - 1e-15);
        }
    }
}
