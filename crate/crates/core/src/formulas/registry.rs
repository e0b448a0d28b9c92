//! Models addressable by name, with their feature requirements.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    azema_emery, emery_post_drift, emery_pre_drift, honest::cox_azema, honest_lp_azema, honest_lp_drift,
    jacod_bridge_drift, sup_initial_drift, FormulaError, Side,
};
use crate::simulate::ScaleModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    JacodBridge,
    ProgressiveCox,
    HonestLastPassage,
    SupInitial,
    EmeryLastPassage,
    FutureInfimum,
}

impl ModelName {
    pub const ALL: [ModelName; 6] = [
        Self::JacodBridge,
        Self::ProgressiveCox,
        Self::HonestLastPassage,
        Self::SupInitial,
        Self::EmeryLastPassage,
        Self::FutureInfimum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::JacodBridge => "jacod_bridge",
            Self::ProgressiveCox => "progressive_cox",
            Self::HonestLastPassage => "honest_last_passage",
            Self::SupInitial => "sup_initial",
            Self::EmeryLastPassage => "emery_last_passage",
            Self::FutureInfimum => "future_infimum",
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .ok_or_else(|| FormulaError::UnknownModel(s.into()))
    }
}

/// Path features a model may read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    /// The Brownian value `W_t` (also the `X_t` of the supremum model).
    W,
    /// The terminal value `W_1`.
    WTerminal,
    RunningSup,
    RecordTime,
    /// The diffusion value `Z_t`.
    Z,
    FutureInf,
    /// The realized random time of the enlargement.
    RandomTime,
    CumulativeIntensity,
}

impl Feature {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::W => "w_t",
            Self::WTerminal => "w_1",
            Self::RunningSup => "u_t",
            Self::RecordTime => "record_t",
            Self::Z => "z_t",
            Self::FutureInf => "i_t",
            Self::RandomTime => "random_time",
            Self::CumulativeIntensity => "cumulative_intensity",
        }
    }
}

/// Feature values at one time. Unused fields stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Features {
    pub t: f64,
    pub w_t: Option<f64>,
    pub w_1: Option<f64>,
    pub u_t: Option<f64>,
    pub record_t: Option<f64>,
    pub z_t: Option<f64>,
    pub i_t: Option<f64>,
    pub random_time: Option<f64>,
    pub cumulative_intensity: Option<f64>,
}

impl Features {
    pub fn at(t: f64) -> Self {
        Self { t, ..Self::default() }
    }

    fn get(&self, model: ModelName, f: Feature) -> Result<f64, FormulaError> {
        let v = match f {
            Feature::W => self.w_t,
            Feature::WTerminal => self.w_1,
            Feature::RunningSup => self.u_t,
            Feature::RecordTime => self.record_t,
            Feature::Z => self.z_t,
            Feature::FutureInf => self.i_t,
            Feature::RandomTime => self.random_time,
            Feature::CumulativeIntensity => self.cumulative_intensity,
        };
        v.ok_or(FormulaError::MissingFeature { model: model.as_str(), feature: f.as_str() })
    }
}

/// Model constants that are not path features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Level of the last passage.
    pub level: f64,
    /// Bessel dimension of the future-infimum model.
    pub dimension: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { level: 0.5, dimension: 3.0 }
    }
}

/// A named enlargement with its drift and, where known, Azéma evaluator.
#[derive(Debug, Clone)]
pub struct EnlargementModel {
    pub name: ModelName,
    pub params: ModelParams,
    scale: Option<ScaleModel>,
}

impl EnlargementModel {
    pub fn new(name: ModelName, params: ModelParams) -> Result<Self, FormulaError> {
        let scale = match name {
            ModelName::FutureInfimum => Some(
                ScaleModel::bessel(params.dimension).map_err(|e| super::domain("future_infimum", e.to_string()))?,
            ),
            _ => None,
        };
        if name == ModelName::HonestLastPassage && !(params.level > 0.0) {
            return Err(super::domain("honest_last_passage", format!("level must be positive, got {}", params.level)));
        }
        Ok(Self { name, params, scale })
    }

    pub fn by_name(name: &str) -> Result<Self, FormulaError> {
        Self::new(name.parse()?, ModelParams::default())
    }

    pub fn required_features(&self) -> &'static [Feature] {
        use Feature::*;
        match self.name {
            ModelName::JacodBridge => &[W, WTerminal],
            ModelName::ProgressiveCox => &[W, CumulativeIntensity],
            ModelName::HonestLastPassage => &[Z, RandomTime],
            ModelName::SupInitial => &[W, RunningSup, RecordTime],
            ModelName::EmeryLastPassage => &[W, WTerminal, RandomTime],
            ModelName::FutureInfimum => &[Z, FutureInf],
        }
    }

    /// Error naming the first required feature absent from `f`.
    pub fn validate(&self, f: &Features) -> Result<(), FormulaError> {
        self.required_features().iter().try_for_each(|&x| f.get(self.name, x).map(|_| ()))
    }

    pub fn has_azema(&self) -> bool {
        matches!(self.name, ModelName::ProgressiveCox | ModelName::HonestLastPassage | ModelName::EmeryLastPassage)
    }

    /// Absolutely continuous drift rate of the model's martingale: `W` for
    /// the Brownian models, `e(Z)` for the diffusion models. The
    /// future-infimum model also has a finite-variation push `2 de(I)` that
    /// is not a rate and is left to the caller.
    pub fn drift_rate(&self, f: &Features) -> Result<f64, FormulaError> {
        let n = self.name;
        let t = f.t;
        match n {
            ModelName::JacodBridge => jacod_bridge_drift(t, f.get(n, Feature::W)?, f.get(n, Feature::WTerminal)?),
            ModelName::ProgressiveCox => {
                self.validate(f)?;
                Ok(0.0)
            }
            ModelName::HonestLastPassage => {
                let side = if t < f.get(n, Feature::RandomTime)? { Side::Before } else { Side::After };
                honest_lp_drift(side, f.get(n, Feature::Z)?, self.params.level)
            }
            ModelName::SupInitial => {
                sup_initial_drift(t, f.get(n, Feature::W)?, f.get(n, Feature::RunningSup)?, f.get(n, Feature::RecordTime)?)
            }
            ModelName::EmeryLastPassage => {
                let w = f.get(n, Feature::W)?;
                if t < f.get(n, Feature::RandomTime)? {
                    emery_pre_drift(t, w)
                } else {
                    emery_post_drift(t, w, f.get(n, Feature::WTerminal)?)
                }
            }
            ModelName::FutureInfimum => {
                let z = f.get(n, Feature::Z)?;
                f.get(n, Feature::FutureInf)?;
                let s = self.scale.as_ref().expect("built with the model");
                Ok(s.scale_bracket_rate(z) / s.scale(z))
            }
        }
    }

    /// Azéma supermartingale `P[random time > t | F_t]`, if the model has one.
    pub fn azema(&self, f: &Features) -> Option<Result<f64, FormulaError>> {
        let n = self.name;
        match n {
            ModelName::ProgressiveCox => Some(f.get(n, Feature::CumulativeIntensity).map(cox_azema)),
            ModelName::HonestLastPassage => Some(f.get(n, Feature::Z).and_then(|z| honest_lp_azema(z, self.params.level))),
            ModelName::EmeryLastPassage => Some(f.get(n, Feature::W).and_then(|w| azema_emery(f.t, w))),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in ModelName::ALL {
            assert_eq!(m.as_str().parse::<ModelName>().unwrap(), m);
        }
        assert_eq!("jacod-bridge".parse::<ModelName>().unwrap(), ModelName::JacodBridge);
        assert!("nope".parse::<ModelName>().is_err());
    }

    #[test]
    fn missing_features_are_named() {
        let m = EnlargementModel::by_name("jacod_bridge").unwrap();
        let f = Features { w_t: Some(0.1), ..Features::at(0.5) };
        assert_eq!(
            m.drift_rate(&f).unwrap_err(),
            FormulaError::MissingFeature { model: "jacod_bridge", feature: "w_1" }
        );
        assert!(m.azema(&f).is_none());
    }

    #[test]
    fn dispatch_matches_direct_evaluators() {
        let f = Features {
            w_t: Some(0.8),
            w_1: Some(1.0),
            z_t: Some(2.0),
            i_t: Some(1.5),
            random_time: Some(0.5),
            u_t: Some(1.0),
            record_t: Some(2.5),
            cumulative_intensity: Some(0.3),
            ..Features::at(0.75)
        };
        let get = |name: &str| EnlargementModel::by_name(name).unwrap();
        assert_eq!(get("jacod_bridge").drift_rate(&f).unwrap(), jacod_bridge_drift(0.75, 0.8, 1.0).unwrap());
        assert_eq!(get("emery_last_passage").drift_rate(&f).unwrap(), emery_post_drift(0.75, 0.8, 1.0).unwrap());
        assert_eq!(get("progressive_cox").drift_rate(&f).unwrap(), 0.0);
        assert_eq!(get("future_infimum").drift_rate(&f).unwrap(), -0.125);
        assert_eq!(get("honest_last_passage").drift_rate(&f).unwrap(), honest_lp_drift(Side::After, 2.0, 0.5).unwrap());
        assert_eq!(get("sup_initial").drift_rate(&f).unwrap(), sup_initial_drift(0.75, 0.8, 1.0, 2.5).unwrap());
        assert_eq!(get("honest_last_passage").azema(&f).unwrap().unwrap(), 0.25);
        assert!((get("progressive_cox").azema(&f).unwrap().unwrap() - (-0.3f64).exp()).abs() < 1e-15);
    }
}
