//! Analytic predictors with known attributions, used for testing and for
//! planting synthetic anomalies.

use serde::Deserialize;
use serde_json::Value;

use super::Predictor;
use crate::window::{WindowBatch, WindowShape};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Uniform(f64),
    PerFeature(Vec<f64>),
    PerCell(Vec<f64>),
}

impl Weights {
    fn dot(&self, shape: WindowShape, window: &[f64]) -> Result<f64> {
        match self {
            Weights::Uniform(w) => Ok(w * window.iter().sum::<f64>()),
            Weights::PerFeature(ws) => {
                if ws.len() != shape.features {
                    return Err(Error::BadParams(format!(
                        "{} feature weights for {} features",
                        ws.len(),
                        shape.features
                    )));
                }
                Ok(window
                    .chunks_exact(shape.features)
                    .flat_map(|row| row.iter().zip(ws).map(|(x, w)| x * w))
                    .sum())
            }
            Weights::PerCell(ws) => {
                if ws.len() != window.len() {
                    return Err(Error::BadParams(format!(
                        "{} cell weights for {} cells",
                        ws.len(),
                        window.len()
                    )));
                }
                Ok(window.iter().zip(ws).map(|(x, w)| x * w).sum())
            }
        }
    }
}

/// The built-in analytic models.
#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Constant { c: f64 },
    /// `bias + Σ weight · cell`
    Linear { weights: Weights, bias: f64 },
    /// 1 if any instant of `feature` exceeds `tau`, else 0.
    ThresholdAny { feature: usize, tau: f64 },
    /// 1 if the row sum of any of the last `k` instants exceeds `tau`, else 0.
    LastInstantThreshold { k: usize, tau: f64 },
    /// `sigmoid(bias + Σ weight · cell)`
    LogisticSum { weights: Weights, bias: f64 },
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Constant { .. } => "constant",
            Builtin::Linear { .. } => "linear",
            Builtin::ThresholdAny { .. } => "threshold-any",
            Builtin::LastInstantThreshold { .. } => "last-instant-threshold",
            Builtin::LogisticSum { .. } => "logistic-sum",
        }
    }

    pub fn predict_one(&self, shape: WindowShape, window: &[f64]) -> Result<f64> {
        Ok(match self {
            Builtin::Constant { c } => *c,
            Builtin::Linear { weights, bias } => bias + weights.dot(shape, window)?,
            Builtin::ThresholdAny { feature, tau } => {
                if *feature >= shape.features {
                    return Err(Error::BadParams(format!(
                        "feature {feature} outside {} features",
                        shape.features
                    )));
                }
                let hit = window
                    .chunks_exact(shape.features)
                    .any(|row| row[*feature] > *tau);
                f64::from(u8::from(hit))
            }
            Builtin::LastInstantThreshold { k, tau } => {
                let skip = shape.instants.saturating_sub(*k);
                let hit = window
                    .chunks_exact(shape.features)
                    .skip(skip)
                    .any(|row| row.iter().sum::<f64>() > *tau);
                f64::from(u8::from(hit))
            }
            Builtin::LogisticSum { weights, bias } => {
                let z = bias + weights.dot(shape, window)?;
                1.0 / (1.0 + (-z).exp())
            }
        })
    }
}

impl Predictor for Builtin {
    fn name(&self) -> &str {
        Builtin::name(self)
    }

    fn predict_batch(&self, windows: &WindowBatch) -> Result<Vec<f64>> {
        let shape = windows.shape();
        windows.windows().map(|w| self.predict_one(shape, w)).collect()
    }

    fn is_probability(&self) -> bool {
        !matches!(self, Builtin::Constant { .. } | Builtin::Linear { .. })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantParams {
    #[serde(default)]
    c: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightedParams {
    weight: Option<f64>,
    weights: Option<Vec<f64>>,
    feature_weights: Option<Vec<f64>>,
    #[serde(default)]
    bias: f64,
}

impl WeightedParams {
    fn weights(&self) -> Result<Weights> {
        match (self.weight, &self.weights, &self.feature_weights) {
            (w, None, None) => Ok(Weights::Uniform(w.unwrap_or(1.0))),
            (None, Some(ws), None) => Ok(Weights::PerCell(ws.clone())),
            (None, None, Some(ws)) => Ok(Weights::PerFeature(ws.clone())),
            _ => Err(Error::BadParams(
                "give at most one of weight, weights, feature_weights".into(),
            )),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdAnyParams {
    feature: usize,
    tau: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LastInstantParams {
    #[serde(default = "one")]
    k: usize,
    tau: f64,
}

fn one() -> usize {
    1
}

fn parse<T: for<'de> Deserialize<'de>>(params: &Value) -> Result<T> {
    let params = if params.is_null() {
        Value::Object(Default::default())
    } else {
        params.clone()
    };
    serde_json::from_value(params).map_err(|e| Error::BadParams(e.to_string()))
}

/// Looks up a built-in model by name and JSON parameter object.
pub fn builtin_predictor(name: &str, params: &Value) -> Result<Box<dyn Predictor>> {
    let model = match name {
        "constant" => Builtin::Constant {
            c: parse::<ConstantParams>(params)?.c,
        },
        "linear" => {
            let p: WeightedParams = parse(params)?;
            Builtin::Linear {
                weights: p.weights()?,
                bias: p.bias,
            }
        }
        "threshold-any" => {
            let p: ThresholdAnyParams = parse(params)?;
            Builtin::ThresholdAny {
                feature: p.feature,
                tau: p.tau,
            }
        }
        "last-instant-threshold" => {
            let p: LastInstantParams = parse(params)?;
            if p.k == 0 {
                return Err(Error::BadParams("k must be at least 1".into()));
            }
            Builtin::LastInstantThreshold { k: p.k, tau: p.tau }
        }
        "logistic-sum" => {
            let p: WeightedParams = parse(params)?;
            Builtin::LogisticSum {
                weights: p.weights()?,
                bias: p.bias,
            }
        }
        other => return Err(Error::UnknownPredictor(other.to_owned())),
    };
    Ok(Box::new(model))
}
