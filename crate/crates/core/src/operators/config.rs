//! JSON operator descriptions: `{"variant": "...", "params": {...}, "dim": N}`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::OperatorSpec;
use crate::construction::{build_operator, ConstructionParams};
use crate::error::{Error, Result};
use crate::space::Scalar;

/// A real number or an `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarRepr {
    Real(f64),
    Complex([f64; 2]),
}

impl ScalarRepr {
    pub fn value(self) -> Scalar {
        match self {
            ScalarRepr::Real(x) => Scalar::new(x, 0.0),
            ScalarRepr::Complex([re, im]) => Scalar::new(re, im),
        }
    }

    pub fn from_scalar(z: Scalar) -> Self {
        if z.im == 0.0 {
            ScalarRepr::Real(z.re)
        } else {
            ScalarRepr::Complex([z.re, z.im])
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub variant: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagonalParams {
    values: Vec<ScalarRepr>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ShiftParams {
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AdjointParams {
    a: ScalarRepr,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaledParams {
    c: ScalarRepr,
    inner: OperatorConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectSumParams {
    blocks: Vec<OperatorConfig>,
}

fn decode<T: DeserializeOwned>(variant: &str, value: &serde_json::Value) -> Result<T> {
    let value = if value.is_null() { serde_json::json!({}) } else { value.clone() };
    serde_json::from_value(value).map_err(|e| Error::InvalidParameter(format!("params of {variant}: {e}")))
}

impl OperatorConfig {
    pub fn to_spec(&self) -> Result<OperatorSpec> {
        let v = self.variant.as_str();
        let need_dim = || {
            self.dim.ok_or_else(|| Error::InvalidParameter(format!("variant {v} requires \"dim\"")))
        };
        let spec = match v {
            "diagonal" => {
                let p: DiagonalParams = decode(v, &self.params)?;
                OperatorSpec::Diagonal(p.values.into_iter().map(ScalarRepr::value).collect())
            }
            "backward_shift" => {
                let p: ShiftParams = decode(v, &self.params)?;
                match p.weights {
                    Some(weights) => OperatorSpec::BackwardShift { dim: self.dim.unwrap_or(weights.len() + 1), weights },
                    None => OperatorSpec::backward_shift(need_dim()?),
                }
            }
            "forward_shift" => {
                let p: ShiftParams = decode(v, &self.params)?;
                match p.weights {
                    Some(weights) => OperatorSpec::ForwardShift { dim: self.dim.unwrap_or(weights.len()), weights },
                    None => OperatorSpec::forward_shift(need_dim()?),
                }
            }
            "adjoint_multiplication" => {
                let p: AdjointParams = decode(v, &self.params)?;
                OperatorSpec::adjoint_multiplication(p.a.value(), need_dim()?)
            }
            "scaled" => {
                let p: ScaledParams = decode(v, &self.params)?;
                OperatorSpec::scaled(p.c.value(), p.inner.to_spec()?)
            }
            "direct_sum" => {
                let p: DirectSumParams = decode(v, &self.params)?;
                OperatorSpec::DirectSum(p.blocks.iter().map(OperatorConfig::to_spec).collect::<Result<_>>()?)
            }
            "perturbed_forward_shift" => {
                let p: ConstructionParams = decode(v, &self.params)?;
                build_operator(&p, need_dim()?)?
            }
            other => return Err(Error::InvalidParameter(format!("unknown operator variant {other:?}"))),
        };
        spec.validate()?;
        if let Some(dim) = self.dim {
            if dim != spec.dim() {
                return Err(Error::DimensionMismatch { expected: dim, found: spec.dim() });
            }
        }
        Ok(spec)
    }

    /// Inverse of [`OperatorConfig::to_spec`]. Perturbed shifts need their construction parameters.
    pub fn from_spec(spec: &OperatorSpec) -> Result<Self> {
        use serde_json::json;
        let all_ones = |w: &[f64]| w.iter().all(|&x| x == 1.0);
        let params = match spec {
            OperatorSpec::Diagonal(values) => {
                json!({ "values": values.iter().map(|&z| ScalarRepr::from_scalar(z)).collect::<Vec<_>>() })
            }
            OperatorSpec::BackwardShift { weights, .. } | OperatorSpec::ForwardShift { weights, .. } => {
                if all_ones(weights) {
                    serde_json::Value::Null
                } else {
                    json!({ "weights": weights })
                }
            }
            OperatorSpec::AdjointMultiplication { a, .. } => json!({ "a": ScalarRepr::from_scalar(*a) }),
            OperatorSpec::Scaled { c, inner } => {
                json!({ "c": ScalarRepr::from_scalar(*c), "inner": OperatorConfig::from_spec(inner)? })
            }
            OperatorSpec::DirectSum(blocks) => json!({
                "blocks": blocks.iter().map(OperatorConfig::from_spec).collect::<Result<Vec<_>>>()?
            }),
            OperatorSpec::PerturbedForwardShift(p) => {
                let params = p.params().ok_or_else(|| {
                    Error::InvalidParameter("perturbed shift without construction parameters".into())
                })?;
                serde_json::to_value(params).map_err(|e| Error::InvalidParameter(e.to_string()))?
            }
        };
        Ok(OperatorConfig { variant: spec.variant_name().to_string(), params, dim: Some(spec.dim()) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_configs() {
        let text = r#"{
            "variant": "direct_sum",
            "params": {"blocks": [
                {"variant": "diagonal", "params": {"values": [-1, -0.5]}},
                {"variant": "adjoint_multiplication", "params": {"a": [1, 0]}, "dim": 32}
            ]}
        }"#;
        let cfg: OperatorConfig = serde_json::from_str(text).unwrap();
        let spec = cfg.to_spec().unwrap();
        assert_eq!(spec.dim(), 34);
        let back = OperatorConfig::from_spec(&spec).unwrap();
        assert_eq!(back.to_spec().unwrap(), spec);
    }

    #[test]
    fn rejects_unknown_fields_and_variants() {
        let cfg: OperatorConfig =
            serde_json::from_str(r#"{"variant": "diagonal", "params": {"valuez": [1]}}"#).unwrap();
        let err = cfg.to_spec().unwrap_err().to_string();
        assert!(err.contains("valuez"), "{err}");
        let cfg: OperatorConfig = serde_json::from_str(r#"{"variant": "bogus", "dim": 3}"#).unwrap();
        assert!(cfg.to_spec().is_err());
        let cfg: OperatorConfig = serde_json::from_str(r#"{"variant": "backward_shift"}"#).unwrap();
        assert!(cfg.to_spec().unwrap_err().to_string().contains("dim"));
    }

    #[test]
    fn scaled_zero_is_rejected() {
        let cfg: OperatorConfig = serde_json::from_str(
            r#"{"variant": "scaled", "params": {"c": 0, "inner": {"variant": "backward_shift", "dim": 4}}}"#,
        )
        .unwrap();
        assert!(cfg.to_spec().is_err());
    }
}
