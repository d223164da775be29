//! Integrand construction from a name plus a JSON parameter block, the
//! CLI-facing counterpart of the typed constructors in `cubayes::integrands`.

use cubayes::integrands::{
    asian_option, bernoulli_native, constant, product_peak, AsianOptionParams, IntegrandSpec,
    PathConstruction, Periodization,
};
use serde::Deserialize;
use serde_json::Value;

use crate::error::{CliError, Result};

pub const INTEGRAND_NAMES: [&str; 4] = [
    "constant",
    "product-peak",
    "bernoulli-native",
    "asian-option",
];

/// What to integrate: a name, an optional dimension, and a parameter block
/// assembled from layered sources (JSON flag, config table, dedicated flags).
#[derive(Debug, Clone)]
pub struct IntegrandRequest {
    pub name: String,
    pub dim: Option<usize>,
    pub params: Value,
}

impl IntegrandRequest {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            dim: None,
            params: Value::Object(Default::default()),
        }
    }

    /// Merge `overlay`'s top-level keys over the current parameter block
    /// (later layers win key-by-key).
    pub fn merge_params(&mut self, overlay: &Value) -> Result<()> {
        let Value::Object(overlay) = overlay else {
            return Err(CliError::Usage(format!(
                "parameter block must be a JSON object, got: {overlay}"
            )));
        };
        let Value::Object(base) = &mut self.params else {
            unreachable!("params always initialized to an object");
        };
        for (k, v) in overlay {
            base.insert(k.clone(), v.clone());
        }
        Ok(())
    }

    pub fn set_param(&mut self, key: &str, value: Value) {
        let Value::Object(base) = &mut self.params else {
            unreachable!("params always initialized to an object");
        };
        base.insert(key.to_string(), value);
    }

    /// Build the integrand, resolving per-name dimension defaults.
    pub fn build(&self) -> Result<IntegrandSpec> {
        match self.name.as_str() {
            "constant" => {
                let p: ConstantParams = parse_params(&self.params)?;
                Ok(constant(self.dim.unwrap_or(1), p.value)?)
            }
            "product-peak" => {
                let p: ProductPeakParams = parse_params(&self.params)?;
                let dim = self
                    .dim
                    .ok_or_else(|| CliError::Usage("product-peak requires --dim".into()))?;
                Ok(product_peak(dim, p.a)?)
            }
            "bernoulli-native" => {
                let p: BernoulliNativeParams = parse_params(&self.params)?;
                let dim = self
                    .dim
                    .ok_or_else(|| CliError::Usage("bernoulli-native requires --dim".into()))?;
                let coeffs = p.coeffs.unwrap_or_else(|| vec![1.0; dim]);
                Ok(bernoulli_native(dim, p.r, &coeffs)?)
            }
            "asian-option" => {
                let p: AsianParams = parse_params(&self.params)?;
                Ok(asian_option(&p.resolve(self.dim)?)?)
            }
            other => Err(CliError::Usage(format!(
                "unknown integrand '{other}'; known: {}",
                INTEGRAND_NAMES.join(", ")
            ))),
        }
    }
}

fn parse_params<T: for<'de> Deserialize<'de>>(params: &Value) -> Result<T> {
    serde_json::from_value(params.clone())
        .map_err(|e| CliError::Usage(format!("bad parameter block: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConstantParams {
    value: f64,
}

impl Default for ConstantParams {
    fn default() -> Self {
        Self { value: 1.0 }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ProductPeakParams {
    a: f64,
}

impl Default for ProductPeakParams {
    fn default() -> Self {
        Self { a: 1.0 }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct BernoulliNativeParams {
    #[serde(default = "default_r")]
    r: u32,
    coeffs: Option<Vec<f64>>,
}

fn default_r() -> u32 {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AsianParams {
    s0: f64,
    strike: f64,
    rate: f64,
    volatility: f64,
    maturity: f64,
    baker: bool,
    path: String,
}

impl Default for AsianParams {
    fn default() -> Self {
        let d = AsianOptionParams::default();
        Self {
            s0: d.s0,
            strike: d.strike,
            rate: d.rate,
            volatility: d.volatility,
            maturity: d.maturity,
            baker: matches!(d.periodization, Periodization::Baker),
            path: "cholesky".into(),
        }
    }
}

impl AsianParams {
    fn resolve(&self, dim: Option<usize>) -> Result<AsianOptionParams> {
        Ok(AsianOptionParams {
            s0: self.s0,
            strike: self.strike,
            rate: self.rate,
            volatility: self.volatility,
            maturity: self.maturity,
            n_monitor: dim.unwrap_or(AsianOptionParams::default().n_monitor),
            path_construction: parse_path(&self.path)?,
            periodization: if self.baker {
                Periodization::Baker
            } else {
                Periodization::None
            },
        })
    }
}

pub fn parse_path(name: &str) -> Result<PathConstruction> {
    match name {
        "cholesky" => Ok(PathConstruction::CholeskyTimeOrder),
        "bridge" => Ok(PathConstruction::BrownianBridge),
        "pca" => Ok(PathConstruction::Pca),
        other => Err(CliError::Usage(format!(
            "unknown path construction '{other}'; known: cholesky, bridge, pca"
        ))),
    }
}
