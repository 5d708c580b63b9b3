//! Key-value prior specifications.
//!
//! A spec is either a TOML table (optionally under a `[prior]` section) or an
//! inline string of comma-separated `key=value` pairs such as
//! `family=horseshoe,n=10000,p=100`.

use super::{
    exponential_prior, horseshoe_prior, inverse_gamma_prior, LowerTailConstants, ScaleMixturePrior,
};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Horseshoe,
    Exponential,
    InverseGamma,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub family: Option<FamilyName>,
    /// Horseshoe global scale; defaults to `p/n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rv_onset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rv_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_onset: Option<f64>,
}

#[derive(Deserialize)]
struct Wrapped {
    prior: PriorSpec,
}

const INTEGER_KEYS: &[&str] = &["n"];

impl PriorSpec {
    /// Parse a TOML document, with or without a `[prior]` header.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        if let Ok(w) = toml::from_str::<Wrapped>(text) {
            return Ok(w.prior);
        }
        toml::from_str(text).map_err(|e| Error::invalid("prior", e.message().to_string()))
    }

    /// Parse `key=value,key=value`.
    pub fn parse_inline(text: &str) -> Result<Self> {
        let mut doc = String::new();
        for pair in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::invalid("prior", format!("expected key=value, got `{pair}`"))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || key.is_empty() {
                return Err(Error::invalid("prior", format!("bad key `{key}`")));
            }
            let rendered = match value.parse::<f64>() {
                Ok(v) if INTEGER_KEYS.contains(&key) && v.fract() == 0.0 && v >= 0.0 => {
                    format!("{}", v as u64)
                }
                Ok(v) if v.is_finite() => format!("{v:?}"),
                _ => format!("{value:?}"),
            };
            doc.push_str(&format!("{key} = {rendered}\n"));
        }
        toml::from_str(&doc).map_err(|e| Error::invalid("prior", e.message().to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("prior spec serializes")
    }

    /// Same spec with the sparsity pair replaced.
    pub fn with_sparsity(&self, n: u64, p: f64) -> Self {
        PriorSpec {
            n: Some(n),
            p: Some(p),
            ..self.clone()
        }
    }

    pub fn build(&self) -> Result<ScaleMixturePrior> {
        let n = self.n.ok_or_else(|| Error::invalid("n", "missing"))?;
        let p = self.p.ok_or_else(|| Error::invalid("p", "missing"))?;
        let family = self
            .family
            .ok_or_else(|| Error::invalid("family", "missing"))?;
        let require = |name: &'static str, v: Option<f64>| {
            v.ok_or_else(|| Error::invalid(name, format!("required for family {family:?}")))
        };
        let mut prior = match family {
            FamilyName::Horseshoe => horseshoe_prior(self.tau.unwrap_or(p / n as f64), n, p)?,
            FamilyName::Exponential => exponential_prior(require("rate", self.rate)?, n, p)?,
            FamilyName::InverseGamma => inverse_gamma_prior(
                require("shape", self.shape)?,
                require("scale", self.scale)?,
                n,
                p,
            )?,
        };
        if let Some(u0) = self.rv_onset {
            prior = prior.with_rv_onset(u0)?;
        }
        if let Some(r) = self.rv_ratio {
            prior = prior.with_rv_ratio(r)?;
        }
        let lower = [
            self.lower_rate,
            self.lower_scale,
            self.lower_exponent,
            self.lower_onset,
        ];
        match lower {
            [Some(rate), Some(scale), Some(k), Some(onset)] => {
                prior = prior.with_lower_tail(LowerTailConstants::new(rate, scale, k, onset)?);
            }
            [None, None, None, None] => {}
            _ => return Err(Error::invalid(
                "lower_*",
                "lower_rate, lower_scale, lower_exponent and lower_onset must be given together",
            )),
        }
        Ok(prior)
    }
}
