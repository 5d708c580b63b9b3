use crate::error::{Error, Result};
use crate::prior::PriorSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Bayes risk under the two-group model.
    Bayes,
    /// FDR / FNR at a fixed sparse signal.
    Minimax,
    /// Plug-in `p̂`; Bayes risk, or FDR / FNR when a `[signal]` section is given.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: String,
    pub kind: ExperimentKind,
    pub replicates: usize,
    pub seed: Option<u64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Multiplier on the theoretical bound when reporting `within_bound`.
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_true")]
    pub replicate_rows: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PRule {
    /// `p_n = √n`.
    Sqrt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_rule: Option<PRule>,
    #[serde(default = "default_c_psi")]
    pub c_psi: f64,
}

impl ModelSection {
    /// Sparsity levels for a given `n`.
    pub fn p_values(&self, n: u64) -> Vec<f64> {
        match (&self.p, self.p_rule) {
            (Some(p), _) => p.clone(),
            (None, Some(PRule::Sqrt)) => vec![(n as f64).sqrt()],
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalRule {
    /// Signal magnitudes listed in `magnitudes`.
    Fixed,
    /// Magnitudes `scale · ρ_n` for each entry of `scales`.
    RhoN,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub rule: SignalRule,
    #[serde(default = "default_v_n")]
    pub v_n: f64,
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitudes: Option<Vec<f64>>,
    /// `C₁`; calibrated on the shrinkage curve when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSection {
    #[serde(default = "default_estimator")]
    pub estimator: String,
    #[serde(default = "default_c_u")]
    pub c_u: f64,
    #[serde(default)]
    pub zeta: f64,
    #[serde(default = "default_gamma_n")]
    pub gamma_n: f64,
}

impl Default for AdaptiveSection {
    fn default() -> Self {
        AdaptiveSection {
            estimator: default_estimator(),
            c_u: default_c_u(),
            zeta: 0.0,
            gamma_n: default_gamma_n(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub prior: PriorSpec,
    pub model: ModelSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<SignalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveSection>,
}

fn default_alpha() -> f64 {
    0.5
}
fn default_slack() -> f64 {
    1.05
}
fn default_lambda() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_c_psi() -> f64 {
    1.0
}
fn default_v_n() -> f64 {
    3.0
}
fn default_scales() -> Vec<f64> {
    vec![1.0]
}
fn default_estimator() -> String {
    "simple".into()
}
fn default_c_u() -> f64 {
    2.0
}
fn default_gamma_n() -> f64 {
    1.0
}

impl ExperimentConfig {
    /// Parse and validate. An adaptive experiment without `[adaptive]` gets the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut config: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::invalid("config", e.to_string().trim_end().to_string()))?;
        if config.experiment.kind == ExperimentKind::Adaptive && config.adaptive.is_none() {
            config.adaptive = Some(AdaptiveSection::default());
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::invalid("config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// The resolved config, defaults included, as TOML.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> u64 {
        self.experiment.seed.expect("validated")
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.id.trim().is_empty() {
            return Err(Error::invalid("experiment.id", "must be non-empty"));
        }
        if e.replicates == 0 {
            return Err(Error::invalid(
                "experiment.replicates",
                "must be at least 1",
            ));
        }
        if e.seed.is_none() {
            return Err(Error::invalid(
                "experiment.seed",
                "required; runs are never seeded from the clock",
            ));
        }
        if !(e.alpha > 0.0 && e.alpha < 1.0) {
            return Err(Error::invalid(
                "experiment.alpha",
                format!("must lie in (0, 1), got {}", e.alpha),
            ));
        }
        if !(e.slack >= 1.0 && e.slack.is_finite()) {
            return Err(Error::invalid(
                "experiment.slack",
                format!("must be >= 1, got {}", e.slack),
            ));
        }
        if !(e.lambda > 0.0 && e.lambda < 1.0) {
            return Err(Error::invalid(
                "experiment.lambda",
                format!("must lie in (0, 1), got {}", e.lambda),
            ));
        }

        if self.prior.family.is_none() {
            return Err(Error::invalid("prior.family", "missing"));
        }
        if self.prior.n.is_some() || self.prior.p.is_some() {
            return Err(Error::invalid(
                "prior.n",
                "sparsity is set in [model], not [prior]",
            ));
        }

        let m = &self.model;
        if m.n.is_empty() {
            return Err(Error::invalid("model.n", "must list at least one value"));
        }
        if m.n.iter().any(|&n| n < 2) {
            return Err(Error::invalid("model.n", "every n must be at least 2"));
        }
        match (&m.p, m.p_rule) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid(
                    "model.p",
                    "give either p or p_rule, not both",
                ))
            }
            (None, None) => return Err(Error::invalid("model.p", "give p or p_rule")),
            (Some(p), None) if p.is_empty() => {
                return Err(Error::invalid("model.p", "must list at least one value"))
            }
            _ => {}
        }
        for &n in &m.n {
            for p in m.p_values(n) {
                if !(p > 0.0 && p < n as f64) {
                    return Err(Error::invalid(
                        "model.p",
                        format!("p = {p} outside (0, n = {n})"),
                    ));
                }
            }
        }
        if !(m.c_psi > 0.0 && m.c_psi.is_finite()) {
            return Err(Error::invalid("model.c_psi", "must be positive"));
        }

        let needs_signal = e.kind == ExperimentKind::Minimax;
        match (&self.signal, needs_signal) {
            (None, true) => {
                return Err(Error::invalid("signal", "required for kind = \"minimax\""))
            }
            (Some(_), false) if e.kind == ExperimentKind::Bayes => {
                return Err(Error::invalid("signal", "not used by kind = \"bayes\""))
            }
            _ => {}
        }
        if let Some(s) = &self.signal {
            for &n in &m.n {
                for p in m.p_values(n) {
                    if p.fract() != 0.0 {
                        return Err(Error::invalid(
                            "model.p",
                            format!("signal experiments need integer p, got {p}"),
                        ));
                    }
                }
            }
            if !(s.v_n >= 0.0) {
                return Err(Error::invalid("signal.v_n", "must be nonnegative"));
            }
            match s.rule {
                SignalRule::Fixed => match &s.magnitudes {
                    Some(v) if !v.is_empty() && v.iter().all(|x| x.is_finite() && *x != 0.0) => {}
                    _ => {
                        return Err(Error::invalid(
                            "signal.magnitudes",
                            "rule = \"fixed\" needs nonzero magnitudes",
                        ))
                    }
                },
                SignalRule::RhoN => {
                    if s.scales.is_empty() || s.scales.iter().any(|x| !(*x > 0.0)) {
                        return Err(Error::invalid(
                            "signal.scales",
                            "must be positive and non-empty",
                        ));
                    }
                }
            }
            if let Some(c1) = s.c1 {
                if !(c1 >= 0.0) {
                    return Err(Error::invalid("signal.c1", "must be nonnegative"));
                }
            }
        }

        if let Some(a) = &self.adaptive {
            if e.kind != ExperimentKind::Adaptive {
                return Err(Error::invalid(
                    "adaptive",
                    "only used by kind = \"adaptive\"",
                ));
            }
            if a.estimator != "simple" {
                return Err(Error::invalid(
                    "adaptive.estimator",
                    format!("unknown estimator {:?}", a.estimator),
                ));
            }
            if !(a.c_u > 0.0) {
                return Err(Error::invalid("adaptive.c_u", "must be positive"));
            }
            if !(a.zeta >= 0.0) {
                return Err(Error::invalid("adaptive.zeta", "must be nonnegative"));
            }
            if !(a.gamma_n >= 1.0) {
                return Err(Error::invalid("adaptive.gamma_n", "must be at least 1"));
            }
        }
        // Fails early on missing family parameters.
        self.prior
            .with_sparsity(self.model.n[0], self.model.p_values(self.model.n[0])[0])
            .build()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
id = "t"
kind = "bayes"
replicates = 3
seed = 7

[prior]
family = "horseshoe"

[model]
n = [1000]
p = [10.0]
"#;

    #[test]
    fn defaults_are_filled_and_serialized() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.experiment.alpha, 0.5);
        assert_eq!(c.experiment.slack, 1.05);
        let text = c.to_toml_string();
        assert!(text.contains("slack = 1.05"));
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }

    fn field_of(text: &str) -> &'static str {
        match ExperimentConfig::from_toml_str(text).unwrap_err() {
            Error::InvalidParameter { name, .. } => name,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn field_level_errors() {
        assert_eq!(
            field_of(&MINIMAL.replace("seed = 7", "")),
            "experiment.seed"
        );
        assert_eq!(
            field_of(&MINIMAL.replace("replicates = 3", "replicates = 0")),
            "experiment.replicates"
        );
        assert_eq!(
            field_of(&MINIMAL.replace("p = [10.0]", "p = [1000.0]")),
            "model.p"
        );
        assert_eq!(
            field_of(&MINIMAL.replace("kind = \"bayes\"", "kind = \"minimax\"")),
            "signal"
        );
        assert_eq!(
            field_of(&MINIMAL.replace("seed = 7", "seed = 7\nbogus = 1")),
            "config"
        );
    }
}
