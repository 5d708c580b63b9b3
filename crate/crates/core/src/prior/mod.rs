//! Scale-mixture priors on the local variance `σ² = u`.
//!
//! A prior is a density `π` on `(0, ∞)` together with the constants that the
//! testing guarantees are stated in terms of: the tail decomposition
//! `π(u) = L(u) e^{-bu}`, the uniform regular variation constants `(u₀, R)` of
//! `L`, and the lower-tail constants `(b', C', K, u*)`. Constants that a family
//! does not declare are estimated by the checkers in [`conditions`].

pub mod conditions;
pub mod spec;

pub use conditions::{
    certify, check_condition1, check_condition2, check_condition3, CertifiedConstants,
    ConditionCertificate, ConditionId, Evidence, GridSpec, PriorCertificates,
};
pub use spec::{FamilyName, PriorSpec};

use crate::error::{ensure_positive, Error, Result};
use crate::quadrature::{integrate_log_half_line, QuadratureSettings};
use libm::lgamma as ln_gamma;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

/// The pair `(n, p)` fixing `τ_n(p) = p/n` and `ν_n(p) = √log(n/p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sparsity {
    n: u64,
    p: f64,
}

impl Sparsity {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be a positive integer"));
        }
        if !(p > 0.0 && p < n as f64) {
            return Err(Error::invalid(
                "p",
                format!("must lie in (0, n = {n}), got {p}"),
            ));
        }
        Ok(Sparsity { n, p })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `τ_n(p) = p/n`.
    pub fn tau(&self) -> f64 {
        self.p / self.n as f64
    }

    /// `ν_n(p) = √log(n/p)`.
    pub fn nu(&self) -> f64 {
        self.log_ratio().sqrt()
    }

    /// `log(n/p)`.
    pub fn log_ratio(&self) -> f64 {
        (self.n as f64 / self.p).ln()
    }

    /// `s_n = τ_n(p) ν_n(p)²`.
    pub fn s_n(&self) -> f64 {
        self.tau() * self.log_ratio()
    }

    /// Regimes with `p ≥ n/e` (so `ν_n ≤ 1`) are outside the sparse setting.
    pub fn is_degenerate(&self) -> bool {
        self.log_ratio() <= 1.0
    }
}

/// Lower-tail constants: `C' π(u) ≥ τ_n(p)^K e^{-b'u}` for all `u ≥ u*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerTailConstants {
    /// `b' > 0`
    pub rate: f64,
    /// `C' > 0`
    pub scale: f64,
    /// `K ≥ 0`
    pub exponent: f64,
    /// `u* ≥ 1`
    pub onset: f64,
}

impl LowerTailConstants {
    pub fn new(rate: f64, scale: f64, exponent: f64, onset: f64) -> Result<Self> {
        ensure_positive("lower_rate", rate)?;
        ensure_positive("lower_scale", scale)?;
        if !(exponent.is_finite() && exponent >= 0.0) {
            return Err(Error::invalid(
                "lower_exponent",
                format!("must be >= 0, got {exponent}"),
            ));
        }
        if !(onset.is_finite() && onset >= 1.0) {
            return Err(Error::invalid(
                "lower_onset",
                format!("must be >= 1, got {onset}"),
            ));
        }
        Ok(LowerTailConstants {
            rate,
            scale,
            exponent,
            onset,
        })
    }
}

pub type LogDensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PriorFamily {
    /// `π(u) = τ / (π √u (τ² + u))`, the law of `τ²λ²` with half-Cauchy `λ`.
    Horseshoe { tau: f64 },
    /// `π(u) = rate · e^{-rate u}`.
    Exponential { rate: f64 },
    /// `π(u) = scale^shape / Γ(shape) · u^{-shape-1} e^{-scale/u}`.
    InverseGamma { shape: f64, scale: f64 },
    /// A user-supplied log-density.
    Custom {
        name: String,
        log_density: LogDensityFn,
    },
}

impl PriorFamily {
    pub fn name(&self) -> &str {
        match self {
            PriorFamily::Horseshoe { .. } => "horseshoe",
            PriorFamily::Exponential { .. } => "exponential",
            PriorFamily::InverseGamma { .. } => "inverse_gamma",
            PriorFamily::Custom { name, .. } => name,
        }
    }

    fn log_density(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match self {
            PriorFamily::Horseshoe { tau } => {
                tau.ln() - PI.ln() - 0.5 * u.ln() - (tau * tau + u).ln()
            }
            PriorFamily::Exponential { rate } => rate.ln() - rate * u,
            PriorFamily::InverseGamma { shape, scale } => {
                shape * scale.ln() - ln_gamma(*shape) - (shape + 1.0) * u.ln() - scale / u
            }
            PriorFamily::Custom { log_density, .. } => log_density(u),
        }
    }
}

impl fmt::Debug for PriorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorFamily::Horseshoe { tau } => {
                f.debug_struct("Horseshoe").field("tau", tau).finish()
            }
            PriorFamily::Exponential { rate } => {
                f.debug_struct("Exponential").field("rate", rate).finish()
            }
            PriorFamily::InverseGamma { shape, scale } => f
                .debug_struct("InverseGamma")
                .field("shape", shape)
                .field("scale", scale)
                .finish(),
            PriorFamily::Custom { name, .. } => {
                f.debug_struct("Custom").field("name", name).finish()
            }
        }
    }
}

/// A density on `(0, ∞)` plus its declared condition constants.
#[derive(Debug, Clone)]
pub struct ScaleMixturePrior {
    family: PriorFamily,
    tail_rate: f64,
    lower_tail: Option<LowerTailConstants>,
    rv_onset: f64,
    rv_ratio: Option<f64>,
    sparsity: Sparsity,
}

/// Horseshoe prior with global scale `tau`.
///
/// The lower-tail constants `K = 1`, `b' = 1`, `u* = 1` and
/// `C' = π(τ²/e + (3/(2e))^{3/2})` are declared whenever `τ ≥ p/n`: on
/// `u ≥ 1` the bound `π √u (τ² + u) e^{-u} ≤ C'` holds and `(p/n) ≤ τ`.
pub fn horseshoe_prior(tau: f64, n: u64, p: f64) -> Result<ScaleMixturePrior> {
    ensure_positive("tau", tau)?;
    let sparsity = Sparsity::new(n, p)?;
    let lower_tail = if tau >= sparsity.tau() {
        let scale = PI * (tau * tau / E + (1.5 / E).powf(1.5));
        Some(LowerTailConstants::new(1.0, scale, 1.0, 1.0)?)
    } else {
        None
    };
    Ok(ScaleMixturePrior {
        family: PriorFamily::Horseshoe { tau },
        tail_rate: 0.0,
        lower_tail,
        rv_onset: 1.0,
        rv_ratio: None,
        sparsity,
    })
}

/// Exponential prior; `L_n ≡ rate` so the tail decomposition is exact with `b = rate`.
pub fn exponential_prior(rate: f64, n: u64, p: f64) -> Result<ScaleMixturePrior> {
    ensure_positive("rate", rate)?;
    let sparsity = Sparsity::new(n, p)?;
    Ok(ScaleMixturePrior {
        family: PriorFamily::Exponential { rate },
        tail_rate: rate,
        lower_tail: Some(LowerTailConstants::new(rate, 1.0 / rate, 0.0, 1.0)?),
        rv_onset: 1.0,
        rv_ratio: Some(1.0),
        sparsity,
    })
}

/// Inverse-gamma prior, a polynomial-tailed contrast case with `b = 0`.
pub fn inverse_gamma_prior(shape: f64, scale: f64, n: u64, p: f64) -> Result<ScaleMixturePrior> {
    ensure_positive("shape", shape)?;
    ensure_positive("scale", scale)?;
    let sparsity = Sparsity::new(n, p)?;
    // For u >= 1: π(u) >= scale^shape/Γ(shape) e^{-scale} u^{-shape-1}, and
    // u^{shape+1} e^{-u} <= ((shape+1)/e)^{shape+1}.
    let ln_c =
        ln_gamma(shape) - shape * scale.ln() + scale + (shape + 1.0) * ((shape + 1.0) / E).ln();
    Ok(ScaleMixturePrior {
        family: PriorFamily::InverseGamma { shape, scale },
        tail_rate: 0.0,
        lower_tail: Some(LowerTailConstants::new(1.0, ln_c.exp(), 0.0, 1.0)?),
        rv_onset: 1.0,
        rv_ratio: None,
        sparsity,
    })
}

impl ScaleMixturePrior {
    /// Wrap an arbitrary log-density. `tail_rate` is the declared `b` of the
    /// decomposition `π = L e^{-bu}`; it is not inferred.
    pub fn custom<F>(
        name: impl Into<String>,
        log_density: F,
        tail_rate: f64,
        n: u64,
        p: f64,
    ) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(tail_rate.is_finite() && tail_rate >= 0.0) {
            return Err(Error::invalid(
                "tail_rate",
                format!("must be >= 0, got {tail_rate}"),
            ));
        }
        Ok(ScaleMixturePrior {
            family: PriorFamily::Custom {
                name: name.into(),
                log_density: Arc::new(log_density),
            },
            tail_rate,
            lower_tail: None,
            rv_onset: 1.0,
            rv_ratio: None,
            sparsity: Sparsity::new(n, p)?,
        })
    }

    pub fn with_rv_onset(mut self, u0: f64) -> Result<Self> {
        self.rv_onset = ensure_positive("rv_onset", u0)?;
        Ok(self)
    }

    pub fn with_rv_ratio(mut self, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 1.0) {
            return Err(Error::invalid(
                "rv_ratio",
                format!("must be >= 1, got {ratio}"),
            ));
        }
        self.rv_ratio = Some(ratio);
        Ok(self)
    }

    pub fn with_lower_tail(mut self, constants: LowerTailConstants) -> Self {
        self.lower_tail = Some(constants);
        self
    }

    pub fn with_sparsity(mut self, sparsity: Sparsity) -> Self {
        self.sparsity = sparsity;
        self
    }

    pub fn family(&self) -> &PriorFamily {
        &self.family
    }

    pub fn log_density(&self, u: f64) -> f64 {
        self.family.log_density(u)
    }

    pub fn density(&self, u: f64) -> f64 {
        self.log_density(u).exp()
    }

    /// `b`
    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    /// `log L(u) = log π(u) + b u`
    pub fn log_slowly_varying(&self, u: f64) -> f64 {
        self.log_density(u) + self.tail_rate * u
    }

    pub fn lower_tail(&self) -> Option<&LowerTailConstants> {
        self.lower_tail.as_ref()
    }

    /// `K`, when declared.
    pub fn lower_exponent(&self) -> Option<f64> {
        self.lower_tail.map(|c| c.exponent)
    }

    /// `u₀`
    pub fn rv_onset(&self) -> f64 {
        self.rv_onset
    }

    /// `R`, when declared.
    pub fn rv_ratio(&self) -> Option<f64> {
        self.rv_ratio
    }

    pub fn sparsity(&self) -> Sparsity {
        self.sparsity
    }

    /// `∫₀^∞ π(u) du`.
    pub fn normalization(&self) -> Result<f64> {
        let settings = QuadratureSettings {
            rel_tol: 1e-12,
            ..QuadratureSettings::default()
        };
        Ok(integrate_log_half_line(|u| self.log_density(u), &[], &settings)?.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horseshoe_density_at_one() {
        let prior = horseshoe_prior(1.0, 100, 10.0).unwrap();
        assert!((prior.density(1.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((prior.density(1.0) - 0.15915).abs() < 1e-5);
    }

    #[test]
    fn exponential_density_at_zero_limit() {
        let prior = exponential_prior(1.0, 100, 10.0).unwrap();
        assert!((prior.density(1e-300) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_gamma_density_at_one() {
        let prior = inverse_gamma_prior(1.0, 1.0, 100, 10.0).unwrap();
        assert!((prior.density(1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn builtins_are_normalized() {
        let priors = [
            horseshoe_prior(0.1, 100, 10.0).unwrap(),
            horseshoe_prior(1e-4, 10_000, 1.0).unwrap(),
            exponential_prior(1.0, 100, 10.0).unwrap(),
            exponential_prior(7.5, 100, 10.0).unwrap(),
            inverse_gamma_prior(1.0, 1.0, 100, 10.0).unwrap(),
            inverse_gamma_prior(0.5, 2.0, 100, 10.0).unwrap(),
        ];
        for prior in &priors {
            let z = prior.normalization().unwrap();
            assert!((z - 1.0).abs() < 1e-8, "{:?}: {z}", prior.family());
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(horseshoe_prior(0.0, 100, 10.0).is_err());
        assert!(horseshoe_prior(-1.0, 100, 10.0).is_err());
        assert!(exponential_prior(0.0, 100, 10.0).is_err());
        assert!(inverse_gamma_prior(1.0, -1.0, 100, 10.0).is_err());
        assert!(horseshoe_prior(0.1, 100, 100.0).is_err());
        assert!(horseshoe_prior(0.1, 100, 0.0).is_err());
    }

    #[test]
    fn sparsity_quantities() {
        let s = Sparsity::new(100, 10.0).unwrap();
        assert!((s.tau() - 0.1).abs() < 1e-15);
        assert!((s.s_n() - 0.1 * 10f64.ln()).abs() < 1e-15);
        assert!((s.s_n() - 0.23026).abs() < 1e-5);
        assert!(!s.is_degenerate());
        assert!(Sparsity::new(100, 40.0).unwrap().is_degenerate());
    }

    #[test]
    fn horseshoe_declares_k_only_when_tau_covers_sparsity() {
        assert_eq!(
            horseshoe_prior(0.01, 10_000, 100.0)
                .unwrap()
                .lower_exponent(),
            Some(1.0)
        );
        assert_eq!(
            horseshoe_prior(0.001, 10_000, 100.0)
                .unwrap()
                .lower_exponent(),
            None
        );
    }
}
