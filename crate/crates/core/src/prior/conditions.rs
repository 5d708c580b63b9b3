//! Numerical certificates for the prior conditions.
//!
//! Grid checks are evidence on a finite grid, not proofs of a statement for
//! all `u`; each certificate records the grid or quadrature it was computed on.

use super::{LowerTailConstants, ScaleMixturePrior};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_log_half_line, QuadratureSettings};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionId {
    /// `L = π e^{bu}` is uniformly regularly varying.
    #[serde(rename = "C1-rv")]
    C1Rv,
    /// `C' π(u) ≥ τ^K e^{-b'u}` on `u ≥ u*`.
    #[serde(rename = "C1-lower")]
    C1Lower,
    /// `∫₀¹ π ≥ c`.
    #[serde(rename = "C2")]
    C2,
    /// Tail integrals bounded by `C s_n`.
    #[serde(rename = "C3")]
    C3,
}

/// What a certificate was computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Grid {
        a_min: f64,
        a_max: f64,
        a_points: usize,
        u_min: f64,
        u_max: f64,
        u_points: usize,
        spacing: String,
    },
    Quadrature {
        method: String,
        rel_tol: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCertificate {
    pub condition: ConditionId,
    pub satisfied: bool,
    /// `R`, `C'`, `c` or `C` depending on the condition.
    #[serde(rename = "constant")]
    pub estimated_constant: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<String>,
    /// Lower-tail exponent `K`, when the checker had to estimate it.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub estimated_exponent: Option<f64>,
    pub grid: Evidence,
}

/// Grid for the Condition-1 checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub a_points: usize,
    pub u_points: usize,
    pub u_max: f64,
    /// Allowed relative growth of `sup |log L(au) - log L(u)|` from the lower
    /// to the upper half of the `u` grid before the ratio is deemed unbounded.
    pub growth_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            a_points: 17,
            u_points: 512,
            u_max: 1e4,
            growth_tol: 0.1,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.a_points < 16 {
            return Err(Error::invalid(
                "a_points",
                "need at least 16 points on [1, 2]",
            ));
        }
        if self.u_points < 256 {
            return Err(Error::invalid(
                "u_points",
                "need at least 256 geometric points",
            ));
        }
        if !(self.u_max >= 1e3 && self.u_max.is_finite()) {
            return Err(Error::invalid("u_max", "must be at least 1e3"));
        }
        if !(self.growth_tol >= 0.0) {
            return Err(Error::invalid("growth_tol", "must be nonnegative"));
        }
        Ok(())
    }

    fn a_grid(&self) -> Vec<f64> {
        let m = self.a_points - 1;
        (0..=m).map(|i| 1.0 + i as f64 / m as f64).collect()
    }

    fn u_grid(&self, u_min: f64) -> Vec<f64> {
        let m = self.u_points - 1;
        let ratio = (self.u_max / u_min).ln();
        (0..=m)
            .map(|i| {
                if i == m {
                    self.u_max
                } else {
                    u_min * (ratio * i as f64 / m as f64).exp()
                }
            })
            .collect()
    }

    fn evidence(&self, u_min: f64, a_points: usize) -> Evidence {
        Evidence::Grid {
            a_min: 1.0,
            a_max: 2.0,
            a_points,
            u_min,
            u_max: self.u_max,
            u_points: self.u_points,
            spacing: "geometric".into(),
        }
    }
}

/// Both halves of Condition 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition1Certificates {
    pub rv: ConditionCertificate,
    pub lower: ConditionCertificate,
}

fn finite_log_density(prior: &ScaleMixturePrior, u: f64, tilt: f64) -> Result<f64> {
    let v = prior.log_density(u) + tilt * u;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { at: u })
    }
}

pub fn check_condition1(
    prior: &ScaleMixturePrior,
    grid: &GridSpec,
) -> Result<Condition1Certificates> {
    grid.validate()?;
    Ok(Condition1Certificates {
        rv: check_regular_variation(prior, grid)?,
        lower: check_lower_tail(prior, grid)?,
    })
}

fn check_regular_variation(
    prior: &ScaleMixturePrior,
    grid: &GridSpec,
) -> Result<ConditionCertificate> {
    let u0 = prior.rv_onset();
    if u0 >= grid.u_max {
        return Err(Error::invalid("u_max", format!("must exceed u0 = {u0}")));
    }
    let b = prior.tail_rate();
    let a_grid = grid.a_grid();
    let u_grid = grid.u_grid(u0);
    let half = u_grid.len() / 2;

    let mut sup_lower = 0.0f64;
    let mut sup_upper = 0.0f64;
    let mut worst = (0.0f64, 1.0f64, u0);
    for (i, &u) in u_grid.iter().enumerate() {
        let log_l = finite_log_density(prior, u, b)?;
        for &a in &a_grid {
            let au = a * u;
            let d = (finite_log_density(prior, au, b)? - log_l).abs();
            if i < half {
                sup_lower = sup_lower.max(d);
            } else {
                sup_upper = sup_upper.max(d);
            }
            if d > worst.0 {
                worst = (d, a, u);
            }
        }
    }

    let log_r = sup_lower.max(sup_upper);
    let ratio = log_r.exp();
    let bounded = sup_upper <= (1.0 + grid.growth_tol) * sup_lower + grid.growth_tol;
    let satisfied = ratio.is_finite() && bounded;
    let witness = (!satisfied).then(|| {
        format!(
            "|log L(au) - log L(u)| = {:.6e} at a = {}, u = {:.6e}; sup over upper half of grid {:.6e} vs lower half {:.6e}",
            worst.0, worst.1, worst.2, sup_upper, sup_lower
        )
    });
    Ok(ConditionCertificate {
        condition: ConditionId::C1Rv,
        satisfied,
        estimated_constant: ratio,
        witness,
        estimated_exponent: None,
        grid: grid.evidence(u0, grid.a_points),
    })
}

fn check_lower_tail(prior: &ScaleMixturePrior, grid: &GridSpec) -> Result<ConditionCertificate> {
    let ln_tau = prior.sparsity().tau().ln();
    let (constants, declared) = match prior.lower_tail() {
        Some(c) => (*c, true),
        None => (LowerTailConstants::new(1.0, 1.0, 0.0, 1.0)?, false),
    };
    if constants.onset >= grid.u_max {
        return Err(Error::invalid(
            "u_max",
            format!("must exceed u* = {}", constants.onset),
        ));
    }
    let u_grid = grid.u_grid(constants.onset);
    let evidence = grid.evidence(constants.onset, 1);

    if declared {
        // Smallest C' that makes the inequality hold on the grid.
        let mut max_need = f64::NEG_INFINITY;
        let mut worst_u = constants.onset;
        for &u in &u_grid {
            let need = constants.exponent * ln_tau
                - constants.rate * u
                - finite_log_density(prior, u, 0.0)?;
            if need > max_need {
                max_need = need;
                worst_u = u;
            }
        }
        let ln_scale = constants.scale.ln();
        let satisfied = max_need <= ln_scale + 1e-12 * ln_scale.abs().max(1.0);
        let witness = (!satisfied).then(|| {
            format!(
                "C' pi(u) < tau^K e^(-b'u) at u = {worst_u:.6e}: needs C' >= {:.6e}, declared {:.6e}",
                max_need.exp(),
                constants.scale
            )
        });
        Ok(ConditionCertificate {
            condition: ConditionId::C1Lower,
            satisfied,
            estimated_constant: max_need.exp(),
            witness,
            estimated_exponent: None,
            grid: evidence,
        })
    } else {
        // K log τ ≤ g(u) for all u, with g = log C' + log π + b'u and log τ < 0.
        let mut min_g = f64::INFINITY;
        for &u in &u_grid {
            let g = constants.scale.ln() + finite_log_density(prior, u, 0.0)? + constants.rate * u;
            min_g = min_g.min(g);
        }
        let exponent = (min_g / ln_tau).max(0.0);
        let satisfied = exponent.is_finite();
        Ok(ConditionCertificate {
            condition: ConditionId::C1Lower,
            satisfied,
            estimated_constant: constants.scale,
            witness: (!satisfied)
                .then(|| "no finite K makes the bound hold on the grid".to_string()),
            estimated_exponent: Some(exponent),
            grid: evidence,
        })
    }
}

fn quad_evidence(settings: &QuadratureSettings) -> Evidence {
    Evidence::Quadrature {
        method: "adaptive Gauss-Kronrod 21, u = t^2 on (0,1], u = 1/s^2 on [1,inf)".into(),
        rel_tol: settings.rel_tol,
    }
}

/// `c = ∫₀¹ π(u) du`.
pub fn check_condition2(prior: &ScaleMixturePrior) -> Result<ConditionCertificate> {
    check_condition2_with(prior, &QuadratureSettings::default())
}

pub fn check_condition2_with(
    prior: &ScaleMixturePrior,
    settings: &QuadratureSettings,
) -> Result<ConditionCertificate> {
    let mass = integrate_log_half_line(
        |u| {
            if u <= 1.0 {
                prior.log_density(u)
            } else {
                f64::NEG_INFINITY
            }
        },
        &[1.0],
        settings,
    )?
    .value();
    if !mass.is_finite() {
        return Err(Error::NonFinite { at: 1.0 });
    }
    Ok(ConditionCertificate {
        condition: ConditionId::C2,
        satisfied: mass > 0.0,
        estimated_constant: mass,
        witness: (mass <= 0.0).then(|| "no prior mass on (0, 1]".to_string()),
        estimated_exponent: None,
        grid: quad_evidence(settings),
    })
}

/// The two integrals of Condition 3, `(I₁, I₂)`.
pub fn condition3_integrals(
    prior: &ScaleMixturePrior,
    settings: &QuadratureSettings,
) -> Result<(f64, f64)> {
    let sparsity = prior.sparsity();
    if sparsity.is_degenerate() {
        return Err(Error::DegenerateSparsity {
            n: sparsity.n(),
            p: sparsity.p(),
        });
    }
    let s_n = sparsity.s_n();
    let nu_sq = sparsity.log_ratio();
    let ln_nu3 = 1.5 * nu_sq.ln();

    let i1 = integrate_log_half_line(
        |u| {
            if u < s_n {
                f64::NEG_INFINITY
            } else {
                let ln_u = u.ln();
                prior.log_density(u) + ln_u.min(ln_nu3 - 0.5 * ln_u)
            }
        },
        &[s_n, nu_sq],
        settings,
    )?
    .value();
    let i2 = sparsity.nu()
        * integrate_log_half_line(
            |u| {
                if (1.0..=nu_sq).contains(&u) {
                    prior.log_density(u) - 0.5 * u.ln()
                } else {
                    f64::NEG_INFINITY
                }
            },
            &[1.0, nu_sq],
            settings,
        )?
        .value();
    Ok((i1, i2))
}

/// Reports the implied `C = (I₁ + I₂)/s_n`.
pub fn check_condition3(prior: &ScaleMixturePrior) -> Result<ConditionCertificate> {
    check_condition3_with(prior, &QuadratureSettings::default())
}

pub fn check_condition3_with(
    prior: &ScaleMixturePrior,
    settings: &QuadratureSettings,
) -> Result<ConditionCertificate> {
    let (i1, i2) = condition3_integrals(prior, settings)?;
    let constant = (i1 + i2) / prior.sparsity().s_n();
    if !constant.is_finite() {
        return Err(Error::NonFinite {
            at: prior.sparsity().s_n(),
        });
    }
    Ok(ConditionCertificate {
        condition: ConditionId::C3,
        satisfied: true,
        estimated_constant: constant,
        witness: None,
        estimated_exponent: None,
        grid: quad_evidence(settings),
    })
}

/// All four certificates for a prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorCertificates {
    pub c1_rv: ConditionCertificate,
    pub c1_lower: ConditionCertificate,
    pub c2: ConditionCertificate,
    pub c3: ConditionCertificate,
}

impl PriorCertificates {
    pub fn records(&self) -> [&ConditionCertificate; 4] {
        [&self.c1_rv, &self.c1_lower, &self.c2, &self.c3]
    }

    pub fn all_satisfied(&self) -> bool {
        self.records().iter().all(|c| c.satisfied)
    }
}

pub fn certify(prior: &ScaleMixturePrior, grid: &GridSpec) -> Result<PriorCertificates> {
    let c1 = check_condition1(prior, grid)?;
    Ok(PriorCertificates {
        c1_rv: c1.rv,
        c1_lower: c1.lower,
        c2: check_condition2(prior)?,
        c3: check_condition3(prior)?,
    })
}

/// The constants the risk bounds consume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedConstants {
    /// `c` from Condition 2.
    pub c: f64,
    /// `C` from Condition 3.
    pub big_c: f64,
    /// `K` from Condition 1.
    pub k: f64,
    /// `u₀` from Condition 1.
    pub u0: f64,
}

impl CertifiedConstants {
    pub fn from_certificates(prior: &ScaleMixturePrior, certs: &PriorCertificates) -> Result<Self> {
        let k = prior
            .lower_exponent()
            .or(certs.c1_lower.estimated_exponent)
            .ok_or(Error::MissingConstant("K"))?;
        Ok(CertifiedConstants {
            c: certs.c2.estimated_constant,
            big_c: certs.c3.estimated_constant,
            k,
            u0: prior.rv_onset(),
        })
    }

    /// Certify `prior` with the default grid and collect its constants.
    pub fn certify(prior: &ScaleMixturePrior) -> Result<Self> {
        let certs = certify(prior, &GridSpec::default())?;
        Self::from_certificates(prior, &certs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{exponential_prior, horseshoe_prior, inverse_gamma_prior};
    use std::f64::consts::PI;

    #[test]
    fn exponential_has_unit_ratio() {
        let prior = exponential_prior(1.0, 100, 10.0).unwrap();
        let c1 = check_condition1(&prior, &GridSpec::default()).unwrap();
        assert_eq!(c1.rv.estimated_constant, 1.0);
        assert!(c1.rv.satisfied);
        assert!(c1.lower.satisfied);
    }

    #[test]
    fn horseshoe_lower_bound_holds() {
        let prior = horseshoe_prior(0.01, 10_000, 100.0).unwrap();
        let c1 = check_condition1(&prior, &GridSpec::default()).unwrap();
        assert!(c1.rv.satisfied);
        assert!(c1.lower.satisfied, "{:?}", c1.lower);
        // Horseshoe L(au)/L(u) tends to a^{-3/2}.
        assert!((c1.rv.estimated_constant - 2f64.powf(1.5)).abs() < 1e-3);
    }

    #[test]
    fn super_exponential_tail_fails_with_witness() {
        let prior = ScaleMixturePrior::custom(
            "gauss_tail",
            |u: f64| (2.0 / PI.sqrt()).ln() - u * u,
            0.0,
            100,
            10.0,
        )
        .unwrap();
        let c1 = check_condition1(&prior, &GridSpec::default()).unwrap();
        assert!(!c1.rv.satisfied);
        assert!(c1.rv.witness.is_some());
    }

    #[test]
    fn misdeclared_exponential_tail_fails() {
        // e^{-u} declared with b = 0: L(2u)/L(u) = e^{-u} is unbounded.
        let prior = ScaleMixturePrior::custom("exp_b0", |u: f64| -u, 0.0, 100, 10.0).unwrap();
        let c1 = check_condition1(&prior, &GridSpec::default()).unwrap();
        assert!(!c1.rv.satisfied);
    }

    #[test]
    fn inverse_gamma_ratio() {
        let prior = inverse_gamma_prior(1.0, 1.0, 100, 10.0).unwrap();
        let c1 = check_condition1(&prior, &GridSpec::default()).unwrap();
        assert!(c1.rv.satisfied);
        // sup is 2^{shape+1} e^{-scale/(2 u_max)}, approached at the top of the grid.
        assert!((c1.rv.estimated_constant - 4.0 * (-0.5e-4f64).exp()).abs() < 1e-9);
        assert!(c1.lower.satisfied);
    }

    #[test]
    fn undeclared_lower_tail_estimates_k() {
        let prior = horseshoe_prior(0.001, 10_000, 100.0).unwrap();
        let c1 = check_condition1(&prior, &GridSpec::default()).unwrap();
        let k = c1.lower.estimated_exponent.unwrap();
        assert!(c1.lower.satisfied && k > 1.0 && k.is_finite());
    }

    #[test]
    fn condition2_closed_forms() {
        let prior = exponential_prior(1.0, 100, 10.0).unwrap();
        let c = check_condition2(&prior).unwrap().estimated_constant;
        assert!((c - (1.0 - (-1.0f64).exp())).abs() < 1e-10);
        assert!((c - 0.63212).abs() < 1e-5);

        let prior = horseshoe_prior(1.0, 100, 10.0).unwrap();
        let c = check_condition2(&prior).unwrap().estimated_constant;
        assert!((c - 0.5).abs() < 1e-10);
    }

    #[test]
    fn condition3_rejects_degenerate_sparsity() {
        let prior = horseshoe_prior(0.5, 100, 50.0).unwrap();
        assert!(matches!(
            check_condition3(&prior),
            Err(Error::DegenerateSparsity { .. })
        ));
    }

    #[test]
    fn grid_spec_validation() {
        let bad = GridSpec {
            a_points: 8,
            ..GridSpec::default()
        };
        assert!(bad.validate().is_err());
        let bad = GridSpec {
            u_max: 100.0,
            ..GridSpec::default()
        };
        assert!(bad.validate().is_err());
    }
}
