//! Empirical-Bayes plug-in: estimate the sparsity level from the data, build the
//! prior with `p = p̂`, then threshold as usual. Also Monte Carlo checks of the
//! conditions an estimator needs for the adaptive risk bounds.

use crate::error::{ensure_positive, ensure_unit_open, Error, Result};
use crate::prior::{CertifiedConstants, PriorSpec};
use crate::risk::{draw_mixture, fdr_fnr_bound, summarize, RiskReport, SparseSignal, Tally};
use crate::rng::{replicate_map, streams};
use crate::shrinkage::{lemma1_threshold_with, ShrinkageCurve};
use crate::stats::{central_mass, normal_cdf, wilson_interval};
use crate::testing::{DecisionVector, Procedure, RejectionRule, TwoGroupModel};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityEstimate {
    pub p_hat: f64,
    pub rule_id: String,
    pub threshold_used: f64,
}

pub trait SparsityEstimator: Send + Sync {
    fn rule_id(&self) -> &str;
    fn estimate(&self, data: &[f64]) -> Result<SparsityEstimate>;
}

/// `p̂ = #{i : |X_i| ≥ √(2 log n)} ∨ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimpleCount;

impl SparsityEstimator for SimpleCount {
    fn rule_id(&self) -> &str {
        "simple_count"
    }

    fn estimate(&self, data: &[f64]) -> Result<SparsityEstimate> {
        simple_count_estimator(data)
    }
}

pub fn simple_count_estimator(data: &[f64]) -> Result<SparsityEstimate> {
    let n = data.len();
    if n < 2 {
        return Err(Error::invalid("data", "need at least two observations"));
    }
    let t = (2.0 * (n as f64).ln()).sqrt();
    let count = data.iter().filter(|x| x.abs() >= t).count();
    Ok(SparsityEstimate {
        p_hat: count.max(1) as f64,
        rule_id: "simple_count".into(),
        threshold_used: t,
    })
}

/// Ignores the data and returns a fixed value, clamped to `[1, n]`.
#[derive(Debug, Clone, Copy)]
pub struct FixedEstimate(pub f64);

impl SparsityEstimator for FixedEstimate {
    fn rule_id(&self) -> &str {
        "fixed"
    }

    fn estimate(&self, data: &[f64]) -> Result<SparsityEstimate> {
        ensure_positive("p_hat", self.0)?;
        Ok(SparsityEstimate {
            p_hat: self.0.clamp(1.0, data.len().max(1) as f64),
            rule_id: "fixed".into(),
            threshold_used: f64::NAN,
        })
    }
}

/// Decision thresholds of the plug-in prior, cached by `p̂`.
pub struct PlugInThresholds {
    spec: PriorSpec,
    n: u64,
    alpha: f64,
    cache: Mutex<BTreeMap<u64, f64>>,
}

impl PlugInThresholds {
    pub fn new(spec: PriorSpec, n: u64, alpha: f64) -> Result<Self> {
        ensure_unit_open("alpha", alpha)?;
        Ok(PlugInThresholds {
            spec,
            n,
            alpha,
            cache: Mutex::new(BTreeMap::new()),
        })
    }

    /// The curve for the prior with sparsity `p̂`.
    pub fn curve(&self, p_hat: f64) -> Result<ShrinkageCurve> {
        if p_hat >= self.n as f64 {
            return Err(Error::DegenerateSparsity {
                n: self.n,
                p: p_hat,
            });
        }
        Ok(ShrinkageCurve::new(
            self.spec.with_sparsity(self.n, p_hat).build()?,
        ))
    }

    pub fn threshold(&self, p_hat: f64) -> Result<f64> {
        if let Some(x) = self.cache.lock().unwrap().get(&p_hat.to_bits()) {
            return Ok(*x);
        }
        let x = self.curve(p_hat)?.decision_threshold(self.alpha)?;
        self.cache.lock().unwrap().insert(p_hat.to_bits(), x);
        Ok(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveDecision {
    pub decisions: DecisionVector,
    pub estimate: SparsityEstimate,
    pub x_star: f64,
}

/// Estimate `p̂`, build the prior from `spec` with `p = p̂` (for the horseshoe
/// without an explicit `tau`, `τ = p̂/n`), and run the thresholding test.
pub fn adaptive_threshold_test(
    spec: &PriorSpec,
    estimator: &dyn SparsityEstimator,
    data: &[f64],
    alpha: f64,
) -> Result<AdaptiveDecision> {
    if let Some(i) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::invalid("data", format!("entry {i} is not finite")));
    }
    let estimate = estimator.estimate(data)?;
    let plug = PlugInThresholds::new(spec.clone(), data.len() as u64, alpha)?;
    let x_star = plug.threshold(estimate.p_hat)?;
    let rule = RejectionRule::Above(x_star);
    Ok(AdaptiveDecision {
        decisions: DecisionVector {
            decisions: data.iter().map(|&x| rule.rejects(x)).collect(),
            alpha,
            procedure: Procedure::Thresholding,
        },
        estimate,
        x_star,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveRiskReport {
    pub risk: RiskReport,
    /// `p̂` per replicate, in replicate order.
    pub p_hats: Vec<f64>,
    pub tallies: Vec<Tally>,
}

impl AdaptiveRiskReport {
    pub fn distinct_p_hats(&self) -> Vec<f64> {
        let mut v = self.p_hats.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Monte Carlo Bayes risk of the plug-in procedure under the two-group model.
pub fn adaptive_bayes_risk_mc(
    spec: &PriorSpec,
    estimator: &dyn SparsityEstimator,
    model: &TwoGroupModel,
    alpha: f64,
    replicates: usize,
    seed: u64,
) -> Result<AdaptiveRiskReport> {
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    let plug = PlugInThresholds::new(spec.clone(), model.n(), alpha)?;
    let results = replicate_map(
        replicates,
        seed,
        streams::MIXTURE,
        |_, rng| -> Result<(Tally, f64)> {
            let draw = draw_mixture(model, rng);
            let p_hat = estimator.estimate(&draw.data)?.p_hat;
            let rule = RejectionRule::Above(plug.threshold(p_hat)?);
            Ok((
                Tally::from_decisions(&draw.is_signal, draw.data.iter().map(|&x| rule.rejects(x))),
                p_hat,
            ))
        },
    );
    collect_adaptive(results)
}

/// Monte Carlo FDR / FNR of the plug-in procedure at a fixed signal.
pub fn adaptive_fdr_fnr_mc(
    spec: &PriorSpec,
    estimator: &dyn SparsityEstimator,
    signal: &SparseSignal,
    alpha: f64,
    replicates: usize,
    seed: u64,
) -> Result<AdaptiveRiskReport> {
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    if signal.p() == 0 {
        return Err(Error::invalid("signal", "FNR is undefined without signals"));
    }
    let plug = PlugInThresholds::new(spec.clone(), signal.n() as u64, alpha)?;
    let theta = signal.theta();
    let mask = signal.is_signal_mask();
    let results = replicate_map(
        replicates,
        seed,
        streams::NOISE,
        |_, rng| -> Result<(Tally, f64)> {
            let data: Vec<f64> = theta
                .iter()
                .map(|&t| t + rng.sample::<f64, _>(StandardNormal))
                .collect();
            let p_hat = estimator.estimate(&data)?.p_hat;
            let rule = RejectionRule::Above(plug.threshold(p_hat)?);
            Ok((
                Tally::from_decisions(&mask, data.iter().map(|&x| rule.rejects(x))),
                p_hat,
            ))
        },
    );
    collect_adaptive(results)
}

fn collect_adaptive(results: Vec<Result<(Tally, f64)>>) -> Result<AdaptiveRiskReport> {
    let mut tallies = Vec::with_capacity(results.len());
    let mut p_hats = Vec::with_capacity(results.len());
    for r in results {
        let (t, p) = r?;
        tallies.push(t);
        p_hats.push(p);
    }
    Ok(AdaptiveRiskReport {
        risk: summarize(&tallies),
        p_hats,
        tallies,
    })
}

/// Worst-case constants over the plug-in priors at each `p̂`: largest `C`,
/// smallest `c`, largest `K`.
pub fn plug_in_constants(spec: &PriorSpec, n: u64, p_hats: &[f64]) -> Result<CertifiedConstants> {
    let mut out: Option<CertifiedConstants> = None;
    for &p in p_hats {
        let k = CertifiedConstants::certify(&spec.with_sparsity(n, p).build()?)?;
        out = Some(match out {
            None => k,
            Some(o) => CertifiedConstants {
                c: o.c.min(k.c),
                big_c: o.big_c.max(k.big_c),
                k: o.k.max(k.k),
                u0: o.u0.max(k.u0),
            },
        });
    }
    out.ok_or(Error::invalid("p_hats", "need at least one value"))
}

/// Finite-sample surrogates for the asymptotic targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition4Params {
    pub c_u: f64,
    pub c_d: f64,
    pub big_c_d: f64,
    pub zeta: f64,
    /// `K` entering the lower bound.
    pub k: f64,
    /// Target for `P(p̂ ≤ C^u p_n)`; `None` means `1 - 10 p_n/n`.
    pub upper_target: Option<f64>,
    /// Target for the lower event.
    pub lower_target: f64,
    /// Normal quantile for the Wilson intervals.
    pub z: f64,
}

impl Default for Condition4Params {
    fn default() -> Self {
        Condition4Params {
            c_u: 2.0,
            c_d: 1.0,
            big_c_d: 2.0,
            zeta: 0.0,
            k: 1.0,
            upper_target: None,
            lower_target: 0.95,
            z: 1.96,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventFrequency {
    pub successes: usize,
    pub frequency: f64,
    pub interval: (f64, f64),
    pub target: f64,
    pub passed: bool,
}

impl EventFrequency {
    fn new(successes: usize, trials: usize, target: f64, z: f64) -> Self {
        let frequency = successes as f64 / trials as f64;
        EventFrequency {
            successes,
            frequency,
            interval: wilson_interval(successes, trials, z),
            target,
            passed: frequency >= target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition4Record {
    pub estimator: String,
    pub n: u64,
    pub p_n: f64,
    pub params: Condition4Params,
    pub replicates: usize,
    pub seed: u64,
    /// `c_d p_n (n/p_n)^{-ζ} e^{-C_d √(K log(n/p_n))}`.
    pub lower_bound: f64,
    pub upper: EventFrequency,
    pub lower: EventFrequency,
    pub passed: bool,
}

/// Empirical frequencies of the two estimator events under two-group draws.
pub fn verify_condition4(
    estimator: &dyn SparsityEstimator,
    model: &TwoGroupModel,
    params: &Condition4Params,
    replicates: usize,
    seed: u64,
) -> Result<Condition4Record> {
    if replicates < 100 {
        return Err(Error::invalid("replicates", "need at least 100"));
    }
    ensure_positive("c_u", params.c_u)?;
    ensure_positive("c_d", params.c_d)?;
    if !(params.big_c_d >= 0.0 && params.zeta >= 0.0 && params.k >= 0.0) {
        return Err(Error::invalid(
            "params",
            "C_d, zeta and K must be nonnegative",
        ));
    }
    let n = model.n();
    let p = model.p_n();
    let ratio = n as f64 / p;
    let lower_bound = params.c_d
        * p
        * ratio.powf(-params.zeta)
        * (-params.big_c_d * (params.k * ratio.ln()).sqrt()).exp();
    let upper_cap = params.c_u * p;

    let p_hats = replicate_map(replicates, seed, streams::SPARSITY, |_, rng| {
        estimator
            .estimate(&draw_mixture(model, rng).data)
            .map(|e| e.p_hat)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let upper_target = params.upper_target.unwrap_or(1.0 - 10.0 * p / n as f64);
    let upper = EventFrequency::new(
        p_hats.iter().filter(|&&x| x <= upper_cap).count(),
        replicates,
        upper_target,
        params.z,
    );
    let lower = EventFrequency::new(
        p_hats.iter().filter(|&&x| x >= lower_bound).count(),
        replicates,
        params.lower_target,
        params.z,
    );
    Ok(Condition4Record {
        estimator: estimator.rule_id().to_string(),
        n,
        p_n: p,
        params: *params,
        replicates,
        seed,
        lower_bound,
        passed: upper.passed && lower.passed,
        upper,
        lower,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition5Record {
    pub estimator: String,
    pub gamma_n: f64,
    pub c_u: f64,
    pub replicates: usize,
    pub seed: u64,
    pub event: EventFrequency,
}

/// Empirical `P_θ(γ_n ≤ p̂ ≤ C^u p_n)` at a fixed signal.
pub fn verify_condition5(
    estimator: &dyn SparsityEstimator,
    signal: &SparseSignal,
    gamma_n: f64,
    c_u: f64,
    target: f64,
    replicates: usize,
    seed: u64,
) -> Result<Condition5Record> {
    if replicates < 100 {
        return Err(Error::invalid("replicates", "need at least 100"));
    }
    ensure_positive("gamma_n", gamma_n)?;
    ensure_positive("c_u", c_u)?;
    let theta = signal.theta();
    let cap = c_u * signal.p() as f64;
    let hits = replicate_map(replicates, seed, streams::SPARSITY, |_, rng| {
        let data: Vec<f64> = theta
            .iter()
            .map(|&t| t + rng.sample::<f64, _>(StandardNormal))
            .collect();
        estimator
            .estimate(&data)
            .map(|e| e.p_hat >= gamma_n && e.p_hat <= cap)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Condition5Record {
        estimator: estimator.rule_id().to_string(),
        gamma_n,
        c_u,
        replicates,
        seed,
        event: EventFrequency::new(
            hits.iter().filter(|&&h| h).count(),
            replicates,
            target,
            1.96,
        ),
    })
}

/// `p_n (8√π C C^u/(cα) + 2Φ(√(2K(u₀+1)(1+ζ)C_ψ)) - 1)`.
pub fn theorem3_bound(
    constants: &CertifiedConstants,
    model: &TwoGroupModel,
    alpha: f64,
    c_u: f64,
    zeta: f64,
) -> Result<f64> {
    ensure_unit_open("alpha", alpha)?;
    ensure_positive("c", constants.c)?;
    ensure_positive("c_u", c_u)?;
    if !(constants.big_c >= 0.0 && zeta >= 0.0) {
        return Err(Error::invalid(
            "constants",
            "C and zeta must be nonnegative",
        ));
    }
    let type1_term = 8.0 * PI.sqrt() * constants.big_c * c_u / (constants.c * alpha);
    let type2_term = central_mass(
        (2.0 * constants.k * (constants.u0 + 1.0) * (1.0 + zeta) * model.c_psi()).sqrt(),
    );
    Ok(model.p_n() * (type1_term + type2_term))
}

/// `ρ_n = C₁ + √(2K(u₀+1) log(n/γ_n)) + v_n`.
pub fn theorem4_rho(k: f64, u0: f64, n: u64, gamma_n: f64, c1: f64, v_n: f64) -> Result<f64> {
    if !(v_n >= 0.0) {
        return Err(Error::invalid("v_n", "must be nonnegative"));
    }
    Ok(lemma1_threshold_with(k, u0, n, gamma_n, c1)? + v_n)
}

/// `1/(1 + λαc/(8 C^u C √π)) + Φ(-v_n)` for `0 < λ < Φ(v_n)`.
pub fn theorem4_bound(
    lambda: f64,
    alpha: f64,
    big_c: f64,
    c: f64,
    c_u: f64,
    v_n: f64,
) -> Result<f64> {
    ensure_unit_open("alpha", alpha)?;
    ensure_positive("c_u", c_u)?;
    if !(lambda > 0.0 && lambda < normal_cdf(v_n)) {
        return Err(Error::invalid(
            "lambda",
            format!("must lie in (0, Φ(v_n) = {})", normal_cdf(v_n)),
        ));
    }
    fdr_fnr_bound(lambda, alpha, c_u * big_c, c, v_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::horseshoe_prior;
    use crate::prior::FamilyName;
    use crate::risk::{separation_rate, theorem1_bound, theorem2_bound};

    fn horseshoe_spec() -> PriorSpec {
        PriorSpec {
            family: Some(FamilyName::Horseshoe),
            ..Default::default()
        }
    }

    #[test]
    fn simple_count_basics() {
        assert_eq!(simple_count_estimator(&[0.0; 100]).unwrap().p_hat, 1.0);
        let mut data = vec![0.0; 100];
        for x in data.iter_mut().take(7) {
            *x = 1e7;
        }
        let e = simple_count_estimator(&data).unwrap();
        assert_eq!(e.p_hat, 7.0);
        assert!((e.threshold_used - (2.0 * 100f64.ln()).sqrt()).abs() < 1e-15);
        assert!(simple_count_estimator(&[1.0]).is_err());
    }

    #[test]
    fn all_zero_data_accepts_everything() {
        let out =
            adaptive_threshold_test(&horseshoe_spec(), &SimpleCount, &[0.0; 200], 0.5).unwrap();
        assert_eq!(out.estimate.p_hat, 1.0);
        assert_eq!(out.decisions.rejections(), 0);
    }

    #[test]
    fn theorem3_reduces_to_theorem1() {
        let model = TwoGroupModel::from_c_psi(10_000, 100.0, 1.0).unwrap();
        let k = CertifiedConstants {
            c: 0.99,
            big_c: 0.5,
            k: 1.0,
            u0: 1.0,
        };
        let a = theorem3_bound(&k, &model, 0.5, 1.0, 0.0).unwrap();
        let b = theorem1_bound(&k, &model, 0.5).unwrap();
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn theorem4_reductions() {
        let prior = horseshoe_prior(0.01, 10_000, 100.0).unwrap();
        let rho2 = separation_rate(&prior, 100.0, 0.3, 3.0).unwrap();
        let rho4 = theorem4_rho(1.0, 1.0, 10_000, 100.0, 0.3, 3.0).unwrap();
        assert_eq!(rho2, rho4);
        let rho_one = theorem4_rho(1.0, 1.0, 10_000, 1.0, 0.0, 0.0).unwrap();
        assert!((rho_one - (4.0 * 10_000f64.ln()).sqrt()).abs() < 1e-12);

        let a = theorem4_bound(0.5, 0.5, 0.2, 0.9, 1.0, 3.0).unwrap();
        let b = theorem2_bound(0.5, 0.5, 0.2, 0.9, 3.0).unwrap();
        assert_eq!(a, b);
        assert!(theorem4_bound(0.6, 0.5, 0.2, 0.9, 1.0, 0.0).is_err());
    }

    #[test]
    fn condition4_trivial_estimators() {
        let model = TwoGroupModel::from_c_psi(1000, 10.0, 1.0).unwrap();
        let params = Condition4Params::default();
        let all = verify_condition4(&FixedEstimate(1000.0), &model, &params, 100, 3).unwrap();
        assert_eq!(all.lower.frequency, 1.0);
        assert_eq!(all.upper.frequency, 0.0);
        assert!(!all.passed);
        let one = verify_condition4(&FixedEstimate(1.0), &model, &params, 100, 3).unwrap();
        assert_eq!(one.upper.frequency, 1.0);
        assert_eq!(one.lower.passed, one.lower_bound <= 1.0);
        assert!(verify_condition4(&SimpleCount, &model, &params, 99, 3).is_err());
    }
}
