//! Multiple-testing risks: the additive Bayes risk under the two-group model,
//! FDR / FNR under a fixed sparse signal, and the leading terms of the
//! theoretical upper bounds.
//!
//! Monte Carlo replicates run in parallel on counter-based streams keyed by
//! `(seed, replicate)`; per-replicate results are reduced in replicate order so
//! every estimate is bit-identical for any thread count.

use crate::error::{ensure_positive, ensure_unit_open, Error, Result};
use crate::prior::{CertifiedConstants, ScaleMixturePrior};
use crate::rng::{replicate_map, streams, StreamRng};
use crate::shrinkage::{lemma1_threshold, ShrinkageCurve};
use crate::stats::{central_mass, normal_cdf, two_sided_p_value, MeanSe};
use crate::testing::{RejectionRule, TwoGroupModel};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::f64::consts::PI;

/// Monte Carlo standard errors, one per estimated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RiskStandardErrors {
    pub type1: f64,
    pub type2: f64,
    pub bayes_risk: f64,
    pub fdr: f64,
    pub fnr: f64,
    pub rsup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskReport {
    /// Per-test probability of rejecting a null.
    pub type1: f64,
    /// Per-test probability of accepting a signal.
    pub type2: f64,
    /// Expected number of misclassified hypotheses.
    pub bayes_risk: f64,
    pub fdr: Option<f64>,
    pub fnr: Option<f64>,
    /// `FDR + FNR`.
    pub rsup: Option<f64>,
    pub se: RiskStandardErrors,
    pub n_replicates: usize,
}

/// A parameter vector with support `S₀` and nonzero values there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseSignal {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSignal {
    pub fn new(n: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::invalid(
                "values",
                "must have one value per support index",
            ));
        }
        if support.len() > n {
            return Err(Error::invalid("support", "larger than n"));
        }
        let mut seen = vec![false; n];
        for &i in &support {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(
                    "support",
                    format!("index {i} out of range or repeated"),
                ));
            }
        }
        if values.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(Error::invalid(
                "values",
                "signal values must be finite and nonzero",
            ));
        }
        Ok(SparseSignal { n, support, values })
    }

    /// `p` signals of common magnitude on the first `p` coordinates.
    pub fn flat(n: usize, p: usize, magnitude: f64) -> Result<Self> {
        Self::new(n, (0..p).collect(), vec![magnitude; p])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The full vector `θ`.
    pub fn theta(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.n];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            theta[i] = v;
        }
        theta
    }

    pub fn is_signal_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &i in &self.support {
            mask[i] = true;
        }
        mask
    }
}

/// Confusion counts for one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Tally {
    pub nulls: usize,
    pub false_rejections: usize,
    pub signals: usize,
    pub missed_signals: usize,
}

impl Tally {
    pub fn from_decisions(is_signal: &[bool], decisions: impl IntoIterator<Item = bool>) -> Self {
        let mut t = Tally::default();
        for (&signal, reject) in is_signal.iter().zip(decisions) {
            if signal {
                t.signals += 1;
                t.missed_signals += usize::from(!reject);
            } else {
                t.nulls += 1;
                t.false_rejections += usize::from(reject);
            }
        }
        t
    }

    pub fn rejections(&self) -> usize {
        self.false_rejections + self.signals - self.missed_signals
    }

    pub fn loss(&self) -> f64 {
        (self.false_rejections + self.missed_signals) as f64
    }

    pub fn type1(&self) -> f64 {
        ratio(self.false_rejections, self.nulls)
    }

    pub fn type2(&self) -> f64 {
        ratio(self.missed_signals, self.signals)
    }

    /// False discovery proportion with the `Σξ ∨ 1` convention.
    pub fn fdp(&self) -> f64 {
        self.false_rejections as f64 / self.rejections().max(1) as f64
    }

    /// False nondiscovery proportion, `Σ_{S₀}(1-ξ) / |S₀|`.
    pub fn fnp(&self) -> f64 {
        ratio(self.missed_signals, self.signals)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Average replicate tallies into a report.
pub fn summarize(tallies: &[Tally]) -> RiskReport {
    let col =
        |f: fn(&Tally) -> f64| MeanSe::from_samples(&tallies.iter().map(f).collect::<Vec<_>>());
    let type1 = col(Tally::type1);
    let type2 = col(Tally::type2);
    let loss = col(Tally::loss);
    let fdr = col(Tally::fdp);
    let fnr = col(Tally::fnp);
    let rsup = col(|t| t.fdp() + t.fnp());
    RiskReport {
        type1: type1.mean,
        type2: type2.mean,
        bayes_risk: loss.mean,
        fdr: Some(fdr.mean),
        fnr: Some(fnr.mean),
        rsup: Some(rsup.mean),
        se: RiskStandardErrors {
            type1: type1.se,
            type2: type2.se,
            bayes_risk: loss.se,
            fdr: fdr.se,
            fnr: fnr.se,
            rsup: rsup.se,
        },
        n_replicates: tallies.len(),
    }
}

/// Closed-form Bayes risk of the rule `|x| > x*` under the two-group model.
pub fn bayes_risk_analytic(model: &TwoGroupModel, x_star: f64) -> Result<RiskReport> {
    if !(x_star >= 0.0) {
        return Err(Error::invalid(
            "x_star",
            format!("must be >= 0, got {x_star}"),
        ));
    }
    let type1 = if x_star.is_infinite() {
        0.0
    } else {
        two_sided_p_value(x_star)
    };
    let type2 = if x_star.is_infinite() {
        1.0
    } else {
        central_mass(x_star / model.alternative_sd())
    };
    let p = model.p_n();
    Ok(RiskReport {
        type1,
        type2,
        bayes_risk: (model.n() as f64 - p) * type1 + p * type2,
        fdr: None,
        fnr: None,
        rsup: None,
        se: RiskStandardErrors::default(),
        n_replicates: 0,
    })
}

/// One data set drawn from the two-group marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDraw {
    pub data: Vec<f64>,
    pub is_signal: Vec<bool>,
}

pub fn draw_mixture(model: &TwoGroupModel, rng: &mut StreamRng) -> MixtureDraw {
    let n = model.n() as usize;
    let w = model.mixture_weight();
    let sd = model.alternative_sd();
    let mut data = Vec::with_capacity(n);
    let mut is_signal = Vec::with_capacity(n);
    for _ in 0..n {
        let signal = rng.random::<f64>() < w;
        let z: f64 = rng.sample(StandardNormal);
        data.push(if signal { sd * z } else { z });
        is_signal.push(signal);
    }
    MixtureDraw { data, is_signal }
}

/// Bayes risk of several `|x|`-rules evaluated on the same mixture draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedDrawRisk {
    pub reports: Vec<RiskReport>,
    tallies: Vec<Vec<Tally>>,
}

impl SharedDrawRisk {
    /// Mean and standard error of `loss[a] - loss[b]` across replicates.
    pub fn loss_difference(&self, a: usize, b: usize) -> MeanSe {
        let d: Vec<f64> = self
            .tallies
            .iter()
            .map(|t| t[a].loss() - t[b].loss())
            .collect();
        MeanSe::from_samples(&d)
    }

    /// Per-replicate tallies of rule `k`.
    pub fn tallies(&self, k: usize) -> Vec<Tally> {
        self.tallies.iter().map(|t| t[k]).collect()
    }
}

pub fn bayes_risk_mc_shared(
    model: &TwoGroupModel,
    rules: &[RejectionRule],
    replicates: usize,
    seed: u64,
) -> Result<SharedDrawRisk> {
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    let tallies: Vec<Vec<Tally>> = replicate_map(replicates, seed, streams::MIXTURE, |_, rng| {
        let draw = draw_mixture(model, rng);
        rules
            .iter()
            .map(|rule| {
                Tally::from_decisions(&draw.is_signal, draw.data.iter().map(|&x| rule.rejects(x)))
            })
            .collect()
    });
    let reports = (0..rules.len())
        .map(|k| summarize(&tallies.iter().map(|t| t[k]).collect::<Vec<_>>()))
        .collect();
    Ok(SharedDrawRisk { reports, tallies })
}

/// Monte Carlo Bayes risk of a single rule; each replicate is one data set of size `n`.
pub fn bayes_risk_mc(
    model: &TwoGroupModel,
    rule: RejectionRule,
    replicates: usize,
    seed: u64,
) -> Result<RiskReport> {
    Ok(bayes_risk_mc_shared(model, &[rule], replicates, seed)?.reports[0])
}

/// Leading term `p_n (2Φ(√C_ψ) - 1)` of the Bayes oracle risk.
pub fn oracle_risk(model: &TwoGroupModel) -> f64 {
    model.p_n() * central_mass(model.c_psi().sqrt())
}

fn check_constants(constants: &CertifiedConstants) -> Result<()> {
    ensure_positive("c", constants.c)?;
    if !(constants.big_c >= 0.0 && constants.big_c.is_finite()) {
        return Err(Error::invalid("C", "must be finite and nonnegative"));
    }
    Ok(())
}

/// `p_n (8√π C/(cα) + 2Φ(√(2K(u₀+1)C_ψ)) - 1)`.
pub fn theorem1_bound(
    constants: &CertifiedConstants,
    model: &TwoGroupModel,
    alpha: f64,
) -> Result<f64> {
    ensure_unit_open("alpha", alpha)?;
    check_constants(constants)?;
    let type1_term = 8.0 * PI.sqrt() * constants.big_c / (constants.c * alpha);
    let type2_term =
        central_mass((2.0 * constants.k * (constants.u0 + 1.0) * model.c_psi()).sqrt());
    Ok(model.p_n() * (type1_term + type2_term))
}

/// `ρ_n = C₁ + √(2K(u₀+1) log(n/p)) + v_n`.
pub fn separation_rate(prior: &ScaleMixturePrior, p: f64, c1: f64, v_n: f64) -> Result<f64> {
    if !(v_n >= 0.0) {
        return Err(Error::invalid("v_n", "must be nonnegative"));
    }
    Ok(lemma1_threshold(prior, p, c1)? + v_n)
}

/// `1/(1 + λαc/(8C√π)) + Φ(-v_n)`.
pub fn theorem2_bound(lambda: f64, alpha: f64, big_c: f64, c: f64, v_n: f64) -> Result<f64> {
    ensure_unit_open("lambda", lambda)?;
    ensure_unit_open("alpha", alpha)?;
    fdr_fnr_bound(lambda, alpha, big_c, c, v_n)
}

pub(crate) fn fdr_fnr_bound(lambda: f64, alpha: f64, big_c: f64, c: f64, v_n: f64) -> Result<f64> {
    ensure_positive("c", c)?;
    if !(big_c >= 0.0) {
        return Err(Error::invalid("C", "must be nonnegative"));
    }
    let fdr_term = if big_c == 0.0 {
        0.0
    } else {
        1.0 / (1.0 + lambda * alpha * c / (8.0 * big_c * PI.sqrt()))
    };
    Ok(fdr_term + normal_cdf(-v_n))
}

/// Monte Carlo FDR, FNR and `R^sup` of the thresholding rule at a fixed signal.
pub fn fdr_fnr_mc(
    curve: &ShrinkageCurve,
    signal: &SparseSignal,
    alpha: f64,
    replicates: usize,
    seed: u64,
) -> Result<RiskReport> {
    if signal.p() == 0 {
        return Err(Error::invalid("signal", "FNR is undefined without signals"));
    }
    let rule = RejectionRule::Above(curve.decision_threshold(alpha)?);
    fdr_fnr_mc_rule(signal, rule, replicates, seed)
}

/// [`fdr_fnr_mc`] for an arbitrary `|x|`-rule.
pub fn fdr_fnr_mc_rule(
    signal: &SparseSignal,
    rule: RejectionRule,
    replicates: usize,
    seed: u64,
) -> Result<RiskReport> {
    Ok(summarize(&fdr_fnr_mc_tallies(
        signal, rule, replicates, seed,
    )?))
}

/// Per-replicate tallies behind [`fdr_fnr_mc_rule`].
pub fn fdr_fnr_mc_tallies(
    signal: &SparseSignal,
    rule: RejectionRule,
    replicates: usize,
    seed: u64,
) -> Result<Vec<Tally>> {
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    if signal.p() == 0 {
        return Err(Error::invalid("signal", "FNR is undefined without signals"));
    }
    let theta = signal.theta();
    let mask = signal.is_signal_mask();
    Ok(replicate_map(replicates, seed, streams::NOISE, |_, rng| {
        Tally::from_decisions(
            &mask,
            theta.iter().map(|&t| {
                let z: f64 = rng.sample(StandardNormal);
                rule.rejects(t + z)
            }),
        )
    }))
}
