//! Multiple testing procedures: the shrinkage thresholding rule and two
//! reference procedures (the two-group Bayes oracle and Benjamini–Hochberg).

use crate::error::{ensure_positive, ensure_unit_open, Error, Result};
use crate::shrinkage::ShrinkageCurve;
use crate::stats::two_sided_p_value;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    Thresholding,
    BayesOracle,
    BenjaminiHochberg,
}

/// Per-hypothesis decisions (`true` rejects `θ_i = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub decisions: Vec<bool>,
    /// Level used: `α` for thresholding, `q` for BH, `1/2` for the oracle.
    pub alpha: f64,
    pub procedure: Procedure,
}

impl DecisionVector {
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn rejections(&self) -> usize {
        self.decisions.iter().filter(|&&d| d).count()
    }

    /// Indices of rejected hypotheses.
    pub fn support(&self) -> Vec<usize> {
        self.decisions
            .iter()
            .enumerate()
            .filter_map(|(i, &d)| d.then_some(i))
            .collect()
    }
}

/// A rule that rejects according to `|x|` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RejectionRule {
    /// Reject when `|x| > t`.
    Above(f64),
    /// Reject when `|x| ≥ t`.
    AtLeast(f64),
}

impl RejectionRule {
    #[inline]
    pub fn rejects(&self, x: f64) -> bool {
        match *self {
            RejectionRule::Above(t) => x.abs() > t,
            RejectionRule::AtLeast(t) => x.abs() >= t,
        }
    }

    pub fn threshold(&self) -> f64 {
        match *self {
            RejectionRule::Above(t) | RejectionRule::AtLeast(t) => t,
        }
    }
}

fn ensure_finite_data(data: &[f64]) -> Result<()> {
    match data.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::invalid("data", format!("entry {i} is not finite"))),
        None => Ok(()),
    }
}

/// `ξ_i = 1{m_{X_i} > α}`, evaluated as `|X_i| > x*(α)`.
pub fn threshold_test(curve: &ShrinkageCurve, data: &[f64], alpha: f64) -> Result<DecisionVector> {
    ensure_finite_data(data)?;
    let rule = RejectionRule::Above(curve.decision_threshold(alpha)?);
    Ok(DecisionVector {
        decisions: data.iter().map(|&x| rule.rejects(x)).collect(),
        alpha,
        procedure: Procedure::Thresholding,
    })
}

/// The Bayes-risk reference distribution
/// `(1 - p_n/n) N(0,1) + (p_n/n) N(0, 1 + ψ²)` for the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoGroupModel {
    n: u64,
    p_n: f64,
    psi_sq: f64,
    c_psi: f64,
}

impl TwoGroupModel {
    /// `ψ² = log(n/p_n) / C_ψ`.
    pub fn from_c_psi(n: u64, p_n: f64, c_psi: f64) -> Result<Self> {
        Self::check_sparsity(n, p_n)?;
        ensure_positive("c_psi", c_psi)?;
        let psi_sq = (n as f64 / p_n).ln() / c_psi;
        Ok(TwoGroupModel {
            n,
            p_n,
            psi_sq,
            c_psi,
        })
    }

    /// Explicit alternative variance; `C_ψ` is set to `log(n/p_n)/ψ²`.
    pub fn with_psi_sq(n: u64, p_n: f64, psi_sq: f64) -> Result<Self> {
        Self::check_sparsity(n, p_n)?;
        ensure_positive("psi_sq", psi_sq)?;
        let c_psi = (n as f64 / p_n).ln() / psi_sq;
        Ok(TwoGroupModel {
            n,
            p_n,
            psi_sq,
            c_psi,
        })
    }

    fn check_sparsity(n: u64, p_n: f64) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        if !(p_n > 0.0 && p_n < n as f64) {
            return Err(Error::invalid(
                "p_n",
                format!("must lie in (0, n = {n}), got {p_n}"),
            ));
        }
        Ok(())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p_n(&self) -> f64 {
        self.p_n
    }

    pub fn psi_sq(&self) -> f64 {
        self.psi_sq
    }

    pub fn c_psi(&self) -> f64 {
        self.c_psi
    }

    /// `p_n / n`.
    pub fn mixture_weight(&self) -> f64 {
        self.p_n / self.n as f64
    }

    /// Standard deviation of the data under the alternative, `√(1 + ψ²)`.
    pub fn alternative_sd(&self) -> f64 {
        (1.0 + self.psi_sq).sqrt()
    }

    /// `c² = ((1+ψ²)/ψ²) (log(1+ψ²) + 2 log((n-p_n)/p_n))`, possibly negative.
    pub fn oracle_threshold_sq(&self) -> f64 {
        let odds = (self.n as f64 - self.p_n) / self.p_n;
        (1.0 + self.psi_sq) / self.psi_sq * (self.psi_sq.ln_1p() + 2.0 * odds.ln())
    }

    /// The oracle as a rule on `|x|`: reject when `x² ≥ c²`.
    pub fn oracle_rule(&self) -> RejectionRule {
        RejectionRule::AtLeast(self.oracle_threshold_sq().max(0.0).sqrt())
    }
}

/// Reject when the two-group posterior probability of the alternative is at least 1/2.
pub fn bayes_oracle_test(model: &TwoGroupModel, data: &[f64]) -> Result<DecisionVector> {
    ensure_finite_data(data)?;
    let rule = model.oracle_rule();
    Ok(DecisionVector {
        decisions: data.iter().map(|&x| rule.rejects(x)).collect(),
        alpha: 0.5,
        procedure: Procedure::BayesOracle,
    })
}

/// Benjamini–Hochberg step-up on two-sided p-values `2Φ(-|X_i|)`.
pub fn benjamini_hochberg(data: &[f64], q: f64) -> Result<DecisionVector> {
    ensure_unit_open("q", q)?;
    ensure_finite_data(data)?;
    let n = data.len();
    let pvalues: Vec<f64> = data.iter().map(|&x| two_sided_p_value(x)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: ties keep index order.
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));

    let cutoff = order
        .iter()
        .enumerate()
        .rev()
        .find(|&(rank, &i)| pvalues[i] <= (rank + 1) as f64 * q / n as f64)
        .map(|(rank, _)| rank + 1)
        .unwrap_or(0);

    let mut decisions = vec![false; n];
    for &i in &order[..cutoff] {
        decisions[i] = true;
    }
    Ok(DecisionVector {
        decisions,
        alpha: q,
        procedure: Procedure::BenjaminiHochberg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::horseshoe_prior;

    #[test]
    fn zero_data_accepts_everything() {
        let curve = ShrinkageCurve::new(horseshoe_prior(0.01, 1000, 10.0).unwrap());
        let dv = threshold_test(&curve, &[0.0; 50], 0.5).unwrap();
        assert_eq!(dv.rejections(), 0);
        assert_eq!(dv.len(), 50);
    }

    #[test]
    fn huge_entry_is_rejected() {
        let curve = ShrinkageCurve::new(horseshoe_prior(0.01, 1000, 10.0).unwrap());
        let mut data = vec![0.0; 10];
        data[3] = 1e6;
        let dv = threshold_test(&curve, &data, 0.5).unwrap();
        assert_eq!(dv.support(), vec![3]);
    }

    #[test]
    fn non_finite_data_is_invalid() {
        let curve = ShrinkageCurve::new(horseshoe_prior(0.01, 1000, 10.0).unwrap());
        assert!(threshold_test(&curve, &[0.0, f64::INFINITY], 0.5).is_err());
    }

    #[test]
    fn oracle_threshold_balances_posterior_odds() {
        for psi_sq in [0.5, 1.0, 5.0, 50.0, 500.0] {
            let m = TwoGroupModel::with_psi_sq(200, 10.0, psi_sq).unwrap();
            let c2 = m.oracle_threshold_sq();
            let sd = m.alternative_sd();
            let log_odds = (10.0f64 / 190.0).ln() - sd.ln() - c2 / (2.0 * sd * sd) + c2 / 2.0;
            assert!(log_odds.abs() < 1e-12, "psi_sq={psi_sq}: {log_odds}");
        }
        assert!(TwoGroupModel::with_psi_sq(200, 10.0, 0.0).is_err());
    }

    #[test]
    fn oracle_accepts_all_when_log_term_negative() {
        let model = TwoGroupModel::with_psi_sq(100, 80.0, 0.1).unwrap();
        assert!(model.oracle_threshold_sq() < 0.0);
        let dv = bayes_oracle_test(&model, &[0.0, 1.0]).unwrap();
        assert_eq!(dv.rejections(), 2);
    }

    #[test]
    fn bh_trivial_cases() {
        assert_eq!(
            benjamini_hochberg(&[0.0; 100], 0.1).unwrap().rejections(),
            0
        );
        let mut data = vec![0.0; 100];
        data[17] = 50.0;
        let dv = benjamini_hochberg(&data, 0.1).unwrap();
        assert_eq!(dv.support(), vec![17]);
        assert!(benjamini_hochberg(&data, 1.5).is_err());
    }
}
