//! Posterior shrinkage weight `m_x = E(κ | X = x)` and its decision threshold.
//!
//! With `q = x²/2`,
//!
//! ```text
//! m_x = ∫ u (1+u)^{-3/2} e^{q u/(1+u)} π(u) du / ∫ (1+u)^{-1/2} e^{q u/(1+u)} π(u) du.
//! ```
//!
//! Writing `e^{q u/(1+u)} = e^{q} e^{-q/(1+u)}` and dropping the common `e^{q}`
//! leaves integrands bounded by `π`, which are integrated in log space.

use crate::error::{ensure_unit_open, Error, Result};
use crate::prior::ScaleMixturePrior;
use crate::quadrature::{integrate_log_half_line, QuadratureSettings};
use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

/// Default level of the thresholding rule.
pub const DEFAULT_ALPHA: f64 = 0.5;

const MONOTONE_SCAN_POINTS: usize = 64;
const MONOTONE_TOL: f64 = 1e-12;
const ROUND_TRIP_TOL: f64 = 1e-10;
const BRACKET_TOL: f64 = 1e-12;

/// Evaluator of `m_x` for a fixed prior, caching decision thresholds.
#[derive(Debug)]
pub struct ShrinkageCurve {
    prior: ScaleMixturePrior,
    quad: QuadratureSettings,
    thresholds: Mutex<BTreeMap<u64, f64>>,
    monotone_upto: Mutex<f64>,
    m_zero: OnceLock<f64>,
}

impl Clone for ShrinkageCurve {
    fn clone(&self) -> Self {
        ShrinkageCurve {
            prior: self.prior.clone(),
            quad: self.quad,
            thresholds: Mutex::new(self.thresholds.lock().unwrap().clone()),
            monotone_upto: Mutex::new(*self.monotone_upto.lock().unwrap()),
            m_zero: self.m_zero.clone(),
        }
    }
}

impl ShrinkageCurve {
    pub fn new(prior: ScaleMixturePrior) -> Self {
        Self::with_settings(prior, QuadratureSettings::default())
    }

    pub fn with_settings(prior: ScaleMixturePrior, quad: QuadratureSettings) -> Self {
        ShrinkageCurve {
            prior,
            quad,
            thresholds: Mutex::new(BTreeMap::new()),
            monotone_upto: Mutex::new(0.0),
            m_zero: OnceLock::new(),
        }
    }

    pub fn prior(&self) -> &ScaleMixturePrior {
        &self.prior
    }

    pub fn quad_settings(&self) -> &QuadratureSettings {
        &self.quad
    }

    /// `m_x`, a number in `[0, 1]`.
    pub fn shrinkage_weight(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::invalid("x", format!("must be finite, got {x}")));
        }
        let q = 0.5 * x * x;
        let prior = &self.prior;
        let ln_den = move |u: f64| prior.log_density(u) - 0.5 * u.ln_1p() - q / (1.0 + u);
        // ln(u/(1+u)), accurate at both ends.
        let ln_kappa = |u: f64| {
            if u < 1.0 {
                u.ln() - u.ln_1p()
            } else {
                -(1.0 / u).ln_1p()
            }
        };
        let mut breaks = vec![];
        if q > 0.0 {
            breaks.extend([0.1 * q, q, 10.0 * q]);
        }
        let den = integrate_log_half_line(ln_den, &breaks, &self.quad)?;
        let num = integrate_log_half_line(|u| ln_den(u) + ln_kappa(u), &breaks, &self.quad)?;
        if den.ln_value == f64::NEG_INFINITY {
            return Err(Error::NonFinite { at: 0.0 });
        }
        Ok((num.ln_value - den.ln_value).exp().clamp(0.0, 1.0))
    }

    /// Posterior mean `θ̂ = m_x · x`.
    pub fn posterior_mean(&self, x: f64) -> Result<f64> {
        Ok(self.shrinkage_weight(x)? * x)
    }

    fn m_zero(&self) -> Result<f64> {
        if let Some(m) = self.m_zero.get() {
            return Ok(*m);
        }
        let m = self.shrinkage_weight(0.0)?;
        Ok(*self.m_zero.get_or_init(|| m))
    }

    /// Initial bisection cap `√(2 log(1/τ_n)) + 20`.
    pub fn search_cap(&self) -> f64 {
        (2.0 * (1.0 / self.prior.sparsity().tau()).ln()).sqrt() + 20.0
    }

    /// Verify on a grid that `m` is nondecreasing on `[0, upto]`.
    fn ensure_monotone(&self, upto: f64) -> Result<()> {
        let mut checked = self.monotone_upto.lock().unwrap();
        if *checked >= upto {
            return Ok(());
        }
        let start = *checked;
        let step = (upto - start) / MONOTONE_SCAN_POINTS as f64;
        let mut x_prev = start;
        let mut m_prev = self.shrinkage_weight(start)?;
        for i in 1..=MONOTONE_SCAN_POINTS {
            let x = if i == MONOTONE_SCAN_POINTS {
                upto
            } else {
                start + step * i as f64
            };
            let m = self.shrinkage_weight(x)?;
            if m < m_prev - MONOTONE_TOL {
                return Err(Error::NonMonotone {
                    x_lo: x_prev,
                    m_lo: m_prev,
                    x_hi: x,
                    m_hi: m,
                });
            }
            x_prev = x;
            m_prev = m;
        }
        *checked = upto;
        Ok(())
    }

    /// The crossing point `x*(α) ≥ 0` with `m_{x*} = α`.
    pub fn decision_threshold(&self, alpha: f64) -> Result<f64> {
        ensure_unit_open("alpha", alpha)?;
        if let Some(x) = self.thresholds.lock().unwrap().get(&alpha.to_bits()) {
            return Ok(*x);
        }

        let m0 = self.m_zero()?;
        if m0 >= alpha {
            return Err(Error::AlwaysReject { m0, alpha });
        }
        let mut cap = self.search_cap();
        self.ensure_monotone(cap)?;
        let mut m_cap = self.shrinkage_weight(cap)?;
        if m_cap <= alpha {
            cap *= 2.0;
            self.ensure_monotone(cap)?;
            m_cap = self.shrinkage_weight(cap)?;
            if m_cap <= alpha {
                return Err(Error::NoCrossing {
                    alpha,
                    x_cap: cap,
                    m_cap,
                });
            }
        }

        let (mut lo, mut hi) = (0.0, cap);
        let mut x_star = 0.5 * (lo + hi);
        while hi - lo > BRACKET_TOL {
            x_star = 0.5 * (lo + hi);
            let m = self.shrinkage_weight(x_star)?;
            if (m - alpha).abs() <= ROUND_TRIP_TOL {
                break;
            }
            if m < alpha {
                lo = x_star;
            } else {
                hi = x_star;
            }
        }
        self.thresholds
            .lock()
            .unwrap()
            .insert(alpha.to_bits(), x_star);
        Ok(x_star)
    }
}

/// `T = C₁ + √(2K(1+u₀) log(n/p))`, above which `m_x ≥ α`.
pub fn lemma1_threshold(prior: &ScaleMixturePrior, p: f64, c1: f64) -> Result<f64> {
    let k = prior.lower_exponent().ok_or(Error::MissingConstant("K"))?;
    lemma1_threshold_with(k, prior.rv_onset(), prior.sparsity().n(), p, c1)
}

/// [`lemma1_threshold`] with the constants given explicitly.
pub fn lemma1_threshold_with(k: f64, u0: f64, n: u64, p: f64, c1: f64) -> Result<f64> {
    if !(p > 0.0 && p < n as f64) {
        return Err(Error::invalid(
            "p",
            format!("must lie in (0, n = {n}), got {p}"),
        ));
    }
    if !(c1 >= 0.0) {
        return Err(Error::invalid("c1", "must be nonnegative"));
    }
    Ok(c1 + (2.0 * k * (1.0 + u0) * (n as f64 / p).ln()).sqrt())
}

/// Smallest `C₁` on a grid of step `step` such that `m_x ≥ α` for every grid
/// point `x ≥ T(C₁)` up to `x_max`.
pub fn calibrate_c1(
    curve: &ShrinkageCurve,
    alpha: f64,
    k: f64,
    step: f64,
    x_max: f64,
) -> Result<f64> {
    ensure_unit_open("alpha", alpha)?;
    let sparsity = curve.prior().sparsity();
    let base = lemma1_threshold_with(k, curve.prior().rv_onset(), sparsity.n(), sparsity.p(), 0.0)?;
    if !(step > 0.0) {
        return Err(Error::invalid("step", "must be positive"));
    }
    let points = ((x_max / step).ceil() as usize).max(1);
    let xs: Vec<f64> = (0..=points).map(|i| i as f64 * step).collect();
    let ms = xs
        .iter()
        .map(|&x| curve.shrinkage_weight(x))
        .collect::<Result<Vec<_>>>()?;
    // First grid index from which m stays at or above alpha.
    let mut first_ok = xs.len();
    for i in (0..xs.len()).rev() {
        if ms[i] >= alpha {
            first_ok = i;
        } else {
            break;
        }
    }
    if first_ok == xs.len() {
        return Err(Error::NoCrossing {
            alpha,
            x_cap: x_max,
            m_cap: *ms.last().unwrap(),
        });
    }
    let needed = xs[first_ok] - base;
    Ok(if needed <= 0.0 {
        0.0
    } else {
        (needed / step).ceil() * step
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{exponential_prior, horseshoe_prior};

    fn hs(tau: f64) -> ShrinkageCurve {
        ShrinkageCurve::new(horseshoe_prior(tau, 10_000, 100.0).unwrap())
    }

    #[test]
    fn symmetric_and_bounded() {
        let curve = hs(0.05);
        for &x in &[0.0, 0.3, 1.7, 4.0, 12.0] {
            let a = curve.shrinkage_weight(x).unwrap();
            let b = curve.shrinkage_weight(-x).unwrap();
            assert_eq!(a, b);
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn posterior_mean_is_odd_and_contracts() {
        let curve = hs(0.05);
        assert_eq!(curve.posterior_mean(0.0).unwrap(), 0.0);
        for &x in &[0.5, 3.0, 8.0] {
            let pm = curve.posterior_mean(x).unwrap();
            assert_eq!(pm, -curve.posterior_mean(-x).unwrap());
            assert!(pm.abs() <= x.abs() && pm >= 0.0);
        }
        assert!((curve.posterior_mean(8.0).unwrap() - 8.0).abs() <= 1.0);
    }

    #[test]
    fn large_x_is_finite() {
        let m = hs(0.05).shrinkage_weight(300.0).unwrap();
        assert!(m > 0.999 && m <= 1.0);
        let m = ShrinkageCurve::new(exponential_prior(2.0, 100, 10.0).unwrap())
            .shrinkage_weight(300.0)
            .unwrap();
        assert!(m > 0.9 && m <= 1.0, "{m}");
    }

    #[test]
    fn rejects_non_finite_input() {
        assert!(hs(0.05).shrinkage_weight(f64::NAN).is_err());
        assert!(hs(0.05).decision_threshold(1.0).is_err());
    }

    #[test]
    fn threshold_round_trips_and_is_cached() {
        let curve = hs(0.01);
        let x = curve.decision_threshold(0.5).unwrap();
        assert!((curve.shrinkage_weight(x).unwrap() - 0.5).abs() <= 1e-9);
        assert_eq!(curve.decision_threshold(0.5).unwrap(), x);
        let x_lo = curve.decision_threshold(0.25).unwrap();
        assert!(x_lo <= x);
    }

    #[test]
    fn always_reject_when_m0_too_large() {
        let curve = ShrinkageCurve::new(exponential_prior(0.01, 100, 10.0).unwrap());
        let m0 = curve.shrinkage_weight(0.0).unwrap();
        assert!(m0 > 0.5);
        assert!(matches!(
            curve.decision_threshold(0.5),
            Err(Error::AlwaysReject { .. })
        ));
    }

    #[test]
    fn lemma1_formula() {
        let t = lemma1_threshold_with(1.0, 1.0, 10_000, 100.0, 0.0).unwrap();
        assert!((t - (4.0 * 100f64.ln()).sqrt()).abs() < 1e-12);
        assert!((t - 4.2919).abs() < 1e-4);
        assert_eq!(
            lemma1_threshold_with(0.0, 1.0, 10_000, 100.0, 1.5).unwrap(),
            1.5
        );
        assert!(lemma1_threshold_with(1.0, 1.0, 100, 100.0, 0.0).is_err());
    }
}
