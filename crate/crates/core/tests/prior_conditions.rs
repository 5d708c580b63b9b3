mod common;

use common::{oracle_condition2, oracle_condition3, OraclePrior, NODES};
use proptest::prelude::*;
use shrinktest::prior::{
    check_condition1, check_condition2, check_condition3, exponential_prior, horseshoe_prior,
    inverse_gamma_prior, ConditionId, GridSpec, ScaleMixturePrior, Sparsity,
};
use shrinktest::Error;
use std::f64::consts::PI;

#[test]
fn condition2_horseshoe_matches_oracle() {
    for tau in [0.05, 0.01] {
        let cert = check_condition2(&horseshoe_prior(tau, 1000, 10.0).unwrap()).unwrap();
        let oracle = oracle_condition2(OraclePrior::Horseshoe { tau }, NODES);
        assert!(
            (cert.estimated_constant - oracle).abs() <= 1e-6,
            "tau={tau}"
        );
        assert!((oracle - 2.0 / PI * (1.0 / tau).atan()).abs() < 1e-9);
        assert!(cert.satisfied);
    }
}

#[test]
fn condition2_closed_forms() {
    let c = check_condition2(&exponential_prior(1.0, 1000, 10.0).unwrap()).unwrap();
    assert!((c.estimated_constant - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    let c = check_condition2(&horseshoe_prior(1.0, 1000, 10.0).unwrap()).unwrap();
    assert!((c.estimated_constant - 0.5).abs() < 1e-12);
}

#[test]
fn condition2_horseshoe_nondecreasing_as_tau_shrinks() {
    let mut last = 0.0;
    for tau in [1.0, 0.5, 0.1, 0.05, 0.01, 1e-3, 1e-4] {
        let c = check_condition2(&horseshoe_prior(tau, 100_000, 10.0).unwrap())
            .unwrap()
            .estimated_constant;
        assert!(c >= last - 1e-12 && c >= 0.5 - 1e-12, "tau={tau}: {c}");
        last = c;
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn condition3_exponential_matches_oracle() {
    let prior = exponential_prior(2.0, 1000, 10.0).unwrap();
    let cert = check_condition3(&prior).unwrap();
    let (i1, i2) = oracle_condition3(
        OraclePrior::Exponential { rate: 2.0 },
        1000.0,
        10.0,
        10 * NODES,
    );
    let s_n = Sparsity::new(1000, 10.0).unwrap().s_n();
    let oracle = (i1 + i2) / s_n;
    assert!(
        relative(cert.estimated_constant, oracle) < 1e-4,
        "{} vs {oracle}",
        cert.estimated_constant
    );
}

#[test]
fn s_n_example() {
    let s = Sparsity::new(100, 10.0).unwrap().s_n();
    assert!((s - 0.230_258_509_299_404_6).abs() < 1e-12);
}

#[test]
fn condition3_horseshoe_bounded_along_sqrt_sparsity() {
    for n in [1_000u64, 10_000, 100_000] {
        let p = (n as f64).sqrt();
        let prior = horseshoe_prior(p / n as f64, n, p).unwrap();
        let cert = check_condition3(&prior).unwrap();
        let (i1, i2) = oracle_condition3(
            OraclePrior::Horseshoe { tau: p / n as f64 },
            n as f64,
            p,
            10 * NODES,
        );
        let oracle = (i1 + i2) / prior.sparsity().s_n();
        assert!(
            relative(cert.estimated_constant, oracle) < 1e-4,
            "n={n}: {} vs {oracle}",
            cert.estimated_constant
        );
        assert!(cert.estimated_constant <= 10.0);
    }
}

#[test]
fn condition3_fixed_rate_exponential_is_large() {
    let cert = check_condition3(&exponential_prior(1.0, 10_000, 100.0).unwrap()).unwrap();
    let (i1, i2) = oracle_condition3(
        OraclePrior::Exponential { rate: 1.0 },
        1e4,
        100.0,
        10 * NODES,
    );
    let oracle = (i1 + i2) / Sparsity::new(10_000, 100.0).unwrap().s_n();
    assert!(relative(cert.estimated_constant, oracle) < 1e-4);
    assert!(cert.estimated_constant > 10.0);
}

#[test]
fn condition3_refuses_degenerate_sparsity() {
    let prior = horseshoe_prior(0.5, 100, 50.0).unwrap();
    assert!(matches!(
        check_condition3(&prior),
        Err(Error::DegenerateSparsity { .. })
    ));
}

#[test]
fn condition1_inverse_gamma_ratio_matches_analytic() {
    // L(au)/L(u) = a^{-(shape+1)} e^{scale (1 - 1/a)/u}; the reciprocal peaks at a = 2, u = u_max.
    let (shape, scale) = (2.0, 3.0);
    let grid = GridSpec::default();
    let prior = inverse_gamma_prior(shape, scale, 1000, 10.0).unwrap();
    let c1 = check_condition1(&prior, &grid).unwrap();
    let analytic = 2f64.powf(shape + 1.0) * (-scale / (2.0 * grid.u_max)).exp();
    assert!(relative(c1.rv.estimated_constant, analytic) < 0.05);
    assert!(c1.rv.satisfied);
}

#[test]
fn condition1_horseshoe_lower_tail_holds() {
    let prior = horseshoe_prior(0.01, 10_000, 100.0).unwrap();
    let c1 = check_condition1(&prior, &GridSpec::default()).unwrap();
    assert!(c1.lower.satisfied);
    assert_eq!(c1.lower.condition, ConditionId::C1Lower);
}

#[test]
fn condition1_super_exponential_tail_fails() {
    let prior = ScaleMixturePrior::custom(
        "gauss-tail",
        |u: f64| -u * u + (2.0 / PI.sqrt()).ln(),
        0.0,
        1000,
        10.0,
    )
    .unwrap();
    let c1 = check_condition1(&prior, &GridSpec::default()).unwrap();
    assert!(!c1.rv.satisfied);
    assert!(c1.rv.witness.is_some());
}

#[test]
fn certificates_serialize_with_expected_keys() {
    let cert = check_condition2(&exponential_prior(1.0, 1000, 10.0).unwrap()).unwrap();
    let v = serde_json::to_value(&cert).unwrap();
    assert_eq!(v["condition"], "C2");
    assert!(v["constant"].is_number());
    assert!(v["grid"].is_object());
    assert_eq!(v["satisfied"], true);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certified_ratio_brackets_grid_ratios(shape in 0.5f64..4.0, scale in 0.2f64..5.0) {
        let grid = GridSpec { u_points: 256, a_points: 16, ..GridSpec::default() };
        let prior = inverse_gamma_prior(shape, scale, 1000, 10.0).unwrap();
        let r = check_condition1(&prior, &grid).unwrap().rv.estimated_constant;
        let lnl = |u: f64| prior.log_slowly_varying(u);
        for i in 0..grid.u_points {
            let u = prior.rv_onset() * (grid.u_max / prior.rv_onset()).powf(i as f64 / (grid.u_points - 1) as f64);
            for j in 0..grid.a_points {
                let a = 1.0 + j as f64 / (grid.a_points - 1) as f64;
                let ratio = (lnl(a * u) - lnl(u)).exp();
                prop_assert!(ratio <= r * (1.0 + 1e-9) && ratio >= 1.0 / r * (1.0 - 1e-9));
            }
        }
    }
}
