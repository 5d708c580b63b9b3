use proptest::prelude::*;
use shrinktest::prior::{
    exponential_prior, horseshoe_prior, inverse_gamma_prior, ScaleMixturePrior,
};
use shrinktest::shrinkage::ShrinkageCurve;
use shrinktest::Error;
use std::sync::OnceLock;

fn curves() -> &'static [ShrinkageCurve] {
    static CURVES: OnceLock<Vec<ShrinkageCurve>> = OnceLock::new();
    CURVES.get_or_init(|| {
        let priors: Vec<ScaleMixturePrior> = vec![
            horseshoe_prior(0.05, 1000, 10.0).unwrap(),
            horseshoe_prior(0.01, 1000, 10.0).unwrap(),
            exponential_prior(1.0, 1000, 10.0).unwrap(),
            inverse_gamma_prior(1.0, 1.0, 1000, 10.0).unwrap(),
        ];
        priors.into_iter().map(ShrinkageCurve::new).collect()
    })
}

#[test]
fn monotone_on_fine_grid() {
    for curve in curves() {
        let mut last = -1.0;
        for i in 0..1000 {
            let m = curve.shrinkage_weight(i as f64 * 0.02).unwrap();
            assert!((0.0..=1.0).contains(&m));
            assert!(
                m >= last - 1e-12,
                "{:?} x={}",
                curve.prior().family(),
                i as f64 * 0.02
            );
            last = m;
        }
    }
}

#[test]
fn saturates_at_fifty_for_tiny_tau() {
    for tau in [1.0, 0.1, 1e-2, 1e-4, 1e-6] {
        let curve = ShrinkageCurve::new(horseshoe_prior(tau, 10_000_000, 10.0).unwrap());
        assert!(curve.shrinkage_weight(50.0).unwrap() >= 0.999, "tau={tau}");
    }
}

#[test]
fn threshold_round_trips() {
    let curve = &curves()[1];
    let mut last = 0.0;
    for alpha in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let x = curve.decision_threshold(alpha).unwrap();
        assert!((curve.shrinkage_weight(x).unwrap() - alpha).abs() <= 1e-9);
        assert!(x >= last);
        last = x;
    }
}

#[test]
fn always_reject_when_m0_exceeds_alpha() {
    // Inverse gamma (1, 1) has m_0 > 1/2.
    let curve = &curves()[3];
    assert!(matches!(
        curve.decision_threshold(0.5),
        Err(Error::AlwaysReject { .. })
    ));
}

#[test]
fn threshold_separates_decisions() {
    let curve = &curves()[0];
    let x = curve.decision_threshold(0.5).unwrap();
    assert!(curve.shrinkage_weight(x - 1e-3).unwrap() < 0.5);
    assert!(curve.shrinkage_weight(x + 1e-3).unwrap() > 0.5);
}

#[test]
fn concurrent_evaluation_is_deterministic() {
    let curve = ShrinkageCurve::new(horseshoe_prior(0.02, 1000, 20.0).unwrap());
    let xs: Vec<f64> = (0..64).map(|i| i as f64 * 0.25).collect();
    let serial: Vec<f64> = xs
        .iter()
        .map(|&x| curve.shrinkage_weight(x).unwrap())
        .collect();
    let parallel: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = xs
            .iter()
            .map(|&x| {
                let curve = &curve;
                s.spawn(move || curve.shrinkage_weight(x).unwrap())
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(serial, parallel);
    let thresholds: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..4)
            .map(|_| s.spawn(|| curve.decision_threshold(0.5).unwrap()))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(thresholds.windows(2).all(|w| w[0] == w[1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetric_and_bounded(k in 0usize..4, x in -40.0f64..40.0) {
        let c = &curves()[k];
        let m = c.shrinkage_weight(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert_eq!(m, c.shrinkage_weight(-x).unwrap());
    }

    #[test]
    fn posterior_mean_is_odd_contraction(k in 0usize..4, x in -40.0f64..40.0) {
        let c = &curves()[k];
        let t = c.posterior_mean(x).unwrap();
        prop_assert_eq!(t, -c.posterior_mean(-x).unwrap());
        prop_assert!(t.abs() <= x.abs());
        prop_assert!(t * x >= 0.0);
    }

    #[test]
    fn nondecreasing_in_magnitude(k in 0usize..4, a in 0.0f64..30.0, d in 0.0f64..5.0) {
        let c = &curves()[k];
        prop_assert!(c.shrinkage_weight(a + d).unwrap() >= c.shrinkage_weight(a).unwrap() - 1e-12);
    }
}
