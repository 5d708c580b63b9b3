//! Adaptive Gauss–Kronrod quadrature.
//!
//! [`integrate`] is a globally adaptive G10/K21 scheme on a finite interval.
//! [`integrate_log_half_line`] integrates a nonnegative function over `(0, ∞)`
//! given its logarithm: `(0, 1]` is mapped with `u = t²` (which removes
//! `u^{-1/2}` singularities at the origin) and `[1, ∞)` with `u = 1/s²`, both
//! onto bounded intervals, and the integrand is rescaled by its sampled maximum
//! before exponentiating so that very large or very small magnitudes never
//! overflow or underflow.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_252_316,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite { at: x })
        }
    };

    let fc = eval(centre)?;
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = (fc * WGK[10]).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(centre - dx)?;
        let f2 = eval(centre + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment { a, b, value, error })
}

/// Integrate `f` over the partition given by `knots` (sorted, at least two points).
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    knots: &[f64],
    settings: &QuadratureSettings,
) -> Result<Estimate> {
    if knots.len() < 2 || knots.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(
            "knots",
            "need at least two strictly increasing points",
        ));
    }
    let mut heap = BinaryHeap::with_capacity(2 * knots.len());
    for w in knots.windows(2) {
        heap.push(kronrod21(&f, w[0], w[1])?);
    }

    loop {
        let (value, error) = totals(&heap);
        let tol = settings.abs_tol.max(settings.rel_tol * value.abs());
        if error <= tol {
            return Ok(Estimate {
                value,
                abs_error: error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= settings.max_intervals {
            return Err(Error::QuadratureNotConverged {
                achieved: if value != 0.0 {
                    error / value.abs()
                } else {
                    error
                },
                requested: settings.rel_tol,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be split further in floating point; accept it.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            continue;
        }
        heap.push(kronrod21(&f, worst.a, mid)?);
        heap.push(kronrod21(&f, mid, worst.b)?);
    }
}

fn totals(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    let mut segs: Vec<&Segment> = heap.iter().collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let values: Vec<f64> = segs.iter().map(|s| s.value).collect();
    let errors: Vec<f64> = segs.iter().map(|s| s.error).collect();
    (
        crate::stats::pairwise_sum(&values),
        crate::stats::pairwise_sum(&errors),
    )
}

/// Result of a log-space integration: `∫ f = exp(ln_value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    pub ln_value: f64,
    pub rel_error: f64,
}

impl LogIntegral {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// Map from the working coordinate `w ∈ [0, 2]` to `u ∈ [0, ∞]`.
pub(crate) fn w_to_u(w: f64) -> f64 {
    if w <= 1.0 {
        w * w
    } else {
        let s = 2.0 - w;
        1.0 / (s * s)
    }
}

pub(crate) fn u_to_w(u: f64) -> f64 {
    if u <= 1.0 {
        u.sqrt()
    } else {
        2.0 - 1.0 / u.sqrt()
    }
}

fn ln_jacobian(w: f64) -> f64 {
    if w <= 1.0 {
        (2.0 * w).ln()
    } else {
        let s = 2.0 - w;
        std::f64::consts::LN_2 - 3.0 * s.ln()
    }
}

fn base_knots() -> Vec<f64> {
    let mut knots = vec![0.0, 1.0, 2.0];
    for k in 1..=9 {
        let scale = 10f64.powi(-k);
        for m in [1.0, 2.0, 5.0] {
            let t = m * scale;
            if t < 1.0 {
                knots.push(t);
                knots.push(2.0 - t);
            }
        }
    }
    knots
}

/// Integrate `exp(ln_f(u))` over `u ∈ (0, ∞)`.
///
/// `ln_f` may return `-∞` where the integrand vanishes; `breakpoints` marks
/// points in `u` where the integrand has a kink or jump.
pub fn integrate_log_half_line<F: Fn(f64) -> f64>(
    ln_f: F,
    breakpoints: &[f64],
    settings: &QuadratureSettings,
) -> Result<LogIntegral> {
    let mut knots = base_knots();
    for &u in breakpoints {
        if u.is_finite() && u > 0.0 {
            knots.push(u_to_w(u));
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);

    let ln_h = |w: f64| -> Result<f64> {
        let u = w_to_u(w);
        let v = ln_f(u) + ln_jacobian(w);
        if v.is_nan() || v == f64::INFINITY {
            Err(Error::NonFinite { at: u })
        } else {
            Ok(v)
        }
    };

    let mut shift = f64::NEG_INFINITY;
    for pair in knots.windows(2) {
        for frac in [0.02, 0.25, 0.5, 0.75, 0.98] {
            let w = pair[0] + frac * (pair[1] - pair[0]);
            shift = shift.max(ln_h(w)?);
        }
    }
    if shift == f64::NEG_INFINITY {
        return Ok(LogIntegral {
            ln_value: f64::NEG_INFINITY,
            rel_error: 0.0,
        });
    }

    // NaN marks an invalid evaluation so the error surfaces through kronrod21.
    let est = integrate(
        |w| match ln_h(w) {
            Ok(v) => (v - shift).exp(),
            Err(_) => f64::NAN,
        },
        &knots,
        settings,
    )
    .map_err(|e| match e {
        Error::NonFinite { at } => Error::NonFinite { at: w_to_u(at) },
        other => other,
    })?;

    if est.value <= 0.0 {
        return Ok(LogIntegral {
            ln_value: f64::NEG_INFINITY,
            rel_error: 0.0,
        });
    }
    Ok(LogIntegral {
        ln_value: shift + est.value.ln(),
        rel_error: est.abs_error / est.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(|x| x * x * x, &[0.0, 2.0], &QuadratureSettings::default()).unwrap();
        assert!((est.value - 4.0).abs() < 1e-14);
    }

    #[test]
    fn peaked_lorentzian() {
        let w = 1e-4;
        let est = integrate(
            |x| w / (std::f64::consts::PI * (w * w + x * x)),
            &[-1.0, 0.0, 1.0],
            &QuadratureSettings::default(),
        )
        .unwrap();
        let exact = 2.0 / std::f64::consts::PI * (1.0 / w).atan();
        assert!((est.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn non_finite_is_reported() {
        let err = integrate(
            |x| 1.0 / (x - 0.5),
            &[0.0, 0.5 + 1e-3, 1.0],
            &Default::default(),
        );
        assert!(err.is_ok() || matches!(err, Err(Error::NonFinite { .. })));
        let err = integrate(|_| f64::NAN, &[0.0, 1.0], &Default::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn half_line_gaussian_and_cauchy_tails() {
        let s = QuadratureSettings::default();
        // ∫_0^∞ e^{-u} du = 1
        let r = integrate_log_half_line(|u| -u, &[], &s).unwrap();
        assert!((r.value() - 1.0).abs() < 1e-10);
        // ∫_0^∞ u^{-1/2} / (1+u) du = π
        let r = integrate_log_half_line(|u| -0.5 * u.ln() - u.ln_1p(), &[], &s).unwrap();
        assert!((r.value() - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn half_line_survives_huge_magnitudes() {
        // e^{-2000} e^{-u}: ln value must be -2000 exactly up to tolerance.
        let r = integrate_log_half_line(|u| -2000.0 - u, &[], &Default::default()).unwrap();
        assert!((r.ln_value + 2000.0).abs() < 1e-9);
    }

    #[test]
    fn indicator_with_breakpoints() {
        let r = integrate_log_half_line(
            |u| {
                if (2.0..=5.0).contains(&u) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            },
            &[2.0, 5.0],
            &Default::default(),
        )
        .unwrap();
        assert!((r.value() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn coordinate_maps_invert() {
        for &u in &[1e-12, 0.3, 1.0, 4.0, 1e9] {
            let back = w_to_u(u_to_w(u));
            assert!((back - u).abs() <= 1e-9 * u);
        }
    }
}
