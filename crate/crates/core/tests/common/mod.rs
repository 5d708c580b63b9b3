//! Brute-force reference values: fixed-grid trapezoid rules with hand-derived
//! integrands, independent of the adaptive quadrature in the library.
#![allow(dead_code)]

use rayon::prelude::*;
use std::f64::consts::PI;

pub const NODES: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub enum OraclePrior {
    Horseshoe { tau: f64 },
    Exponential { rate: f64 },
    InverseGamma { shape: f64, scale: f64 },
}

impl OraclePrior {
    pub fn density(self, u: f64) -> f64 {
        match self {
            OraclePrior::Horseshoe { tau } => tau / (PI * u.sqrt() * (tau * tau + u)),
            OraclePrior::Exponential { rate } => rate * (-rate * u).exp(),
            OraclePrior::InverseGamma { shape, scale } => {
                if u == 0.0 || u.is_infinite() {
                    return 0.0;
                }
                (shape * scale.ln() - libm::lgamma(shape) - (shape + 1.0) * u.ln() - scale / u)
                    .exp()
            }
        }
    }

    /// `(den, num)` integrands of `m_x` in `t`, where `z = t²`, `s = 1 - z`,
    /// `u = z/s`, with the factor `e^{q}` divided out. `κ = z`, so `num = z·den`.
    fn mx_integrands(self, t: f64, q: f64) -> (f64, f64) {
        let z = t * t;
        let s = (1.0 - t) * (1.0 + t);
        let e = (q * (z - 1.0)).exp();
        match self {
            OraclePrior::Horseshoe { tau } => {
                let d = PI * (tau * tau * s + z);
                (e * 2.0 * tau / d, e * 2.0 * tau * z / d)
            }
            _ => {
                if s == 0.0 || t == 0.0 {
                    return (0.0, 0.0);
                }
                let w = 2.0 * t * self.density(z / s);
                let den = e * w * s.powf(-1.5);
                (den, z * den)
            }
        }
    }
}

fn trapezoid(a: f64, b: f64, nodes: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / nodes as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for i in 1..nodes {
        sum += f(a + h * i as f64);
    }
    sum * h
}

/// `m_x` by a fixed `NODES`-interval trapezoid rule on `t ∈ [0,1]`.
pub fn oracle_mx(prior: OraclePrior, x: f64) -> f64 {
    let q = 0.5 * x * x;
    let h = 1.0 / NODES as f64;
    let (mut den, mut num) = (0.0, 0.0);
    for i in 0..=NODES {
        let w = if i == 0 || i == NODES { 0.5 } else { 1.0 };
        let (d, n) = prior.mx_integrands(i as f64 * h, q);
        den += w * d;
        num += w * n;
    }
    num / den
}

pub fn oracle_mx_many(prior: OraclePrior, xs: &[f64]) -> Vec<f64> {
    xs.par_iter().map(|&x| oracle_mx(prior, x)).collect()
}

/// `∫₀¹ π(u) du` with `u = t²`.
pub fn oracle_condition2(prior: OraclePrior, nodes: usize) -> f64 {
    trapezoid(0.0, 1.0, nodes, |t| match prior {
        OraclePrior::Horseshoe { tau } => 2.0 * tau / (PI * (tau * tau + t * t)),
        _ if t == 0.0 => 0.0,
        _ => 2.0 * t * prior.density(t * t),
    })
}

/// `(I₁, I₂)` of the Condition-3 ratio, integrating in `z = u/(1+u)`.
pub fn oracle_condition3(prior: OraclePrior, n: f64, p: f64, nodes: usize) -> (f64, f64) {
    let nu2 = (n / p).ln();
    let nu = nu2.sqrt();
    let s_n = p / n * nu2;
    let z_of = |u: f64| u / (1.0 + u);
    let jac = |z: f64| {
        let s = 1.0 - z;
        (z / s, 1.0 / (s * s))
    };
    let lower = trapezoid(z_of(s_n), z_of(nu2), nodes, |z| {
        let (u, j) = jac(z);
        u * prior.density(u) * j
    });
    let upper = trapezoid(z_of(nu2), 1.0, nodes, |z| {
        let s = 1.0 - z;
        match prior {
            OraclePrior::Horseshoe { tau } => nu * nu2 * tau / (PI * z * (tau * tau * s + z)),
            _ if s == 0.0 => 0.0,
            _ => {
                let (u, j) = jac(z);
                nu * nu2 / u.sqrt() * prior.density(u) * j
            }
        }
    });
    let i2 = nu
        * trapezoid(0.5, z_of(nu2), nodes, |z| {
            let (u, j) = jac(z);
            prior.density(u) / u.sqrt() * j
        });
    (lower + upper, i2)
}

/// Smallest `x` in `[0, hi]` with `f(x) ≥ target`, for nondecreasing `f`.
pub fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64, mut hi: f64, tol: f64) -> f64 {
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
