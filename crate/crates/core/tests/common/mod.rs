//! Independent oracles shared by the integration tests. Nothing here calls
//! into the crate's own quadrature or root finders.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitvar::solver::{DiscreteField, Grid};

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `(μ-1) ∫_0^t ∫_0^s (1+r)^{-μ} dr ds`, evaluated as the single integral
/// `(μ-1) ∫_0^t (t-r)(1+r)^{-μ} dr` in the variable `x = ln(1+r)`.
pub fn phi_mu_quadrature(mu: f64, t: f64) -> f64 {
    let t = t.abs();
    if t == 0.0 {
        return 0.0;
    }
    let g = |x: f64| {
        let r = x.exp() - 1.0;
        (mu - 1.0) * (t - r) * (1.0 + r).powf(1.0 - mu)
    };
    simpson(g, 0.0, t.ln_1p(), 20_000)
}

/// Root of `r - ln(1+r) = c` by bisection.
pub fn phi_two_radius(c: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 2.0 * c + 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - mid.ln_1p() < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Interior perturbed by seeded uniform noise of the given amplitude.
pub fn random_field(grid: Grid, base: impl Fn(f64, f64) -> f64, amplitude: f64, seed: u64) -> DiscreteField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = DiscreteField::from_fn(grid, base);
    let x: Vec<f64> = u.interior_values().iter().map(|v| v + amplitude * rng.random_range(-1.0..=1.0)).collect();
    u.set_interior(&x);
    u
}

pub fn random_direction(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

pub fn shifted(u: &DiscreteField, v: &[f64], eps: f64) -> DiscreteField {
    let x: Vec<f64> = u.interior_values().iter().zip(v).map(|(a, b)| a + eps * b).collect();
    let mut w = u.clone();
    w.set_interior(&x);
    w
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
