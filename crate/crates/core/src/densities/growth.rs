use serde::{Deserialize, Serialize};

use super::{Density, DensityError, ScalarDensity};

/// Evaluation scales for the recession quotient.
pub const RECESSION_SCALES: [f64; 4] = [1e4, 1e5, 1e6, 1e7];
/// Relative change between extrapolated estimates above which the limit is
/// reported as not converged.
pub const RECESSION_TOLERANCE: f64 = 1e-3;

/// Numerical estimate of `lim_{t→∞} (f(tξ) - f(0))/t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecessionEstimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    /// Raw quotients at [`RECESSION_SCALES`].
    pub quotients: [f64; 4],
}

/// Aitken extrapolation of three quotients at geometric scales, if the
/// differences contract.
fn aitken(q: [f64; 3]) -> Option<f64> {
    let d1 = q[1] - q[0];
    let d2 = q[2] - q[1];
    if d1 == 0.0 || d2 == 0.0 {
        return Some(q[2]);
    }
    let r = d2 / d1;
    if r > 0.0 && r < 1.0 {
        Some(q[2] + d2 * r / (1.0 - r))
    } else {
        None
    }
}

/// Recession along a ray given as `t ↦ f(t·ξ)`.
pub fn recession_along<F: Fn(f64) -> f64>(ray: F) -> RecessionEstimate {
    let f0 = ray(0.0);
    let mut quotients = [0.0; 4];
    for (q, &t) in quotients.iter_mut().zip(RECESSION_SCALES.iter()) {
        *q = (ray(t) - f0) / t;
    }
    let early = aitken([quotients[0], quotients[1], quotients[2]]);
    let late = aitken([quotients[1], quotients[2], quotients[3]]);
    let (value, error) = match (early, late) {
        (Some(a), Some(b)) => (b, (b - a).abs()),
        _ => (quotients[3], (quotients[3] - quotients[2]).abs()),
    };
    let converged = value.is_finite() && error <= RECESSION_TOLERANCE * value.abs().max(f64::MIN_POSITIVE);
    RecessionEstimate { value, error, converged, quotients }
}

/// Recession function `f_∞(ξ)` of a planar density; `ξ` need not be a unit
/// vector.
pub fn recession<D: Density + ?Sized>(f: &D, direction: [f64; 2]) -> Result<RecessionEstimate, DensityError> {
    if direction[0] == 0.0 && direction[1] == 0.0 {
        return Err(DensityError::ZeroDirection);
    }
    Ok(recession_along(|t| f.value([t * direction[0], t * direction[1]])))
}

/// Recession slope of a scalar density in direction `sign(direction)`,
/// scaled by `|direction|`.
pub fn scalar_recession(f: &ScalarDensity, direction: f64) -> Result<RecessionEstimate, DensityError> {
    if direction == 0.0 {
        return Err(DensityError::ZeroDirection);
    }
    Ok(recession_along(|t| f.value(t * direction)))
}

/// Constants of `a₁|t| - a₂ ≤ f(t) ≤ a₃|t| + a₄`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl GrowthConstants {
    /// Checks both lines at the given sample points.
    pub fn holds_at(&self, f: &ScalarDensity, samples: impl IntoIterator<Item = f64>) -> bool {
        samples.into_iter().all(|t| {
            let v = f.value(t);
            let slack = 1e-12 * (1.0 + v.abs());
            self.a1 * t.abs() - self.a2 <= v + slack && v <= self.a3 * t.abs() + self.a4 + slack
        })
    }
}

/// Uniformly spaced samples of `[lo, hi]` and their mirror images.
pub fn symmetric_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        out.push(t);
        out.push(-t);
    }
    out
}

/// Growth constants certified on `[-hi, -lo] ∪ [lo, hi]`.
///
/// The upper line uses the recession slope and the largest sampled excess;
/// the lower line is the tangent at `hi`, which lies below `f` by convexity.
pub fn growth_constants(f: &ScalarDensity, range: (f64, f64)) -> Result<GrowthConstants, DensityError> {
    let (lo, hi) = range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(DensityError::InvalidRange { lo, hi });
    }
    let plus = scalar_recession(f, 1.0)?;
    let minus = scalar_recession(f, -1.0)?;
    if !plus.converged || !minus.converged {
        return Err(DensityError::NotLinearGrowth(format!(
            "recession quotient does not settle (estimates {:.6e} ± {:.1e}, {:.6e} ± {:.1e})",
            plus.value, plus.error, minus.value, minus.error
        )));
    }
    let a3 = plus.value.max(minus.value);
    if !(a3 > 0.0) {
        return Err(DensityError::NotLinearGrowth(format!("recession slope {a3} is not positive")));
    }
    let samples = symmetric_samples(lo, hi, 2001);
    let a4 = samples.iter().map(|&t| f.value(t) - a3 * t.abs()).fold(0.0f64, f64::max);
    let slope = f.first_derivative(hi).min(-f.first_derivative(-hi));
    if !(slope > 0.0) {
        return Err(DensityError::NotLinearGrowth(format!(
            "supporting line at t = {hi} has slope {slope}; not uniformly of linear growth on the range"
        )));
    }
    let a2 = samples.iter().map(|&t| slope * t.abs() - f.value(t)).fold(0.0f64, f64::max);
    Ok(GrowthConstants { a1: slope, a2, a3, a4 })
}
