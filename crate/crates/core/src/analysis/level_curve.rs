use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::densities::Density;

/// Log-log slope of the ratio sequence below which the bound is reported
/// violated.
pub const RATIO_DECAY_SLOPE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Arc step is at most `curvature_step / |γ''|` ...
    pub curvature_step: f64,
    /// ... and at most `radius_step · r`.
    pub radius_step: f64,
    /// Relative tolerance `|f - c| ≤ tol·max(c, 1)` of the corrector.
    pub corrector_tol: f64,
    pub max_corrector_iterations: usize,
    pub max_points: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            curvature_step: 0.1,
            radius_step: 1e-2,
            corrector_tol: 1e-12,
            max_corrector_iterations: 50,
            max_points: 200_000,
        }
    }
}

/// Closed polygon sampling `[f = level]`, counter-clockwise from the
/// positive first axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    pub level: f64,
    pub points: Vec<[f64; 2]>,
    /// Distance between the last and first point.
    pub closure_gap: f64,
    /// Step that would have been taken from the last point.
    pub closing_step: f64,
    pub max_step: f64,
    pub max_relative_residual: f64,
    /// Smallest analytic curvature `D²f(τ,τ)/|Df|` met along the trace.
    pub min_curvature: f64,
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn unit_tangent_normal<D: Density + ?Sized>(f: &D, x: [f64; 2]) -> ([f64; 2], [f64; 2], f64, f64) {
    let g = f.gradient(x);
    let gn = norm(g);
    let n = [g[0] / gn, g[1] / gn];
    let tau = [-n[1], n[0]];
    let h = f.hessian(x);
    let d2 = tau[0] * (h[0][0] * tau[0] + h[0][1] * tau[1]) + tau[1] * (h[1][0] * tau[0] + h[1][1] * tau[1]);
    (tau, n, gn, d2 / gn)
}

/// `s > 0` with `f(s·u) = level`, by doubling then bisection.
fn radial_root<D: Density + ?Sized>(f: &D, level: f64, u: [f64; 2]) -> Result<f64, AnalysisError> {
    let at = |s: f64| f.value([s * u[0], s * u[1]]);
    let mut hi = 1.0;
    while at(hi) < level {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(AnalysisError::UnboundedLevelSet { level });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton projection onto `[f = level]` along the gradient.
fn correct<D: Density + ?Sized>(f: &D, level: f64, mut y: [f64; 2], opts: &TraceOptions) -> Option<([f64; 2], f64)> {
    let scale = level.abs().max(1.0);
    for _ in 0..opts.max_corrector_iterations {
        let v = f.value(y) - level;
        if v.abs() <= opts.corrector_tol * scale {
            return Some((y, v.abs() / scale));
        }
        let g = f.gradient(y);
        let g2 = g[0] * g[0] + g[1] * g[1];
        if !(g2 > 0.0) {
            return None;
        }
        y = [y[0] - v * g[0] / g2, y[1] - v * g[1] / g2];
    }
    None
}

fn arc_step(curvature: f64, r: f64, opts: &TraceOptions) -> f64 {
    let cap = opts.radius_step * r;
    if curvature > 0.0 {
        (opts.curvature_step / curvature).min(cap)
    } else {
        cap
    }
}

/// Second-order step along the curve, then projection back onto it.
fn step_along<D: Density + ?Sized>(
    f: &D,
    level: f64,
    x: [f64; 2],
    h: f64,
    opts: &TraceOptions,
) -> Option<([f64; 2], f64)> {
    let (tau, n, _, k) = unit_tangent_normal(f, x);
    let bend = 0.5 * h * h * k;
    correct(f, level, [x[0] + h * tau[0] - bend * n[0], x[1] + h * tau[1] - bend * n[1]], opts)
}

/// Traces `[f = level]` once around the origin. Requires `f(0) < level`.
pub fn trace_level_curve<D: Density + ?Sized>(
    f: &D,
    level: f64,
    opts: &TraceOptions,
) -> Result<LevelCurve, AnalysisError> {
    let minimum = f.value([0.0, 0.0]);
    if !(level > minimum) {
        return Err(AnalysisError::LevelBelowMinimum { level, minimum });
    }
    let start = [radial_root(f, level, [1.0, 0.0])?, 0.0];
    let mut points = vec![start];
    let mut x = start;
    let mut r_max = start[0];
    let mut turned = 0.0;
    let mut max_step: f64 = 0.0;
    let mut max_res: f64 = 0.0;
    let mut min_curvature = f64::INFINITY;
    loop {
        let (_, _, _, k) = unit_tangent_normal(f, x);
        min_curvature = min_curvature.min(k);
        let h = arc_step(k, r_max, opts);
        let Some((y, res)) = step_along(f, level, x, h, opts) else {
            return Err(AnalysisError::CorrectorFailed { level, points: points.len() });
        };
        let dtheta = (x[0] * y[1] - x[1] * y[0]).atan2(x[0] * y[0] + x[1] * y[1]);
        if !(dtheta > 0.0) {
            return Err(AnalysisError::CorrectorFailed { level, points: points.len() });
        }
        if turned + dtheta >= 2.0 * PI {
            let gap = norm([x[0] - start[0], x[1] - start[1]]);
            return Ok(LevelCurve {
                level,
                points,
                closure_gap: gap,
                closing_step: h,
                max_step: max_step.max(h),
                max_relative_residual: max_res,
                min_curvature,
            });
        }
        turned += dtheta;
        max_step = max_step.max(h);
        max_res = max_res.max(res);
        r_max = r_max.max(norm(y));
        if r_max > 1e12 {
            return Err(AnalysisError::UnboundedLevelSet { level });
        }
        points.push(y);
        x = y;
        if points.len() >= opts.max_points {
            return Err(AnalysisError::NotClosed { level, max_points: opts.max_points });
        }
    }
}

/// One row of the probe table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: f64,
    /// `r_k = |p_k|` at the contact point.
    pub radius: f64,
    pub contact: [f64; 2],
    /// Three-point curvature of the traced curve at `p_k`.
    pub curvature: f64,
    /// `D²f(τ,τ)/|Df|` at `p_k`.
    pub curvature_analytic: f64,
    pub grad_norm: f64,
    /// `|γ''| |Df| (1+r)^κ`.
    pub product: f64,
    /// `r (1+r)^{-κ}`.
    pub ratio: f64,
    /// `|γ''| ≥ 1/r_k` up to relative 10⁻³.
    pub contact_bound_holds: bool,
    pub points: usize,
    pub closure_gap: f64,
    pub closing_step: f64,
    pub max_relative_residual: f64,
    pub convex: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LevelOutcome {
    Traced(LevelRow),
    Failed { level: f64, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    /// Ratio sequence stays bounded away from zero.
    Consistent,
    /// Ratio sequence trends to zero: the assumed upper exponent is too large.
    Violated,
    /// Fewer than two levels traced.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub kappa: f64,
    pub levels: Vec<LevelOutcome>,
    pub verdict: ProbeVerdict,
    /// Log-log slope of the ratio against `r_k`.
    pub ratio_slope: f64,
    /// First ratio over last ratio.
    pub ratio_decay: f64,
    pub min_ratio: f64,
    /// Log-log slope of the product against `r_k`.
    pub product_slope: f64,
    pub product_grows: bool,
}

impl ProbeReport {
    pub fn rows(&self) -> impl Iterator<Item = &LevelRow> {
        self.levels.iter().filter_map(|l| match l {
            LevelOutcome::Traced(r) => Some(r),
            LevelOutcome::Failed { .. } => None,
        })
    }
}

fn rotate(u: [f64; 2], phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c * u[0] - s * u[1], s * u[0] + c * u[1]]
}

fn angle_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]).abs()
}

/// Max of `|ξ|` on the curve: dense argmax, then golden section over the
/// polar angle between the neighbouring samples.
fn contact_point<D: Density + ?Sized>(f: &D, curve: &LevelCurve) -> Result<[f64; 2], AnalysisError> {
    let pts = &curve.points;
    let mut idx = 0;
    for (i, p) in pts.iter().enumerate() {
        if norm(*p) > norm(pts[idx]) {
            idx = i;
        }
    }
    let p = pts[idx];
    let n = pts.len();
    let prev = pts[(idx + n - 1) % n];
    let next = pts[(idx + 1) % n];
    let u = [p[0] / norm(p), p[1] / norm(p)];
    let radius_at = |phi: f64| -> Result<f64, AnalysisError> { radial_root(f, curve.level, rotate(u, phi)) };
    let (mut a, mut b) = (-angle_between(prev, p), angle_between(p, next));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = radius_at(c)?;
    let mut fd = radius_at(d)?;
    for _ in 0..80 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = radius_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = radius_at(d)?;
        }
    }
    let phi = 0.5 * (a + b);
    let best = radius_at(phi)?;
    if best >= norm(p) {
        let w = rotate(u, phi);
        Ok([best * w[0], best * w[1]])
    } else {
        Ok(p)
    }
}

fn probe_level<D: Density + ?Sized>(
    f: &D,
    level: f64,
    kappa: f64,
    opts: &TraceOptions,
) -> Result<LevelRow, AnalysisError> {
    let curve = trace_level_curve(f, level, opts)?;
    let p = contact_point(f, &curve)?;
    let r = norm(p);
    let (tau, n, grad_norm, k) = unit_tangent_normal(f, p);
    let h = arc_step(k, r, opts);
    let bend = 0.5 * h * h * k;
    let fwd = correct(f, level, [p[0] + h * tau[0] - bend * n[0], p[1] + h * tau[1] - bend * n[1]], opts);
    let back = correct(f, level, [p[0] - h * tau[0] - bend * n[0], p[1] - h * tau[1] - bend * n[1]], opts);
    let (Some((q1, _)), Some((q0, _))) = (back, fwd) else {
        return Err(AnalysisError::CorrectorFailed { level, points: curve.points.len() });
    };
    let a = [p[0] - q0[0], p[1] - q0[1]];
    let b = [q1[0] - p[0], q1[1] - p[1]];
    let c = [q1[0] - q0[0], q1[1] - q0[1]];
    let curvature = 2.0 * (a[0] * b[1] - a[1] * b[0]).abs() / (norm(a) * norm(b) * norm(c));
    Ok(LevelRow {
        level,
        radius: r,
        contact: p,
        curvature,
        curvature_analytic: k,
        grad_norm,
        product: curvature * grad_norm * (1.0 + r).powf(kappa),
        ratio: r * (1.0 + r).powf(-kappa),
        contact_bound_holds: curvature * r >= 1.0 - 1e-3,
        points: curve.points.len(),
        closure_gap: curve.closure_gap,
        closing_step: curve.closing_step,
        max_relative_residual: curve.max_relative_residual,
        convex: curve.min_curvature > 0.0,
    })
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Traces each level set, measures curvature at the outermost point and
/// tests whether `r (1+r)^{-κ}` stays bounded below along the levels.
pub fn lemma1_probe<D: Density + ?Sized>(
    f: &D,
    kappa: f64,
    levels: &[f64],
    opts: &TraceOptions,
) -> Result<ProbeReport, AnalysisError> {
    if levels.is_empty() || levels.windows(2).any(|w| !(w[1] > w[0])) || !(levels[0] > 0.0) {
        return Err(AnalysisError::InvalidInput("levels must be positive and strictly increasing".into()));
    }
    let results: Vec<Result<LevelRow, AnalysisError>> =
        levels.par_iter().map(|&c| probe_level(f, c, kappa, opts)).collect();
    let mut outcomes = Vec::with_capacity(levels.len());
    for (res, &level) in results.into_iter().zip(levels) {
        match res {
            Ok(row) => outcomes.push(LevelOutcome::Traced(row)),
            Err(e @ AnalysisError::UnboundedLevelSet { .. }) => return Err(e),
            Err(e) => outcomes.push(LevelOutcome::Failed { level, reason: e.to_string() }),
        }
    }
    let rows: Vec<&LevelRow> = outcomes
        .iter()
        .filter_map(|o| match o {
            LevelOutcome::Traced(r) => Some(r),
            LevelOutcome::Failed { .. } => None,
        })
        .collect();
    let radii: Vec<f64> = rows.iter().map(|r| r.radius).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let products: Vec<f64> = rows.iter().map(|r| r.product).collect();
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let (verdict, ratio_slope, ratio_decay, product_slope) = if rows.len() < 2 {
        (ProbeVerdict::Inconclusive, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let rs = loglog_slope(&radii, &ratios);
        let ps = loglog_slope(&radii, &products);
        let v = if rs < -RATIO_DECAY_SLOPE { ProbeVerdict::Violated } else { ProbeVerdict::Consistent };
        (v, rs, ratios[0] / ratios[ratios.len() - 1], ps)
    };
    Ok(ProbeReport {
        kappa,
        levels: outcomes,
        verdict,
        ratio_slope,
        ratio_decay,
        min_ratio,
        product_slope,
        product_grows: product_slope > RATIO_DECAY_SLOPE,
    })
}
