//! Structure of a weight function f_N: its zeros, the split of its mass into
//! left / main / right pieces around t = 1, and quadrature-based checks of
//! the weighted sum against ∫ h(tT) f_{N,θ}(t) dt.

use serde::Serialize;

use crate::error::{NiltError, Result};
use crate::framework::{CoefficientSet, TransformQuery};
use crate::quadrature::{integrate, AdaptiveOptions};

/// Zeros of f_N in (0, t_max], ascending.
///
/// CME sets use the closed form (double zeros, which a sign scan would miss).
/// Other sets are scanned for sign changes and bisected; samples whose value
/// is below the rounding level of the sum are treated as unresolved so that
/// noise near t = 0 does not produce spurious roots.
pub fn find_zeros(coeffs: &CoefficientSet, t_max: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(NiltError::InvalidArgument(format!("scan window end must be positive, got {t_max}")));
    }
    if let Some(form) = coeffs.spectral_form() {
        return Ok(form.zeros(t_max));
    }
    let step = (0.25 / coeffs.order().max(1) as f64).min(0.01);
    let steps = (t_max / step).ceil() as usize;
    let resolved = |t: f64| -> Option<f64> {
        let d = coeffs.weight_detail(t);
        (d.value.abs() > 64.0 * f64::EPSILON * d.scale).then_some(d.value)
    };
    let mut zeros = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..=steps {
        let t = (i as f64 * step).min(t_max);
        let Some(v) = resolved(t) else {
            prev = None;
            continue;
        };
        if let Some((tp, vp)) = prev {
            if vp.signum() != v.signum() {
                zeros.push(bisect(coeffs, tp, t, vp));
            }
        }
        prev = Some((t, v));
    }
    Ok(zeros)
}

fn bisect(coeffs: &CoefficientSet, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let sign_lo = f_lo.signum();
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = coeffs.weight(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightDecomposition {
    /// Largest zero not exceeding 1.
    pub z_i: f64,
    /// Smallest zero above 1.
    pub z_i1: f64,
    pub f_left: f64,
    pub f_main: f64,
    pub f_right: f64,
}

pub fn decompose_weight(coeffs: &CoefficientSet, t_max: f64) -> Result<WeightDecomposition> {
    let zeros = find_zeros(coeffs, t_max)?;
    let (z_i, z_i1) = main_interval(&zeros, t_max)?;
    Ok(WeightDecomposition {
        z_i,
        z_i1,
        f_left: coeffs.integral(0.0, z_i)?,
        f_main: coeffs.integral(z_i, z_i1)?,
        f_right: coeffs.integral(z_i1, f64::INFINITY)?,
    })
}

// z_0 = 0 counts as a zero, so low orders whose first sign change lies past
// t = 1 get an empty left part instead of an error.
fn main_interval(zeros: &[f64], t_max: f64) -> Result<(f64, f64)> {
    let below = zeros.iter().copied().filter(|z| *z <= 1.0).fold(0.0, f64::max);
    match zeros.iter().copied().find(|z| *z > 1.0) {
        Some(above) => Ok((below, above)),
        None => Err(NiltError::MainIntervalUndetected(format!("no zero in (1, {t_max}]"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub value: f64,
    pub error: f64,
    /// Upper integration limit; the tail beyond it is below the tolerance.
    pub t_cut: f64,
}

fn oracle_options() -> AdaptiveOptions {
    AdaptiveOptions {
        abs_tol: 0.0,
        rel_tol: 1e-11,
        max_segments: 200_000,
    }
}

/// Chooses where to truncate ∫_0^∞ h(tT) f_{N,θ}(t) dt.
///
/// With Σ|η_k| = A and d = min Re(β_k) + θ, |f_{N,θ}(t)| <= A e^{-dt}. For
/// d > 0 the tail is bounded by A sup|h| e^{-dt}/d (sup|h| sampled); for
/// d <= 0 convergence comes from h itself and the cut is placed where the
/// sampled envelope A e^{-dt} |h(tT)| has decayed by 1e-17 from its peak.
fn truncation_point(shifted: &CoefficientSet, h: &dyn Fn(f64) -> f64, t: f64) -> Result<f64> {
    let a: f64 = shifted.weights().iter().map(|w| w.norm()).sum();
    let d = shifted.min_real_part();
    let sample = |x: f64| h(x * t).abs();
    if d > 0.0 {
        let mut sup: f64 = 0.0;
        let mut x = 1e-6;
        while x < 1e4 {
            let v = sample(x);
            if v.is_finite() {
                sup = sup.max(v);
            }
            x *= 1.05;
        }
        let sup = sup.max(f64::MIN_POSITIVE);
        let cut = ((a * sup / (d * 1e-13)).ln() / d).max(2.0);
        return Ok(cut);
    }
    let env = |x: f64| (a.ln() - d * x + sample(x).ln()).exp();
    let mut peak: f64 = 0.0;
    let mut x = 0.0;
    let mut quiet = 0;
    while x < 1e4 {
        let e = env(x);
        if !e.is_finite() {
            return Err(NiltError::QuadratureNonConvergence {
                estimate: f64::NAN,
                error: f64::INFINITY,
            });
        }
        peak = peak.max(e);
        if x > 2.0 && e <= 1e-17 * peak {
            quiet += 1;
            if quiet >= 40 {
                return Ok(x);
            }
        } else {
            quiet = 0;
        }
        x += 0.025;
    }
    Err(NiltError::QuadratureNonConvergence {
        estimate: f64::NAN,
        error: f64::INFINITY,
    })
}

fn partition(lo: f64, hi: f64, pieces: usize, extra: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=pieces).map(|i| lo + (hi - lo) * i as f64 / pieces as f64).collect();
    pts.extend(extra.iter().copied().filter(|x| *x > lo && *x < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn pieces_for(coeffs: &CoefficientSet, length: f64) -> usize {
    ((length * (coeffs.order() + 1) as f64).ceil() as usize).clamp(1, 20_000)
}

/// f_{N,θ} as the quadrature sees it. CME weights are evaluated in product
/// form: non-negative and free of the cancellation that limits the
/// exponential sum near the zeros.
fn quadrature_weight(shifted: &CoefficientSet) -> impl Fn(f64) -> f64 + '_ {
    move |x| match shifted.spectral_form() {
        Some(form) => form.shifted_density(x, shifted.shift()),
        None => shifted.weight(x),
    }
}

/// The exponential sum cannot be evaluated below ~ε times its term scale, so
/// the absolute tolerance is floored at that noise level integrated over the
/// partition.
fn quadrature_options(shifted: &CoefficientSet, h: &dyn Fn(f64) -> f64, t: f64, pts: &[f64]) -> AdaptiveOptions {
    let mut options = oracle_options();
    if shifted.spectral_form().is_none() {
        let noise: f64 = pts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                (w[1] - w[0]) * h(mid * t).abs() * shifted.weight_detail(mid).scale
            })
            .filter(|x| x.is_finite())
            .sum();
        options.abs_tol = 64.0 * f64::EPSILON * noise;
    }
    options
}

/// Independent estimate of h_N(T, θ) as ∫_0^∞ h(tT) f_{N,θ}(t) dt.
pub fn quadrature_oracle(query: &TransformQuery, coeffs: &CoefficientSet, t: f64, theta: f64) -> Result<OracleEstimate> {
    let oracle = query.oracle.as_ref().ok_or(NiltError::MissingOracle)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(NiltError::InvalidTime(t));
    }
    let shifted = coeffs.shifted(theta);
    let h = |x: f64| oracle(x);
    let t_cut = truncation_point(&shifted, &h, t)?;
    let zeros = find_zeros(coeffs, t_cut.min(50.0)).unwrap_or_default();
    let pts = partition(0.0, t_cut, pieces_for(coeffs, t_cut), &zeros);
    let weight = quadrature_weight(&shifted);
    let options = quadrature_options(&shifted, &h, t, &pts);
    let q = integrate(|x| oracle(x * t) * weight(x), &pts, options)?;
    Ok(OracleEstimate {
        value: q.value,
        error: q.error,
        t_cut,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateDecomposition {
    pub left: f64,
    pub main: f64,
    pub right: f64,
    pub total: f64,
}

/// Splits the quadrature estimate at the main-interval zeros z_I and z_{I+1}.
pub fn decompose_estimate(
    query: &TransformQuery,
    coeffs: &CoefficientSet,
    t: f64,
    theta: f64,
) -> Result<EstimateDecomposition> {
    let oracle = query.oracle.as_ref().ok_or(NiltError::MissingOracle)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(NiltError::InvalidTime(t));
    }
    let shifted = coeffs.shifted(theta);
    let h = |x: f64| oracle(x);
    let zeros = find_zeros(coeffs, 4.0)?;
    let (z_i, z_i1) = main_interval(&zeros, 4.0)?;
    let t_cut = truncation_point(&shifted, &h, t)?.max(z_i1 + 1.0);
    let weight = quadrature_weight(&shifted);
    let piece = |lo: f64, hi: f64| -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let pts = partition(lo, hi, pieces_for(coeffs, hi - lo), &zeros);
        let options = quadrature_options(&shifted, &h, t, &pts);
        Ok(integrate(|x| oracle(x * t) * weight(x), &pts, options)?.value)
    };
    let left = piece(0.0, z_i)?;
    let main = piece(z_i, z_i1)?;
    let right = piece(z_i1, t_cut)?;
    Ok(EstimateDecomposition {
        left,
        main,
        right,
        total: left + main + right,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSample {
    pub t: f64,
    /// f_{N,θ}(t).
    pub weight: f64,
    /// h(tT), when an oracle and T were supplied.
    pub h: Option<f64>,
    /// h(tT) f_{N,θ}(t).
    pub product: Option<f64>,
}

/// Samples the (shifted) weight function and optionally the integrand, for plotting.
pub fn weight_series(
    coeffs: &CoefficientSet,
    theta: f64,
    grid: &[f64],
    integrand: Option<(&TransformQuery, f64)>,
) -> Result<Vec<WeightSample>> {
    let shifted = coeffs.shifted(theta);
    let oracle = match integrand {
        Some((q, t)) => Some((q.oracle.as_ref().ok_or(NiltError::MissingOracle)?, t)),
        None => None,
    };
    Ok(grid
        .iter()
        .map(|&x| {
            let weight = shifted.weight(x);
            let h = oracle.map(|(o, t)| o(x * t));
            WeightSample {
                t: x,
                weight,
                h,
                product: h.map(|h| h * weight),
            }
        })
        .collect())
}
