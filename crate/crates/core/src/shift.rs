//! Automatic shift selection: pick θ by minimising the CME estimate itself.
//!
//! For non-negative h the CME weight is non-negative, so every θ gives an
//! upper bound on the true value plus error terms, and the estimate is convex
//! in θ. Golden-section search therefore finds the least pessimistic shift.

use crate::error::{NiltError, Result};
use crate::framework::{
    evaluate_nilt, CoefficientSet, Method, NiltResult, NiltWarning, TransformQuery,
};

/// Rule for the upper end of the first bracket when h is not known to be bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperRule {
    /// max(θ_ℓ + 10, 10).
    Narrow,
    /// max(θ_ℓ + 1000, 0).
    Wide,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftSearchConfig {
    /// Bracket width at which the search stops.
    pub epsilon: f64,
    /// θ_ℓ used when the transform is entire (a = -∞).
    pub unbounded_lower: f64,
    /// θ_u used when h is known to be bounded.
    pub bounded_upper: f64,
    pub upper_rule: UpperRule,
    /// An arbitrary bound that is hit moves outward by this many bracket widths.
    pub expansion_factor: f64,
    pub max_restarts: usize,
}

impl Default for ShiftSearchConfig {
    fn default() -> Self {
        ShiftSearchConfig {
            epsilon: 0.1,
            unbounded_lower: -1000.0,
            bounded_upper: 10.0,
            upper_rule: UpperRule::Narrow,
            expansion_factor: 4.0,
            max_restarts: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBounds {
    pub lower: f64,
    pub upper: f64,
    /// The lower bound comes from the abscissa and may not be crossed.
    pub lower_fixed: bool,
    /// The upper bound comes from the boundedness hint and is kept.
    pub upper_fixed: bool,
}

/// θ_ℓ = aT - min Re(β_k) (or the configured fallback when a = -∞) and θ_u
/// from the boundedness hint or the upper rule. Always θ_u > θ_ℓ.
pub fn theta_bounds(query: &TransformQuery, t: f64, coeffs: &CoefficientSet, cfg: &ShiftSearchConfig) -> ThetaBounds {
    let (lower, lower_fixed) = if query.abscissa == f64::NEG_INFINITY {
        (cfg.unbounded_lower, false)
    } else {
        (query.abscissa * t - coeffs.min_real_part(), true)
    };
    let (mut upper, upper_fixed) = if query.bounded {
        (cfg.bounded_upper, true)
    } else {
        match cfg.upper_rule {
            UpperRule::Narrow => ((lower + 10.0).max(10.0), false),
            UpperRule::Wide => ((lower + 1000.0).max(0.0), false),
        }
    };
    if !(upper > lower) {
        upper = lower + 10.0;
    }
    ThetaBounds {
        lower,
        upper,
        lower_fixed,
        upper_fixed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenSection {
    pub argmin: f64,
    pub evaluations: usize,
    pub iterations: usize,
}

/// Golden-section search on [lo, hi] until the bracket is narrower than
/// `eps`, reusing one interior point per iteration (2 + iterations
/// evaluations in total). Returns the midpoint of the final bracket.
/// NaN objective values compare as +∞.
pub fn golden_section_search(
    mut objective: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    eps: f64,
) -> GoldenSection {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let clean = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = clean(objective(x1));
    let mut f2 = clean(objective(x2));
    let mut evaluations = 2;
    let mut iterations = 0;
    while b - a >= eps {
        iterations += 1;
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = clean(objective(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = clean(objective(x2));
        }
        evaluations += 1;
    }
    GoldenSection {
        argmin: 0.5 * (a + b),
        evaluations,
        iterations,
    }
}

fn objective_value(coeffs: &CoefficientSet, query: &TransformQuery, t: f64, theta: f64) -> f64 {
    match evaluate_nilt(coeffs, query, t, theta) {
        Ok(v) => v.value,
        // Overflow of h* or of the summed terms: the true value is huge.
        Err(NiltError::NonFiniteTransform { .. } | NiltError::NonFiniteSum { .. }) => f64::INFINITY,
        Err(_) => f64::NAN,
    }
}

/// CME-S: CME inversion at the shift that minimises the CME estimate.
pub fn cme_s(query: &TransformQuery, t: f64, cme: &CoefficientSet, cfg: &ShiftSearchConfig) -> Result<NiltResult> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(NiltError::InvalidTime(t));
    }
    if cme.method() != Method::Cme {
        return Err(NiltError::InvalidArgument("cme_s needs CME coefficients".into()));
    }
    let bounds = theta_bounds(query, t, cme, cfg);
    let (mut lower, mut upper) = (bounds.lower, bounds.upper);
    let mut evaluations = 0;
    let mut iterations = 0;
    let mut restarts = 0;
    let mut warnings = Vec::new();
    let (theta_hat, lower_hit, upper_hit) = loop {
        let gs = golden_section_search(|th| objective_value(cme, query, t, th), lower, upper, cfg.epsilon);
        evaluations += gs.evaluations;
        iterations += gs.iterations;
        let lower_hit = gs.argmin - lower < cfg.epsilon;
        let upper_hit = upper - gs.argmin < cfg.epsilon;
        let width = upper - lower;
        let movable_lower = lower_hit && !bounds.lower_fixed;
        let movable_upper = upper_hit && !bounds.upper_fixed;
        if (movable_lower || movable_upper) && restarts < cfg.max_restarts {
            restarts += 1;
            if movable_lower {
                lower -= cfg.expansion_factor * width;
            } else {
                upper += cfg.expansion_factor * width;
            }
            continue;
        }
        if movable_lower || movable_upper {
            warnings.push(NiltWarning::RestartBudgetExhausted);
        }
        break (gs.argmin, lower_hit, upper_hit);
    };
    if lower_hit && bounds.lower_fixed {
        warnings.push(NiltWarning::LowerBoundHit);
    }
    if upper_hit && bounds.upper_fixed {
        warnings.push(NiltWarning::UpperBoundHit);
    }
    let v = evaluate_nilt(cme, query, t, theta_hat)?;
    if v.accuracy_warning() {
        warnings.push(NiltWarning::ImaginaryResidue {
            ratio: v.imag_residue.abs() / v.value.abs(),
        });
    }
    Ok(NiltResult {
        value: v.value,
        theta_hat,
        objective_evals: evaluations,
        iterations,
        lower_bound_hit: lower_hit,
        upper_bound_hit: upper_hit,
        theta_lower: lower,
        theta_upper: upper,
        restarts,
        warnings,
    })
}

/// Euler-S: Euler coefficients evaluated at the CME-S shift. The shift was
/// chosen for a non-negative weight, which the Euler weight is not, so the
/// result always carries a caveat and an extra warning when it departs from
/// the CME-S value by more than 10%.
pub fn euler_s(
    query: &TransformQuery,
    t: f64,
    cme: &CoefficientSet,
    euler: &CoefficientSet,
    cfg: &ShiftSearchConfig,
) -> Result<NiltResult> {
    if euler.method() != Method::Euler {
        return Err(NiltError::InvalidArgument("euler_s needs Euler coefficients".into()));
    }
    let reference = cme_s(query, t, cme, cfg)?;
    let v = evaluate_nilt(euler, query, t, reference.theta_hat)?;
    let mut out = reference.clone();
    out.value = v.value;
    out.objective_evals += 1;
    out.warnings.retain(|w| !matches!(w, NiltWarning::ImaginaryResidue { .. }));
    if v.accuracy_warning() {
        out.warnings.push(NiltWarning::ImaginaryResidue {
            ratio: v.imag_residue.abs() / v.value.abs(),
        });
    }
    out.warnings.push(NiltWarning::EulerShiftUnverified);
    let relative_difference = (v.value - reference.value).abs() / reference.value.abs();
    if !(relative_difference <= 0.1) {
        out.warnings.push(NiltWarning::MethodDisagreement { relative_difference });
    }
    Ok(out)
}
