//! The abstract weighted-sum inversion formula shared by every method:
//!
//! h_N(T, θ) = Σ_k (e^θ η_k / T) h*((β_k + θ) / T)
//!
//! Coefficient sets are stored fully expanded (N = 2n + 1 entries) in the
//! layout `[k = 0, k = 1..n, conjugates of k = n..1]`, so every sum runs over
//! the whole vector and symmetric pairs cancel their imaginary parts.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cme::CmeSpectralForm;
use crate::error::{NiltError, Result};
use crate::special::cexp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euler,
    Cme,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Euler => "euler",
            Method::Cme => "cme",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    order: usize,
    weights: Vec<Complex64>,
    nodes: Vec<Complex64>,
    method: Method,
    shift: f64,
    source: Option<Arc<CmeSpectralForm>>,
}

impl CoefficientSet {
    /// Builds a set from fully expanded weights and nodes, checking the
    /// `[0, 1..n, n..1 conjugated]` layout.
    pub fn new(order: usize, weights: Vec<Complex64>, nodes: Vec<Complex64>, method: Method) -> Result<Self> {
        let len = 2 * order + 1;
        if weights.len() != len || nodes.len() != len {
            return Err(NiltError::MalformedCoefficients(format!(
                "order {order} needs {len} weights and nodes, got {} and {}",
                weights.len(),
                nodes.len()
            )));
        }
        if weights.iter().chain(&nodes).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NiltError::MalformedCoefficients("non-finite weight or node".into()));
        }
        let close = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-12 * a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
        if weights[0].im.abs() > 1e-12 * weights[0].norm() || nodes[0].im.abs() > 1e-12 * nodes[0].norm() {
            return Err(NiltError::MalformedCoefficients("entry 0 must be real".into()));
        }
        for k in 1..=order {
            let j = len - k;
            if !close(weights[j], weights[k].conj()) || !close(nodes[j], nodes[k].conj()) {
                return Err(NiltError::MalformedCoefficients(format!(
                    "entry {j} is not the conjugate of entry {k}"
                )));
            }
        }
        Ok(CoefficientSet {
            order,
            weights,
            nodes,
            method,
            shift: 0.0,
            source: None,
        })
    }

    pub(crate) fn with_source(mut self, source: Arc<CmeSpectralForm>) -> Self {
        self.source = Some(source);
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of terms N = 2n + 1.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Accumulated shift θ if the set came out of [`shift_coefficients`].
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// The CME spectral form the set was expanded from, if any.
    pub fn spectral_form(&self) -> Option<&CmeSpectralForm> {
        self.source.as_deref()
    }

    /// μ = max_k Re(β_k).
    pub fn dominant_real_part(&self) -> f64 {
        self.nodes.iter().map(|b| b.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_real_part(&self) -> f64 {
        self.nodes.iter().map(|b| b.re).fold(f64::INFINITY, f64::min)
    }

    pub fn max_weight_modulus(&self) -> f64 {
        self.weights.iter().map(|w| w.norm()).fold(0.0, f64::max)
    }

    pub fn shifted(&self, theta: f64) -> CoefficientSet {
        shift_coefficients(self, theta)
    }

    pub fn weight(&self, t: f64) -> f64 {
        weight_function_value(self, t)
    }

    /// f_N(t) with its imaginary residue and the sum of term moduli, the
    /// scale against which rounding in the sum should be judged.
    pub fn weight_detail(&self, t: f64) -> WeightValue {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for (eta, beta) in self.weights.iter().zip(&self.nodes) {
            let term = eta * cexp(-beta * t);
            scale += term.norm();
            sum += term;
        }
        WeightValue {
            value: sum.re,
            imag_residue: sum.im,
            scale,
        }
    }

    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        weight_integral(self, lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightValue {
    pub value: f64,
    pub imag_residue: f64,
    pub scale: f64,
}

/// Applies the shift θ: η_k ← e^θ η_k, β_k ← β_k + θ.
///
/// The shifted weight function satisfies f_{N,θ}(t) = e^{-θ(t-1)} f_N(t).
pub fn shift_coefficients(coeffs: &CoefficientSet, theta: f64) -> CoefficientSet {
    let factor = theta.exp();
    CoefficientSet {
        order: coeffs.order,
        weights: coeffs.weights.iter().map(|w| w * factor).collect(),
        nodes: coeffs.nodes.iter().map(|b| b + theta).collect(),
        method: coeffs.method,
        shift: coeffs.shift + theta,
        source: coeffs.source.clone(),
    }
}

pub fn weight_function_value(coeffs: &CoefficientSet, t: f64) -> f64 {
    coeffs.weight_detail(t).value
}

/// ∫_lo^hi f_N(t) dt in closed form; `hi` may be +∞ when every node has a
/// positive real part.
pub fn weight_integral(coeffs: &CoefficientSet, lo: f64, hi: f64) -> Result<f64> {
    if !(lo >= 0.0) || !(hi >= lo) || lo.is_infinite() {
        return Err(NiltError::InvalidArgument(format!("integration range [{lo}, {hi}] is not valid")));
    }
    if hi.is_infinite() {
        if let Some((index, beta)) = coeffs.nodes.iter().enumerate().find(|(_, b)| b.re <= 0.0) {
            return Err(NiltError::DivergentTail { index, re: beta.re });
        }
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for (eta, beta) in coeffs.weights.iter().zip(&coeffs.nodes) {
        let upper = if hi.is_infinite() { Complex64::new(0.0, 0.0) } else { cexp(-beta * hi) };
        let span = cexp(-beta * lo) - upper;
        sum += if beta.norm() == 0.0 {
            eta * (hi - lo)
        } else {
            eta * span / beta
        };
    }
    Ok(sum.re)
}

pub type TransformFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;
pub type OracleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A Laplace transform h*(s) with its convergence abscissa a (h* is analytic
/// for Re s > a; `f64::NEG_INFINITY` when entire), an optional hint that h is
/// bounded, and an optional time-domain oracle h(t).
#[derive(Clone)]
pub struct TransformQuery {
    pub transform: TransformFn,
    pub abscissa: f64,
    pub bounded: bool,
    pub oracle: Option<OracleFn>,
}

impl fmt::Debug for TransformQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformQuery")
            .field("abscissa", &self.abscissa)
            .field("bounded", &self.bounded)
            .field("oracle", &self.oracle.is_some())
            .finish()
    }
}

impl TransformQuery {
    pub fn new(transform: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static, abscissa: f64) -> Self {
        TransformQuery {
            transform: Arc::new(transform),
            abscissa,
            bounded: false,
            oracle: None,
        }
    }

    pub fn bounded(mut self, bounded: bool) -> Self {
        self.bounded = bounded;
        self
    }

    pub fn with_oracle(mut self, oracle: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.oracle = Some(Arc::new(oracle));
        self
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        (self.transform)(s)
    }
}

/// A single evaluation of the weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NiltValue {
    pub value: f64,
    pub imag_residue: f64,
    /// Σ |term|; the value cannot be trusted below roughly 1e-16 of this.
    pub term_scale: f64,
}

impl NiltValue {
    /// True when the imaginary residue exceeds 1e-8 of the real part,
    /// meaning the value is dominated by cancellation between terms.
    pub fn accuracy_warning(&self) -> bool {
        self.imag_residue.abs() > 1e-8 * self.value.abs()
    }
}

/// Evaluates h_N(T, θ) with the coefficients shifted by θ.
pub fn evaluate_nilt(coeffs: &CoefficientSet, query: &TransformQuery, t: f64, theta: f64) -> Result<NiltValue> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(NiltError::InvalidTime(t));
    }
    let factor = theta.exp() / t;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (index, (eta, beta)) in coeffs.weights.iter().zip(&coeffs.nodes).enumerate() {
        let s = (beta + theta) / t;
        if !(s.re > query.abscissa) {
            return Err(NiltError::NodeOutsideConvergence {
                index,
                re_s: s.re,
                abscissa: query.abscissa,
            });
        }
        let h = query.eval(s);
        if !h.re.is_finite() || !h.im.is_finite() {
            return Err(NiltError::NonFiniteTransform { index, s });
        }
        if h.re == 0.0 && h.im == 0.0 {
            // Skipped so that an overflowing e^θ cannot turn an exact zero into NaN.
            continue;
        }
        let term = eta * factor * h;
        scale += term.norm();
        sum += term;
    }
    if !sum.re.is_finite() {
        return Err(NiltError::NonFiniteSum { theta });
    }
    Ok(NiltValue {
        value: sum.re,
        imag_residue: sum.im,
        term_scale: scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NiltWarning {
    /// θ̂ sits on the hard lower bound set by the convergence abscissa.
    LowerBoundHit,
    /// θ̂ sits on the upper bound and it was not expanded further.
    UpperBoundHit,
    /// An arbitrary bound was still hit after the last allowed expansion.
    RestartBudgetExhausted,
    /// |Im h_N| > 1e-8 |Re h_N|: the value is swamped by cancellation.
    ImaginaryResidue { ratio: f64 },
    /// Euler weights evaluated at a shift chosen for CME weights.
    EulerShiftUnverified,
    /// The Euler-S value differs from the CME-S value by more than 10%.
    MethodDisagreement { relative_difference: f64 },
}

/// Outcome of a shifted inversion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiltResult {
    pub value: f64,
    pub theta_hat: f64,
    pub objective_evals: usize,
    pub iterations: usize,
    pub lower_bound_hit: bool,
    pub upper_bound_hit: bool,
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub restarts: usize,
    pub warnings: Vec<NiltWarning>,
}

impl NiltResult {
    pub fn has_bound_warning(&self) -> bool {
        self.warnings.iter().any(|w| {
            matches!(
                w,
                NiltWarning::LowerBoundHit | NiltWarning::UpperBoundHit | NiltWarning::RestartBudgetExhausted
            )
        })
    }
}
