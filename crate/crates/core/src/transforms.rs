//! Builtin Laplace-transform pairs with closed-form time-domain oracles.

use std::sync::Arc;

use num_complex::Complex64;

use crate::framework::{OracleFn, TransformFn, TransformQuery};
use crate::special::{cexp, e1_continued_fraction_tail, e1_scaled, erfcx};

const SQRT_PI_OVER_2: f64 = 0.886_226_925_452_758;

#[derive(Clone)]
pub struct TestPair {
    pub name: &'static str,
    pub description: &'static str,
    pub transform: TransformFn,
    pub oracle: OracleFn,
    pub abscissa: f64,
    pub bounded: bool,
    /// False when h has jumps; quadrature checks then need care.
    pub smooth: bool,
    /// Points where h jumps (for the periodic square wave, the first few).
    pub jumps: &'static [f64],
}

impl std::fmt::Debug for TestPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestPair")
            .field("name", &self.name)
            .field("abscissa", &self.abscissa)
            .field("bounded", &self.bounded)
            .field("smooth", &self.smooth)
            .finish()
    }
}

impl TestPair {
    pub fn query(&self) -> TransformQuery {
        TransformQuery {
            transform: self.transform.clone(),
            abscissa: self.abscissa,
            bounded: self.bounded,
            oracle: Some(self.oracle.clone()),
        }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        (self.transform)(s)
    }

    pub fn exact(&self, t: f64) -> f64 {
        (self.oracle)(t)
    }
}

/// (√π/2) erfcx(s/2), the transform of e^{-t²}.
pub fn exp_t2_transform(s: Complex64) -> Complex64 {
    SQRT_PI_OVER_2 * erfcx(s / 2.0)
}

pub fn exp_t_transform(s: Complex64) -> Complex64 {
    1.0 / (1.0 + s)
}

/// 1/s - (√π/2) s^{-3/2} erfcx(1/(2√s)), the transform of e^{-√t}.
pub fn exp_sqrt_t_transform(s: Complex64) -> Complex64 {
    let r = s.sqrt();
    1.0 / s - SQRT_PI_OVER_2 * erfcx(0.5 / r) / (s * r)
}

/// 1 - s + s² e^s E1(s), the transform of 2/(1+t)³.
///
/// For large |s| the three terms cancel down to about 2/s. There the
/// continued-fraction tail R of e^s E1(s) = 1/(s + 1 - R) gives the
/// cancellation-free form (1 + (s - 1)R) / (s + 1 - R).
pub fn poly3_transform(s: Complex64) -> Complex64 {
    if s.norm() <= 2.0 {
        return 1.0 - s + s * s * e1_scaled(s);
    }
    let r = e1_continued_fraction_tail(s, 1);
    (1.0 + (s - 1.0) * r) / (s + 1.0 - r)
}

pub fn sin_plus_1_transform(s: Complex64) -> Complex64 {
    1.0 / (1.0 + s * s) + 1.0 / s
}

pub fn delayed_exp_transform(s: Complex64) -> Complex64 {
    cexp(-s) / (1.0 + s)
}

/// 1/(s(1 + e^s)), written with e^{-s} on the right half-plane so large Re s
/// does not overflow.
pub fn square_wave_transform(s: Complex64) -> Complex64 {
    if s.re > 0.0 {
        let e = cexp(-s);
        e / (s * (e + 1.0))
    } else {
        1.0 / (s * (1.0 + cexp(s)))
    }
}

fn square_wave(t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    (t.floor() as u64 % 2) as f64
}

fn delayed_exp(t: f64) -> f64 {
    if t < 1.0 {
        0.0
    } else {
        (1.0 - t).exp()
    }
}

fn pair(
    name: &'static str,
    description: &'static str,
    transform: fn(Complex64) -> Complex64,
    oracle: fn(f64) -> f64,
    abscissa: f64,
    smooth: bool,
    jumps: &'static [f64],
) -> TestPair {
    TestPair {
        name,
        description,
        transform: Arc::new(transform),
        oracle: Arc::new(oracle),
        abscissa,
        bounded: true,
        smooth,
        jumps,
    }
}

/// All builtin pairs, in a fixed order.
pub fn builtin_pairs() -> Vec<TestPair> {
    vec![
        pair("exp-t2", "h(t) = exp(-t^2)", exp_t2_transform, |t| (-t * t).exp(), f64::NEG_INFINITY, true, &[]),
        pair("exp-t", "h(t) = exp(-t)", exp_t_transform, |t| (-t).exp(), -1.0, true, &[]),
        pair("exp-sqrt-t", "h(t) = exp(-sqrt(t))", exp_sqrt_t_transform, |t| (-t.sqrt()).exp(), 0.0, true, &[]),
        pair("poly3", "h(t) = 2/(1+t)^3", poly3_transform, |t| 2.0 / (1.0 + t).powi(3), 0.0, true, &[]),
        pair("sin-plus-1", "h(t) = sin(t) + 1", sin_plus_1_transform, |t| t.sin() + 1.0, 0.0, true, &[]),
        pair("delayed-exp", "h(t) = U(t-1) exp(1-t)", delayed_exp_transform, delayed_exp, -1.0, false, &[1.0]),
        pair(
            "square-wave",
            "h(t) = floor(t) mod 2",
            square_wave_transform,
            square_wave,
            0.0,
            false,
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        ),
    ]
}

pub fn builtin(name: &str) -> Option<TestPair> {
    builtin_pairs().into_iter().find(|p| p.name == name)
}

pub fn builtin_names() -> Vec<&'static str> {
    builtin_pairs().iter().map(|p| p.name).collect()
}
