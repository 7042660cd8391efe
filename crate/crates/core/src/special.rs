//! Complex special functions used by the builtin transforms: the scaled
//! complementary error function and the exponential integral E1.

use std::f64::consts::FRAC_2_SQRT_PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::quadrature::composite_gauss_legendre;

const FRAC_1_SQRT_PI: f64 = FRAC_2_SQRT_PI / 2.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Complex exponential that keeps a zero imaginary part exactly zero, so an
/// overflowing real argument yields `inf + 0i` instead of `inf + NaN i`.
pub fn cexp(z: Complex64) -> Complex64 {
    let r = z.re.exp();
    if z.im == 0.0 {
        Complex64::new(r, 0.0)
    } else {
        Complex64::new(r * z.im.cos(), r * z.im.sin())
    }
}

/// erfcx(z) = exp(z^2) erfc(z), entire, principal values everywhere.
pub fn erfcx(z: Complex64) -> Complex64 {
    if z.re.is_nan() || z.im.is_nan() {
        return Complex64::new(f64::NAN, f64::NAN);
    }
    let r = z.norm();
    if r < 1.0 {
        return erfcx_maclaurin(z);
    }
    if z.re < 0.0 {
        return 2.0 * cexp(z * z) - erfcx_right(-z, r);
    }
    erfcx_right(z, r)
}

/// erfc(z) = exp(-z^2) erfcx(z).
pub fn erfc(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        cexp(-z * z) * erfcx(z)
    } else {
        // erfc(z) = 2 - erfc(-z) avoids exp(-z^2) * exp(z^2) overflow pairs.
        Complex64::new(2.0, 0.0) - cexp(-z * z) * erfcx(-z)
    }
}

fn erfcx_right(z: Complex64, r: f64) -> Complex64 {
    if r < 8.0 {
        erfcx_integral(z)
    } else {
        erfcx_continued_fraction(z, r)
    }
}

// sum_k (-z)^k / Gamma(k/2 + 1), with even and odd terms carried separately.
fn erfcx_maclaurin(z: Complex64) -> Complex64 {
    let z2 = z * z;
    let mut even = Complex64::new(1.0, 0.0);
    let mut odd = -z * FRAC_2_SQRT_PI;
    let mut sum = even + odd;
    let mut k = 0usize;
    while k < 400 {
        k += 2;
        even = even * z2 / (k as f64 / 2.0);
        odd = odd * z2 / ((k + 1) as f64 / 2.0);
        sum += even + odd;
        if even.norm() + odd.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

struct IntegralRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn integral_rule() -> &'static IntegralRule {
    static RULE: OnceLock<IntegralRule> = OnceLock::new();
    RULE.get_or_init(|| {
        // exp(-t^2) < 1e-18 beyond t = 6.5; 26 panels keep |2z| h / 2 <= 2.
        let (nodes, w) = composite_gauss_legendre(0.0, 6.5, 26, 12);
        let weights = nodes
            .iter()
            .zip(&w)
            .map(|(t, wi)| wi * (-t * t).exp() * FRAC_2_SQRT_PI)
            .collect();
        IntegralRule { nodes, weights }
    })
}

// (2/sqrt(pi)) * int_0^inf exp(-t^2 - 2 z t) dt for Re z >= 0, |z| < 8.
fn erfcx_integral(z: Complex64) -> Complex64 {
    let rule = integral_rule();
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += *w * cexp(-2.0 * z * *t);
    }
    acc
}

// Laplace continued fraction, evaluated bottom-up:
// erfcx(z) = 1/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))).
fn erfcx_continued_fraction(z: Complex64, r: f64) -> Complex64 {
    let depth = if r < 12.0 {
        60
    } else if r < 30.0 {
        30
    } else if r < 1e4 {
        12
    } else {
        3
    };
    let mut f = z;
    for k in (1..=depth).rev() {
        f = z + (k as f64 / 2.0) / f;
    }
    FRAC_1_SQRT_PI / f
}

/// Exponential integral E1(z) on the principal branch (cut along the negative real axis).
pub fn e1(z: Complex64) -> Complex64 {
    if z.norm() <= 2.0 {
        e1_series(z)
    } else {
        e1_scaled(z) * cexp(-z)
    }
}

/// exp(z) E1(z), which stays O(1/|z|) where E1 itself under- or overflows.
pub fn e1_scaled(z: Complex64) -> Complex64 {
    if z.norm() <= 2.0 {
        cexp(z) * e1_series(z)
    } else {
        e1_scaled_continued_fraction(z)
    }
}

fn e1_series(z: Complex64) -> Complex64 {
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..200 {
        term = term * (-z) / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

fn e1_scaled_continued_fraction(z: Complex64) -> Complex64 {
    e1_continued_fraction_tail(z, 0)
}

/// The continued fraction 1/(z+2m+1 - (m+1)²/(z+2m+3 - (m+2)²/(z+2m+5 - ...))),
/// by modified Lentz. m = 0 gives exp(z) E1(z); m = 1 is the tail R with
/// exp(z) E1(z) = 1/(z + 1 - R), which lets callers cancel the leading
/// asymptotic terms analytically.
pub(crate) fn e1_continued_fraction_tail(z: Complex64, m: usize) -> Complex64 {
    const TINY: f64 = 1e-300;
    let tiny = Complex64::new(TINY, 0.0);
    let mut b = z + (2 * m + 1) as f64;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = if b.norm() == 0.0 { 1.0 / tiny } else { 1.0 / b };
    let mut h = d;
    for i in 1..20_000 {
        let a = -(((m + i) * (m + i)) as f64);
        b += 2.0;
        d = a * d + b;
        if d.norm() == 0.0 {
            d = tiny;
        }
        d = 1.0 / d;
        c = b + a / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn erfcx_known_real_values() {
        // erfc(1) * e, erfc(0) and the 1/(x sqrt(pi)) asymptote.
        assert!((erfcx(c(0.0, 0.0)) - 1.0).norm() < 1e-16);
        assert!((erfcx(c(1.0, 0.0)).re - 0.427_583_576_155_807).abs() < 1e-15);
        assert!((erfcx(c(10.0, 0.0)).re - 0.056_140_992_743_822_59).abs() < 1e-15);
        let big = 1e8;
        assert!((erfcx(c(big, 0.0)).re * big / FRAC_1_SQRT_PI - 1.0).abs() < 1e-15);
    }

    #[test]
    fn neighbouring_regions_agree_on_their_boundary() {
        for angle in [0.0f64, 0.3, 0.9, 1.4, 1.57, -0.5, -1.3] {
            let z = c(angle.cos(), angle.sin());
            let (a, b) = (erfcx_maclaurin(z), erfcx_integral(z));
            assert!((a - b).norm() <= 1e-14 * a.norm(), "|z|=1 angle={angle}: {a} vs {b}");
            let z = z * 8.0;
            let (a, b) = (erfcx_integral(z), erfcx_continued_fraction(z, 8.0));
            assert!((a - b).norm() <= 1e-14 * a.norm(), "|z|=8 angle={angle}: {a} vs {b}");
        }
    }

    #[test]
    fn e1_regions_agree_at_the_switch() {
        for angle in [0.0f64, 0.7, 1.5, -1.2, 2.5] {
            let z = c(2.0 * angle.cos(), 2.0 * angle.sin());
            let series = cexp(z) * e1_series(z);
            let cf = e1_scaled_continued_fraction(z);
            assert!((series - cf).norm() < 1e-13 * cf.norm(), "angle={angle}: {series} vs {cf}");
        }
    }

    #[test]
    fn cexp_real_overflow_has_no_nan() {
        let v = cexp(c(1000.0, 0.0));
        assert!(v.re.is_infinite() && v.im == 0.0);
    }
}
