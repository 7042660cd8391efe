use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;

use super::CmeSpectralForm;
use crate::error::{NiltError, Result};
use crate::framework::{CoefficientSet, Method};
use crate::quadrature::composite_gauss_legendre;

/// Laurent coefficients d_{-n..n} of g(u) = Π_j cos²((u - φ_j)/2) = Σ_k d_k e^{iku}.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSpectrum {
    coeffs: Vec<Complex64>,
}

impl LaurentSpectrum {
    pub fn order(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// d_k for -n <= k <= n.
    pub fn get(&self, k: isize) -> Complex64 {
        self.coeffs[(k + self.order() as isize) as usize]
    }

    /// Evaluates Σ_k d_k e^{iku}.
    pub fn eval(&self, u: f64) -> Complex64 {
        let n = self.order() as isize;
        (-n..=n).map(|k| self.get(k) * Complex64::from_polar(1.0, k as f64 * u)).sum()
    }
}

/// Multiplies out the factors 1/2 + (e^{i(u-φ)} + e^{-i(u-φ)})/4 one at a
/// time. Loses all accuracy in the outer coefficients once n reaches a few
/// tens (they come from cancelling O(1) partial products); kept as an
/// independent cross-check for small orders.
pub fn laurent_by_convolution(phases: &[f64]) -> LaurentSpectrum {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &phi in phases {
        let plus = Complex64::from_polar(0.25, -phi);
        let minus = plus.conj();
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 2];
        for (i, c) in coeffs.iter().enumerate() {
            next[i] += c * minus;
            next[i + 1] += c * 0.5;
            next[i + 2] += c * plus;
        }
        coeffs = next;
    }
    LaurentSpectrum { coeffs }
}

/// Exact discrete Fourier transform of g sampled at 2n + 1 equispaced points.
/// g is a trigonometric polynomial of degree n, so there is no aliasing and
/// every coefficient carries an absolute error of order ε max|g|.
pub fn laurent_by_dft(phases: &[f64]) -> LaurentSpectrum {
    let n = phases.len();
    let m = 2 * n + 1;
    let samples: Vec<f64> = (0..m)
        .map(|j| {
            let u = TAU * j as f64 / m as f64;
            phases.iter().map(|p| ((u - p) / 2.0).cos().powi(2)).product()
        })
        .collect();
    let twiddle: Vec<Complex64> = (0..m)
        .map(|r| Complex64::from_polar(1.0, -TAU * r as f64 / m as f64))
        .collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..=n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, g) in samples.iter().enumerate() {
            acc += twiddle[(k * j) % m] * *g;
        }
        let d = acc / m as f64;
        if k == 0 {
            coeffs[n] = Complex64::new(d.re, 0.0);
        } else {
            coeffs[n + k] = d;
            coeffs[n - k] = d.conj();
        }
    }
    LaurentSpectrum { coeffs }
}

/// Expands a spectral form into the 2n + 1 exponential terms
/// η = c d_k, β = λ(1 - ikω), laid out with positive-imaginary nodes first.
pub fn expand_spectral_form(form: &CmeSpectralForm) -> Result<CoefficientSet> {
    form.validate()?;
    let n = form.order();
    let d = laurent_by_dft(&form.phases);
    let len = 2 * n + 1;
    let mut weights = vec![Complex64::new(0.0, 0.0); len];
    let mut nodes = vec![Complex64::new(0.0, 0.0); len];
    weights[0] = Complex64::new(form.c * d.get(0).re, 0.0);
    nodes[0] = Complex64::new(form.lambda, 0.0);
    for j in 1..=n {
        let w = d.get(-(j as isize)) * form.c;
        let b = Complex64::new(form.lambda, form.lambda * form.omega * j as f64);
        weights[j] = w;
        nodes[j] = b;
        weights[len - j] = w.conj();
        nodes[len - j] = b.conj();
    }
    if weights.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
        return Err(NiltError::DegenerateSpectrum("non-finite weights".into()));
    }
    Ok(CoefficientSet::new(n, weights, nodes, Method::Cme)?.with_source(Arc::new(form.clone())))
}

/// Raw moments m_0, m_1, m_2 of the density from the spectral expansion:
/// m_j = j! Re Σ_k c d_k / β_k^{j+1}.
pub fn closed_form_moments(form: &CmeSpectralForm) -> Result<[f64; 3]> {
    form.validate()?;
    let d = laurent_by_dft(&form.phases);
    let n = form.order() as isize;
    let mut m = [Complex64::new(0.0, 0.0); 3];
    for k in -n..=n {
        let beta = Complex64::new(form.lambda, -form.lambda * form.omega * k as f64);
        let inv = 1.0 / beta;
        let dk = d.get(k) * form.c;
        m[0] += dk * inv;
        m[1] += dk * inv * inv;
        m[2] += dk * inv * inv * inv * 2.0;
    }
    let out = [m[0].re, m[1].re, m[2].re];
    if !(out[0] > 0.0) || !out.iter().all(|v| v.is_finite()) {
        return Err(NiltError::DegenerateSpectrum(format!("moments {out:?}")));
    }
    Ok(out)
}

/// Squared coefficient of variation from the closed-form moments. Invariant
/// under λ and c. Accurate for small orders only; beyond n ≈ 20 the sums
/// cancel badly and [`quadrature_scv`] should be preferred.
pub fn scv(form: &CmeSpectralForm) -> Result<f64> {
    let [m0, m1, m2] = closed_form_moments(form)?;
    Ok(m0 * m2 / (m1 * m1) - 1.0)
}

/// Cancellation-free SCV: the density is integrated in product form over one
/// period and the remaining periods are summed as geometric series.
pub fn quadrature_scv(form: &CmeSpectralForm) -> Result<f64> {
    form.validate()?;
    let mut x = Vec::with_capacity(form.order() + 1);
    x.push(1.0 / form.omega);
    x.extend_from_slice(&form.phases);
    let eval = super::optimize::ScvEvaluator::new(form.order());
    Ok(eval.value(&x).scv)
}

/// Rescales λ so the mean is 1, then c so the total mass is 1.
pub fn normalize(form: &CmeSpectralForm) -> Result<CmeSpectralForm> {
    let mut unit = form.clone();
    unit.lambda = 1.0;
    unit.c = 1.0;
    let [m0, m1, _] = closed_form_moments(&unit)?;
    let lambda = m1 / m0;
    let c = lambda / m0;
    let out = CmeSpectralForm {
        c,
        lambda,
        omega: form.omega,
        phases: form.phases.clone(),
    };
    out.validate()?;
    Ok(out)
}

/// Composite Gauss-Legendre nodes on one period [0, 2π] for order n.
pub(crate) fn period_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    composite_gauss_legendre(0.0, TAU, n + 8, 10)
}
