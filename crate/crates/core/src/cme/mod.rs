//! Concentrated matrix-exponential (CME) weight functions.
//!
//! A CME weight of order n is the density
//! `f(t) = c e^{-λt} Π_j cos²((ωλt - φ_j)/2)`, i.e. an exponential decay
//! times a non-negative trigonometric polynomial of degree n. Expanding the
//! product into its Laurent series gives the 2n + 1 exponential terms used by
//! the inversion formula.

mod cache;
mod optimize;
mod spectral;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{NiltError, Result};

pub use cache::{CmeCache, CmeRecord, CACHE_FORMAT, CACHE_VERSION, DEFAULT_CACHE_FILE};
pub use optimize::{generate_orders, optimize_cme, OptimizeOptions, OptimizeReport, MAX_CME_ORDER};
pub use spectral::{
    closed_form_moments, expand_spectral_form, laurent_by_convolution, laurent_by_dft, normalize, quadrature_scv,
    scv, LaurentSpectrum,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmeSpectralForm {
    pub c: f64,
    pub lambda: f64,
    pub omega: f64,
    pub phases: Vec<f64>,
}

impl CmeSpectralForm {
    /// Validates the invariants; phases must already lie in [0, 2π).
    pub fn new(c: f64, lambda: f64, omega: f64, phases: Vec<f64>) -> Result<Self> {
        let form = CmeSpectralForm {
            c,
            lambda,
            omega,
            phases,
        };
        form.validate()?;
        Ok(form)
    }

    /// Like [`CmeSpectralForm::new`] but reduces phases modulo 2π and sorts them.
    pub fn canonical(c: f64, lambda: f64, omega: f64, phases: &[f64]) -> Result<Self> {
        let mut p: Vec<f64> = phases.iter().map(|&x| wrap_phase(x)).collect();
        p.sort_by(f64::total_cmp);
        Self::new(c, lambda, omega, p)
    }

    pub fn order(&self) -> usize {
        self.phases.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |invariant: &str| {
            Err(NiltError::InvalidSpectralForm {
                invariant: invariant.to_string(),
            })
        };
        if !(self.c.is_finite() && self.c > 0.0) {
            return bad("c > 0");
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad("lambda > 0");
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return bad("omega > 0");
        }
        if self.phases.is_empty() {
            return bad("n >= 1");
        }
        if self.phases.len() > MAX_CME_ORDER {
            return bad("n <= 100");
        }
        if !self.phases.iter().all(|p| p.is_finite() && *p >= 0.0 && *p < TAU) {
            return bad("phases in [0, 2pi)");
        }
        Ok(())
    }

    /// The density in product form, which is non-negative by construction.
    pub fn density(&self, t: f64) -> f64 {
        self.shifted_density(t, 0.0)
    }

    /// e^{-θ(t-1)} times the density, with both exponentials combined.
    pub fn shifted_density(&self, t: f64, theta: f64) -> f64 {
        let u = self.omega * self.lambda * t;
        let g: f64 = self.phases.iter().map(|p| ((u - p) / 2.0).cos().powi(2)).product();
        self.c * (-self.lambda * t - theta * (t - 1.0)).exp() * g
    }

    /// Zeros of the density in (0, t_max], ascending. Each is a double zero.
    pub fn zeros(&self, t_max: f64) -> Vec<f64> {
        let rate = self.omega * self.lambda;
        let mut out = Vec::new();
        for p in &self.phases {
            let mut t = (p + std::f64::consts::PI) / rate;
            while t <= t_max {
                if t > 0.0 {
                    out.push(t);
                }
                t += TAU / rate;
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

pub(crate) fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_are_named() {
        let err = CmeSpectralForm::new(1.0, -1.0, 1.0, vec![0.5]).unwrap_err();
        assert_eq!(
            err,
            NiltError::InvalidSpectralForm {
                invariant: "lambda > 0".into()
            }
        );
        let err = CmeSpectralForm::new(1.0, 1.0, 1.0, vec![7.0]).unwrap_err();
        assert!(matches!(err, NiltError::InvalidSpectralForm { .. }));
        assert!(CmeSpectralForm::canonical(1.0, 1.0, 1.0, &[7.0, -0.5]).is_ok());
    }

    #[test]
    fn zeros_are_where_the_product_vanishes() {
        let f = CmeSpectralForm::canonical(2.0, 3.0, 0.7, &[0.3, 4.0]).unwrap();
        let z = f.zeros(5.0);
        assert!(!z.is_empty());
        for t in z {
            assert!(f.density(t) < 1e-25, "density({t}) = {}", f.density(t));
        }
    }
}
