//! Euler-summation coefficients for even orders.

use num_complex::Complex64;

use crate::error::{NiltError, Result};
use crate::framework::{CoefficientSet, Method};

/// Largest even order whose binomial partial sums fit exactly in a u128.
pub const MAX_EULER_ORDER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct EulerRecipe {
    pub n: usize,
    pub alpha: f64,
    /// ξ_1..ξ_n (index k - 1 holds ξ_k).
    pub xi: Vec<f64>,
}

impl EulerRecipe {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || n % 2 == 1 {
            return Err(NiltError::EulerOddOrder(n));
        }
        if n > MAX_EULER_ORDER {
            return Err(NiltError::OrderOutOfRange {
                order: n,
                min: 2,
                max: MAX_EULER_ORDER,
            });
        }
        let m = n / 2;
        let alpha = n as f64 * std::f64::consts::LN_10 / 6.0;
        let scale = 0.5f64.powi(m as i32);
        let mut xi = vec![1.0; n];
        // ξ_{n-k} = 2^{-m} Σ_{j=0}^{k} C(m, j) for 0 <= k < m; the partial
        // sums are accumulated exactly and scaled once.
        let mut binom: u128 = 1;
        let mut partial: u128 = 0;
        for k in 0..m {
            if k > 0 {
                binom = binom * (m - k + 1) as u128 / k as u128;
            }
            partial += binom;
            xi[n - k - 1] = partial as f64 * scale;
        }
        Ok(EulerRecipe { n, alpha, xi })
    }

    pub fn xi(&self, k: usize) -> f64 {
        self.xi[k - 1]
    }
}

/// Euler coefficients of order n: β_0 = α, β_k = α + iπk, with weights
/// η_0 = e^α / 2 and η_k = (-1)^k e^α ξ_k / 2, expanded with conjugates.
pub fn euler_coefficients(n: usize) -> Result<CoefficientSet> {
    let recipe = EulerRecipe::new(n)?;
    let ea = recipe.alpha.exp();
    let len = 2 * n + 1;
    let mut weights = vec![Complex64::new(0.0, 0.0); len];
    let mut nodes = vec![Complex64::new(0.0, 0.0); len];
    weights[0] = Complex64::new(ea / 2.0, 0.0);
    nodes[0] = Complex64::new(recipe.alpha, 0.0);
    for k in 1..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let w = Complex64::new(sign * ea * recipe.xi(k) / 2.0, 0.0);
        let b = Complex64::new(recipe.alpha, std::f64::consts::PI * k as f64);
        weights[k] = w;
        nodes[k] = b;
        weights[len - k] = w.conj();
        nodes[len - k] = b.conj();
    }
    CoefficientSet::new(n, weights, nodes, Method::Euler)
}
