//! Numerical inverse Laplace transforms in the weighted-sum form
//! h(T) ≈ Σ_k (η_k / T) h*(β_k / T), with Euler and CME coefficient sets,
//! an exponential shift θ of the nodes, and a golden-section search that
//! picks θ per query.
//!
//! ```
//! use nilt::{cme_s, transforms::builtin, CmeCache, ShiftSearchConfig};
//!
//! let cme = CmeCache::builtin().coefficients(30).unwrap();
//! let pair = builtin("exp-t").unwrap();
//! let r = cme_s(&pair.query(), 10.0, &cme, &ShiftSearchConfig::default()).unwrap();
//! assert!((r.value / (-10.0f64).exp() - 1.0).abs() < 1e-3);
//! ```

// Guards such as `!(x > 0.0)` are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cme;
pub mod error;
pub mod euler;
pub mod expr;
pub mod framework;
pub mod quadrature;
pub mod shift;
pub mod special;
pub mod transforms;
pub mod weights;

pub use cme::{expand_spectral_form, optimize_cme, CmeCache, CmeSpectralForm, OptimizeOptions};
pub use error::{NiltError, Result};
pub use euler::euler_coefficients;
pub use expr::{ExprError, Expression};
pub use framework::{
    evaluate_nilt, shift_coefficients, weight_function_value, weight_integral, CoefficientSet, Method, NiltResult,
    NiltValue, NiltWarning, TransformQuery,
};
pub use shift::{cme_s, euler_s, golden_section_search, theta_bounds, ShiftSearchConfig, UpperRule};
pub use weights::{decompose_estimate, decompose_weight, find_zeros, quadrature_oracle};
