//! SCV minimisation for CME spectral forms.
//!
//! The optimiser works in the variables x = [ρ, φ_1..φ_n] with ρ = 1/ω, on
//! the time-rescaled density e^{-ρu} g(u), g(u) = Π cos²((u - φ_j)/2). The SCV
//! does not depend on the time scale, so λ and c are fixed afterwards by
//! normalisation.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spectral::{normalize, period_rule};
use super::{wrap_phase, CmeSpectralForm};
use crate::error::{NiltError, Result};

pub const MAX_CME_ORDER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ScvValue {
    pub scv: f64,
    pub mean_u: f64,
}

/// SCV of e^{-ρu} g(u) and its gradient. One period of g is integrated by a
/// composite Gauss-Legendre rule; the sum over all periods is folded into the
/// weights W_m(s) = Σ_j e^{-ρjP} (s + jP)^m, which have closed forms.
pub(crate) struct ScvEvaluator {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

struct PeriodSums {
    a: [f64; 4],
}

impl PeriodSums {
    fn new(rho: f64) -> Self {
        let q = (-rho * TAU).exp();
        let om = -(-rho * TAU).exp_m1();
        PeriodSums {
            a: [
                1.0 / om,
                q / (om * om),
                q * (1.0 + q) / (om * om * om),
                q * (1.0 + 4.0 * q + q * q) / (om * om * om * om),
            ],
        }
    }

    /// W_0..W_3 at offset s within the period.
    fn w(&self, s: f64) -> [f64; 4] {
        let [a0, a1, a2, a3] = self.a;
        let p = TAU;
        [
            a0,
            s * a0 + p * a1,
            s * s * a0 + 2.0 * s * p * a1 + p * p * a2,
            s * s * s * a0 + 3.0 * s * s * p * a1 + 3.0 * s * p * p * a2 + p * p * p * a3,
        ]
    }
}

impl ScvEvaluator {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = period_rule(n);
        ScvEvaluator { nodes, weights }
    }

    pub fn value(&self, x: &[f64]) -> ScvValue {
        self.evaluate(x, None)
    }

    /// Returns the SCV and fills `grad`; +∞ when ρ is not positive.
    pub fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluate(x, Some(grad)).scv
    }

    fn evaluate(&self, x: &[f64], grad: Option<&mut [f64]>) -> ScvValue {
        let rho = x[0];
        let phases = &x[1..];
        let n = phases.len();
        if !(rho > 0.0) || !rho.is_finite() {
            return ScvValue {
                scv: f64::INFINITY,
                mean_u: f64::NAN,
            };
        }
        let sums = PeriodSums::new(rho);
        let q = self.nodes.len();
        let mut eg = Vec::with_capacity(q);
        let (mut mu0, mut mu1) = (0.0, 0.0);
        for (s, w) in self.nodes.iter().zip(&self.weights) {
            let g: f64 = phases.iter().map(|p| ((s - p) * 0.5).cos().powi(2)).product();
            let e = w * (-rho * s).exp();
            let ws = sums.w(*s);
            mu0 += e * g * ws[0];
            mu1 += e * g * ws[1];
            eg.push((e, g, ws));
        }
        let m = mu1 / mu0;
        let mut c2 = 0.0;
        for (e, g, ws) in &eg {
            // Σ_j q^j (s + jP - m)^2, a positive integrand: no cancellation.
            let wc = ws[2] - 2.0 * m * ws[1] + m * m * ws[0];
            c2 += e * g * wc;
        }
        let scv = mu0 * c2 / (mu1 * mu1);
        let out = ScvValue { scv, mean_u: m };
        let Some(grad) = grad else {
            return out;
        };

        let (mut dmu0, mut dmu1, mut dc2) = (0.0, 0.0, 0.0);
        grad.iter_mut().for_each(|v| *v = 0.0);
        let mut factors = vec![0.0; n];
        let mut prefix = vec![1.0; n + 1];
        let mut suffix = vec![1.0; n + 1];
        let inv_mu1_sq = 1.0 / (mu1 * mu1);
        for (i, (e, g, ws)) in eg.iter().enumerate() {
            let s = self.nodes[i];
            let wc = ws[2] - 2.0 * m * ws[1] + m * m * ws[0];
            let wc3 = ws[3] - 2.0 * m * ws[2] + m * m * ws[1];
            // d(e^{-ρs} W_k)/dρ = -e^{-ρs} W_{k+1}
            dmu0 -= e * g * ws[1];
            dmu1 -= e * g * ws[2];
            dc2 -= e * g * wc3;

            let coef = e * (ws[0] * c2 * inv_mu1_sq + mu0 * wc * inv_mu1_sq - 2.0 * scv * ws[1] / mu1);
            for (f, p) in factors.iter_mut().zip(phases) {
                *f = ((s - p) * 0.5).cos().powi(2);
            }
            for j in 0..n {
                prefix[j + 1] = prefix[j] * factors[j];
            }
            for j in (0..n).rev() {
                suffix[j] = suffix[j + 1] * factors[j];
            }
            for j in 0..n {
                let dg = prefix[j] * suffix[j + 1] * (s - phases[j]).sin() * 0.5;
                grad[j + 1] += coef * dg;
            }
        }
        grad[0] = (dmu0 * c2 + mu0 * dc2) * inv_mu1_sq - 2.0 * scv * dmu1 / mu1;
        out
    }
}

#[derive(Debug, Clone)]
struct LocalOutcome {
    x: Vec<f64>,
    f: f64,
    evaluations: usize,
    converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS with a backtracking Armijo line search. Converged means the gradient
/// fell below `rel_gtol * f` (gradient relative to the objective).
fn bfgs(eval: &ScvEvaluator, x0: Vec<f64>, budget: usize, rel_gtol: f64) -> LocalOutcome {
    let d = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; d];
    let mut f = eval.value_grad(&x, &mut g);
    let mut evaluations = 1;
    let identity = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..d {
            h[i * d + i] = 1.0;
        }
    };
    let mut h = vec![0.0; d * d];
    identity(&mut h);
    let mut fresh = true;
    let mut p = vec![0.0; d];
    let mut xn = vec![0.0; d];
    let mut gn = vec![0.0; d];
    let mut hy = vec![0.0; d];
    let mut converged = false;
    let mut stalled = 0;

    while evaluations < budget {
        if !f.is_finite() {
            break;
        }
        if inf_norm(&g) <= rel_gtol * f {
            converged = true;
            break;
        }
        for i in 0..d {
            p[i] = -(0..d).map(|j| h[i * d + j] * g[j]).sum::<f64>();
        }
        let mut slope = dot(&g, &p);
        if !(slope < 0.0) {
            identity(&mut h);
            fresh = true;
            p.iter_mut().zip(&g).for_each(|(pi, gi)| *pi = -gi);
            slope = dot(&g, &p);
        }
        let pmax = inf_norm(&p);
        let mut alpha = if pmax > 1.0 { 1.0 / pmax } else { 1.0 };
        let mut fnew;
        let mut accepted = false;
        loop {
            for i in 0..d {
                xn[i] = x[i] + alpha * p[i];
            }
            fnew = eval.value_grad(&xn, &mut gn);
            evaluations += 1;
            if fnew.is_finite() && fnew <= f + 1e-4 * alpha * slope {
                accepted = true;
                break;
            }
            if evaluations >= budget || alpha < 1e-16 {
                break;
            }
            // Quadratic interpolation of the step, kept within [0.1, 0.5] alpha.
            let next = if fnew.is_finite() {
                let denom = 2.0 * (fnew - f - alpha * slope);
                if denom > 0.0 {
                    (-slope * alpha * alpha / denom).clamp(0.1 * alpha, 0.5 * alpha)
                } else {
                    0.5 * alpha
                }
            } else {
                0.1 * alpha
            };
            alpha = next;
        }
        if !accepted {
            if fresh {
                // Steepest descent cannot make progress either: rounding floor.
                converged = inf_norm(&g) <= 1e-5 * f;
                break;
            }
            identity(&mut h);
            fresh = true;
            continue;
        }
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                identity(&mut h);
                h.iter_mut().for_each(|v| *v *= scale);
                fresh = false;
            }
            let r = 1.0 / sy;
            for i in 0..d {
                hy[i] = (0..d).map(|j| h[i * d + j] * y[j]).sum();
            }
            let yhy = dot(&y, &hy);
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] += (1.0 + yhy * r) * r * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        if f - fnew <= 1e-14 * f {
            stalled += 1;
        } else {
            stalled = 0;
        }
        x.copy_from_slice(&xn);
        g.copy_from_slice(&gn);
        f = fnew;
        if stalled >= 10 {
            // No measurable progress: we are at the rounding floor of the SCV.
            converged = inf_norm(&g) <= 1e-5 * f;
            break;
        }
    }
    LocalOutcome {
        x,
        f,
        evaluations,
        converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub seed: u64,
    /// Starts drawn uniformly: ρ ~ U(1, 3), phases ~ U(0, 2π).
    pub random_starts: usize,
    /// Starts derived from a lower-order optimum, when one is supplied.
    pub continuation_starts: usize,
    /// Total SCV evaluations across all starts.
    pub max_evaluations: usize,
    /// Convergence when |∇SCV|_∞ <= tolerance * SCV.
    pub gradient_tolerance: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            seed: 0x5eed_c0de,
            random_starts: 8,
            continuation_starts: 4,
            max_evaluations: 400_000,
            gradient_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeReport {
    /// Normalised to mean 1 and mass 1.
    pub form: CmeSpectralForm,
    /// SCV from the cancellation-free quadrature.
    pub scv: f64,
    pub evaluations: usize,
    pub starts: usize,
    pub seed: u64,
}

/// Positions of the zeros relative to the density peak within one period.
fn relative_zeros(form: &CmeSpectralForm) -> (Vec<f64>, f64) {
    let rho = 1.0 / form.omega;
    let grid = 20_000;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..grid {
        let u = TAU * i as f64 / grid as f64;
        let lg: f64 = -rho * u
            + form
                .phases
                .iter()
                .map(|p| (((u - p) * 0.5).cos().powi(2) + 1e-300).ln())
                .sum::<f64>();
        if lg > best.0 {
            best = (lg, u);
        }
    }
    let peak = best.1;
    let mut z: Vec<f64> = form
        .phases
        .iter()
        .map(|p| (p + std::f64::consts::PI - peak).rem_euclid(TAU))
        .collect();
    z.sort_by(f64::total_cmp);
    (z, peak)
}

/// Start for order n from a lower-order optimum: interpolate the quantiles of
/// its zero positions (relative to the peak) and scale ρ mildly.
fn continuation_start(prev: &CmeSpectralForm, n: usize, jitter: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (z, peak) = relative_zeros(prev);
    let m = z.len();
    let interp = |q: f64| -> f64 {
        let pos = q * m as f64 - 0.5;
        if pos <= 0.0 {
            return z[0];
        }
        if pos >= (m - 1) as f64 {
            return z[m - 1];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        z[i] * (1.0 - frac) + z[i + 1] * frac
    };
    let mut x = Vec::with_capacity(n + 1);
    x.push((1.0 / prev.omega) * (n as f64 / m as f64).powf(0.2));
    for k in 0..n {
        let q = (k as f64 + 0.5) / n as f64;
        let noise: f64 = if jitter > 0.0 {
            rng.gen_range(-1.0..1.0) * jitter * TAU / n as f64
        } else {
            0.0
        };
        x.push(wrap_phase(interp(q) + noise - std::f64::consts::PI + peak));
    }
    x
}

fn random_start(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = Vec::with_capacity(n + 1);
    x.push(rng.gen_range(1.0..3.0));
    let mut phases: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
    phases.sort_by(f64::total_cmp);
    x.extend(phases);
    x
}

fn to_form(x: &[f64]) -> Result<CmeSpectralForm> {
    let raw = CmeSpectralForm::canonical(1.0, 1.0, 1.0 / x[0], &x[1..])?;
    normalize(&raw)
}

/// Minimises the SCV over order-n spectral forms from several deterministic
/// starts and returns the best, normalised to mean 1 and mass 1.
pub fn optimize_cme(n: usize, options: &OptimizeOptions, warm_start: Option<&CmeSpectralForm>) -> Result<OptimizeReport> {
    if n == 0 || n > MAX_CME_ORDER {
        return Err(NiltError::OrderOutOfRange {
            order: n,
            min: 1,
            max: MAX_CME_ORDER,
        });
    }
    let eval = ScvEvaluator::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(prev) = warm_start {
        for k in 0..options.continuation_starts {
            let jitter = if k == 0 { 0.0 } else { 0.25 };
            starts.push(continuation_start(prev, n, jitter, &mut rng));
        }
    }
    for _ in 0..options.random_starts {
        starts.push(random_start(n, &mut rng));
    }
    if starts.is_empty() {
        return Err(NiltError::InvalidArgument("optimiser needs at least one start".into()));
    }

    let mut used = 0;
    let mut best: Option<LocalOutcome> = None;
    let per_start = (options.max_evaluations / starts.len()).max(1);
    let mut tried = 0;
    for x0 in starts {
        if used >= options.max_evaluations {
            break;
        }
        let budget = per_start.min(options.max_evaluations - used);
        let out = bfgs(&eval, x0, budget, options.gradient_tolerance);
        used += out.evaluations;
        tried += 1;
        let better = match &best {
            None => true,
            Some(b) => out.f < b.f,
        };
        if better && out.f.is_finite() {
            best = Some(out);
        }
    }
    let best = best.ok_or_else(|| NiltError::DegenerateSpectrum("every start diverged".into()))?;
    let form = to_form(&best.x)?;
    if !best.converged {
        return Err(NiltError::OptimizerNonConvergence {
            best: Box::new(form),
            scv: best.f,
            evaluations: used,
        });
    }
    Ok(OptimizeReport {
        form,
        scv: best.f,
        evaluations: used,
        starts: tried,
        seed: options.seed,
    })
}

/// Optimises each order in ascending order, warm-starting from the previous one.
pub fn generate_orders(orders: &[usize], options: &OptimizeOptions) -> Result<Vec<OptimizeReport>> {
    let mut sorted = orders.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out: Vec<OptimizeReport> = Vec::with_capacity(sorted.len());
    for n in sorted {
        let warm = out.last().map(|r| r.form.clone());
        out.push(optimize_cme(n, options, warm.as_ref())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let eval = ScvEvaluator::new(5);
        let x = vec![1.7, 0.2, 1.1, 2.5, 3.9, 5.3];
        let mut g = vec![0.0; 6];
        let f = eval.value_grad(&x, &mut g);
        assert!(f > 0.0);
        for i in 0..6 {
            let h = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (eval.value(&xp).scv - eval.value(&xm).scv) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-7 * (1.0 + g[i].abs()), "i={i}: fd {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn non_positive_rho_is_infinite() {
        let eval = ScvEvaluator::new(1);
        assert!(eval.value(&[-0.5, 1.0]).scv.is_infinite());
    }
}
