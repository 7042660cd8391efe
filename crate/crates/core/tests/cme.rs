//! CME spectral forms, optimiser output and the coefficient cache.

use approx::assert_relative_eq;
use nilt::cme::{
    closed_form_moments, expand_spectral_form, laurent_by_convolution, laurent_by_dft, normalize, quadrature_scv, scv,
    CmeCache,
};
use nilt::CmeSpectralForm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

fn shipped() -> &'static CmeCache {
    CmeCache::builtin()
}

#[test]
fn dft_and_convolution_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 2, 5, 13, 30] {
        let phases: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let (a, b) = (laurent_by_convolution(&phases), laurent_by_dft(&phases));
        assert_eq!(a.order(), b.order());
        for k in -(n as isize)..=(n as isize) {
            assert!((a.get(k) - b.get(k)).norm() < 1e-13, "n={n} k={k}");
        }
        // The trigonometric polynomial reproduces the product of cosines.
        let u = 0.37;
        let prod: f64 = phases.iter().map(|p| ((u - p) / 2.0).cos().powi(2)).product();
        assert!((b.eval(u).re - prod).abs() < 1e-13);
    }
}

#[test]
fn closed_form_scv_matches_quadrature_for_small_orders() {
    for n in [1, 2, 4, 8] {
        let form = &shipped().get(n).unwrap().form;
        assert_relative_eq!(scv(form).unwrap(), quadrature_scv(form).unwrap(), max_relative = 1e-8);
    }
}

#[test]
fn scv_is_invariant_under_lambda_and_c() {
    let form = shipped().get(8).unwrap().form.clone();
    let base = quadrature_scv(&form).unwrap();
    for (c, lambda) in [(0.1, 1.0), (7.0, 0.25), (1.0, 40.0)] {
        let mut f = form.clone();
        f.c = c;
        f.lambda = lambda;
        assert_relative_eq!(scv(&f).unwrap(), scv(&form).unwrap(), max_relative = 1e-10);
        assert_relative_eq!(quadrature_scv(&f).unwrap(), base, max_relative = 1e-12);
    }
}

#[test]
fn normalize_gives_unit_mass_and_mean() {
    let f = CmeSpectralForm::canonical(3.0, 0.4, 0.8, &[0.3, 2.0, 4.5]).unwrap();
    let g = normalize(&f).unwrap();
    let [m0, m1, _] = closed_form_moments(&g).unwrap();
    assert_relative_eq!(m0, 1.0, max_relative = 1e-12);
    assert_relative_eq!(m1, 1.0, max_relative = 1e-12);
    assert_eq!(g.phases, f.phases);
}

#[test]
fn cached_optima_are_local_minima() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [4, 8, 15, 30] {
        let form = &shipped().get(n).unwrap().form;
        let best = quadrature_scv(form).unwrap();
        for _ in 0..20 {
            let mut f = form.clone();
            for p in f.phases.iter_mut() {
                *p = (*p + rng.gen_range(-1e-3..1e-3)).rem_euclid(TAU);
            }
            f.omega *= 1.0 + rng.gen_range(-1e-3..1e-3);
            let v = quadrature_scv(&f).unwrap();
            assert!(v >= best * (1.0 - 1e-9), "n={n}: perturbed {v:e} below optimum {best:e}");
        }
    }
}

#[test]
fn scv_decreases_with_order() {
    let cache = shipped();
    let scvs: Vec<f64> = cache.orders().iter().map(|&n| cache.get(n).unwrap().scv).collect();
    assert!(scvs.windows(2).all(|w| w[1] < w[0]), "{scvs:?}");
    // Stored values agree with a fresh evaluation.
    for r in cache.records() {
        assert_relative_eq!(quadrature_scv(&r.form).unwrap(), r.scv, max_relative = 1e-9);
    }
}

#[test]
fn weight_magnitude_grows_polynomially() {
    let cache = shipped();
    let max_eta = |n| cache.coefficients(n).unwrap().max_weight_modulus();
    for (lo, hi) in [(15, 30), (30, 60)] {
        let ratio = max_eta(hi) / max_eta(lo);
        assert!(ratio > 1.0 && ratio < 10.0, "{lo} -> {hi}: {ratio}");
    }
}

#[test]
fn expansion_reproduces_the_density() {
    let form = &shipped().get(15).unwrap().form;
    let set = expand_spectral_form(form).unwrap();
    assert_eq!(set.len(), 2 * 15 + 1);
    for t in [0.2, 0.9, 1.0, 1.3, 3.0] {
        assert!((set.weight(t) - form.density(t)).abs() < 1e-9 * form.density(1.0));
    }
    assert_relative_eq!(set.integral(0.0, f64::INFINITY).unwrap(), 1.0, max_relative = 1e-9);
}

#[test]
fn cache_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.json");
    shipped().save(&path).unwrap();
    let back = CmeCache::load(&path).unwrap();
    assert_eq!(back.records().len(), shipped().records().len());
    for (a, b) in back.records().iter().zip(shipped().records()) {
        assert_eq!(a.scv.to_bits(), b.scv.to_bits());
        assert_eq!(a.form.omega.to_bits(), b.form.omega.to_bits());
        assert_eq!(a.form, b.form);
    }
    assert_eq!(back.to_json(), shipped().to_json());
}

#[test]
fn cache_rejects_duplicates_and_bad_records() {
    let mut v: serde_json::Value = serde_json::from_str(&shipped().to_json()).unwrap();
    let records = v["records"].as_array_mut().unwrap();
    let first = records[0].clone();
    records.push(first);
    let err = CmeCache::from_json(&v.to_string()).unwrap_err();
    assert!(err.to_string().contains("twice"), "{err}");

    let mut v: serde_json::Value = serde_json::from_str(&shipped().to_json()).unwrap();
    v["records"][0]["lambda"] = serde_json::json!(-1.0);
    assert!(CmeCache::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&shipped().to_json()).unwrap();
    v["version"] = serde_json::json!(99);
    assert!(CmeCache::from_json(&v.to_string()).is_err());
}
