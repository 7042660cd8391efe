use nilt::cme::CmeCache;
use nilt::transforms::builtin;
use nilt::{
    cme_s, decompose_estimate, decompose_weight, euler_coefficients, euler_s, evaluate_nilt, find_zeros,
    golden_section_search, quadrature_oracle, theta_bounds, NiltWarning, ShiftSearchConfig, TransformQuery, UpperRule,
};
use num_complex::Complex64;

fn cme(n: usize) -> nilt::CoefficientSet {
    CmeCache::builtin().coefficients(n).unwrap()
}

#[test]
fn euler_zeros_are_sign_changes() {
    let e = euler_coefficients(30).unwrap();
    let zeros = find_zeros(&e, 4.0).unwrap();
    assert!(zeros.len() > 4);
    let d = decompose_weight(&e, 4.0).unwrap();
    let mut checked = Vec::new();
    for &z in &zeros {
        let (l, r) = (e.weight_detail(z - 1e-6), e.weight_detail(z + 1e-6));
        // Far from t = 1 the weight drops below its own rounding level.
        let resolved = |w: &nilt::framework::WeightValue| w.value.abs() > 64.0 * f64::EPSILON * w.scale;
        if resolved(&l) && resolved(&r) {
            assert!(l.value * r.value < 0.0, "no sign change at {z}");
            checked.push(z);
        }
    }
    assert!(checked.contains(&d.z_i) && checked.contains(&d.z_i1), "{checked:?}");
    assert!(d.z_i < 1.0 && d.z_i1 > 1.0);
    assert!((d.f_left + d.f_main + d.f_right - 1.0).abs() < 1e-8);
}

#[test]
fn cme_zeros_come_from_the_phases() {
    let set = cme(30);
    let form = set.spectral_form().unwrap();
    let zeros = find_zeros(&set, 4.0).unwrap();
    assert_eq!(zeros, form.zeros(4.0));
    let peak = form.density(1.0);
    for pair in zeros.windows(2) {
        assert!(form.density(pair[0]) < 1e-20 * peak);
        assert!(form.density(0.5 * (pair[0] + pair[1])) > 0.0);
    }
    let d = decompose_weight(&set, 4.0).unwrap();
    assert!(d.f_main > 0.99);
    assert!((d.f_left + d.f_main + d.f_right - 1.0).abs() < 1e-9);
}

#[test]
fn estimate_decomposition_sums_to_the_weighted_sum() {
    let q = builtin("exp-t").unwrap().query();
    for (set, theta) in [(cme(30), 0.0), (cme(30), -3.0), (euler_coefficients(30).unwrap(), 0.0)] {
        let e = decompose_estimate(&q, &set, 2.0, theta).unwrap();
        assert_eq!(e.total, e.left + e.main + e.right);
        let direct = evaluate_nilt(&set, &q, 2.0, theta).unwrap().value;
        let oracle = quadrature_oracle(&q, &set, 2.0, theta).unwrap();
        assert!((e.total - direct).abs() < 1e-8 * direct.abs(), "{} vs {direct}", e.total);
        assert!((oracle.value - direct).abs() < 1e-8 * direct.abs());
    }
}

#[test]
fn bounds_follow_the_abscissa_and_the_hints() {
    let cfg = ShiftSearchConfig::default();
    let set = cme(30);
    let min_re = set.min_real_part();

    let b = theta_bounds(&builtin("exp-t").unwrap().query(), 10.0, &set, &cfg);
    assert!((b.lower - (-10.0 - min_re)).abs() < 1e-12);
    assert!(b.lower_fixed && b.upper_fixed);
    assert_eq!(b.upper, cfg.bounded_upper);

    let unbounded = TransformQuery::new(|s: Complex64| 1.0 / (s - 1.0), 1.0);
    let b = theta_bounds(&unbounded, 2.0, &set, &cfg);
    assert!(!b.upper_fixed);
    assert_eq!(b.upper, (b.lower + 10.0).max(10.0));
    let wide = ShiftSearchConfig {
        upper_rule: UpperRule::Wide,
        ..cfg
    };
    assert_eq!(theta_bounds(&unbounded, 2.0, &set, &wide).upper, (b.lower + 1000.0).max(0.0));

    let entire = builtin("exp-t2").unwrap().query();
    let b = theta_bounds(&entire, 5.0, &set, &cfg);
    assert_eq!(b.lower, cfg.unbounded_lower);
    assert!(!b.lower_fixed);
}

#[test]
fn golden_section_counts_evaluations() {
    let gs = golden_section_search(|x: f64| (x - 0.3).cosh(), -4.0, 6.0, 1e-3);
    assert!((gs.argmin - 0.3).abs() < 1e-3);
    assert_eq!(gs.evaluations, gs.iterations + 2);
}

#[test]
fn cme_s_improves_exp_t2() {
    let pair = builtin("exp-t2").unwrap();
    let q = pair.query();
    let cfg = ShiftSearchConfig::default();
    let set = cme(30);
    let exact = pair.exact(5.0);
    let plain = evaluate_nilt(&set, &q, 5.0, 0.0).unwrap().value;
    let r = cme_s(&q, 5.0, &set, &cfg).unwrap();
    assert!((r.value - exact).abs() < 0.01 * (plain - exact).abs());
    assert!(r.theta_hat > r.theta_lower && r.theta_hat < r.theta_upper);
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
}

#[test]
fn cme_s_never_exceeds_the_unshifted_estimate() {
    let cfg = ShiftSearchConfig::default();
    let set = cme(30);
    for name in ["exp-t2", "exp-t", "exp-sqrt-t", "poly3", "sin-plus-1", "delayed-exp", "square-wave"] {
        let q = builtin(name).unwrap().query();
        for t in [0.5, 1.5, 3.0, 7.0] {
            let plain = evaluate_nilt(&set, &q, t, 0.0).unwrap();
            let r = cme_s(&q, t, &set, &cfg).unwrap();
            assert!(
                r.value <= plain.value + 1e-9 * plain.term_scale,
                "{name} T={t}: {} > {}",
                r.value,
                plain.value
            );
        }
    }
}

#[test]
fn euler_s_always_carries_the_caveat() {
    let cfg = ShiftSearchConfig::default();
    let (c, e) = (cme(30), euler_coefficients(30).unwrap());
    for name in ["exp-t", "square-wave"] {
        let q = builtin(name).unwrap().query();
        for t in [1.5, 4.2] {
            let r = euler_s(&q, t, &c, &e, &cfg).unwrap();
            assert!(r.warnings.contains(&NiltWarning::EulerShiftUnverified));
            let reference = cme_s(&q, t, &c, &cfg).unwrap();
            assert_eq!(r.theta_hat, reference.theta_hat);
            assert_eq!(r.value, evaluate_nilt(&e, &q, t, reference.theta_hat).unwrap().value);
            let disagree = (r.value - reference.value).abs() > 0.1 * reference.value.abs();
            let flagged = r.warnings.iter().any(|w| matches!(w, NiltWarning::MethodDisagreement { .. }));
            assert_eq!(disagree, flagged, "{name} T={t}");
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    let q = builtin("exp-t").unwrap().query();
    let cfg = ShiftSearchConfig::default();
    assert!(cme_s(&q, 0.0, &cme(30), &cfg).is_err());
    assert!(cme_s(&q, 1.0, &euler_coefficients(30).unwrap(), &cfg).is_err());
    assert!(evaluate_nilt(&cme(30), &q, f64::NAN, 0.0).is_err());
    // A shift that pushes nodes left of the abscissa is refused.
    let lower = theta_bounds(&q, 2.0, &cme(30), &cfg).lower;
    assert!(evaluate_nilt(&cme(30), &q, 2.0, lower - 1.0).is_err());
}
