use geoprobe::metrics::p_value_two_sided;

/// Two-sided p-value by integrating the t density directly.
///
/// With s = √ν·tan θ the density ∝ (1 + s²/ν)^(−(ν+1)/2) becomes
/// cos^(ν−1) θ on (−π/2, π/2), and |T| ≥ t maps to θ ≥ asin|r|, so
/// p = ∫_{asin|r|}^{π/2} cos^(ν−1) / ∫_0^{π/2} cos^(ν−1).
fn quadrature_p(r: f64, n: usize) -> f64 {
    let nu = (n - 2) as f64;
    let f = |theta: f64| theta.cos().max(0.0).powf(nu - 1.0);
    let simpson = |a: f64, b: f64, panels: usize| {
        let h = (b - a) / panels as f64;
        let mut s = f(a) + f(b);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let theta0 = r.abs().asin();
    simpson(theta0, half_pi, 200_000) / simpson(0.0, half_pi, 200_000)
}

#[test]
fn matches_quadrature_on_grid() {
    for n in [5usize, 10, 50, 200, 1000] {
        for k in 1..=9 {
            let r = k as f64 / 10.0;
            let p = p_value_two_sided(r, n).unwrap();
            let q = quadrature_p(r, n);
            assert!((p - q).abs() < 1e-6, "r={r} n={n}: {p} vs {q}");
            assert_eq!(p, p_value_two_sided(-r, n).unwrap());
        }
    }
}

#[test]
fn half_correlation_twenty_samples() {
    let q = quadrature_p(0.5, 20);
    assert!((p_value_two_sided(0.5, 20).unwrap() - q).abs() < 1e-6);
    assert!((q - 0.024_769_558_804_109_703).abs() < 1e-6);
}

#[test]
fn no_correlation_is_one() {
    for n in [3, 4, 100, 100_000] {
        assert_eq!(p_value_two_sided(0.0, n).unwrap(), 1.0);
    }
}
