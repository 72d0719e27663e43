use catgini::dist::{chi2_1_quantile, chi2_1_sf, std_normal_cdf, std_normal_quantile};

const REFERENCE: &str = include_str!("data/normal_cdf_reference.csv");

#[test]
fn normal_cdf_matches_high_precision_grid() {
    let mut rows = 0;
    for line in REFERENCE.lines().skip(1) {
        let (x, want) = line.split_once(',').unwrap();
        let x: f64 = x.parse().unwrap();
        let want: f64 = want.parse().unwrap();
        let got = std_normal_cdf(x);
        assert!((got - want).abs() <= 1e-12, "Φ({x}) = {got}, want {want}");
        rows += 1;
    }
    assert_eq!(rows, 1000);
}

#[test]
fn chi2_critical_value() {
    assert!((chi2_1_sf(3.841458821).unwrap() - 0.05).abs() <= 1e-8);
    assert!((chi2_1_quantile(0.05).unwrap() - 3.841458820694124).abs() < 1e-9);
    assert_eq!(chi2_1_sf(0.0).unwrap(), 1.0);
    assert_eq!(chi2_1_sf(f64::INFINITY).unwrap(), 0.0);
    assert!(chi2_1_sf(-1.0).is_err());
}

#[test]
fn chi2_tail_is_a_two_sided_normal_tail() {
    for z in [0.1, 0.5, 1.0, 1.96, 3.0] {
        let two_sided = 2.0 * std_normal_cdf(-z);
        assert!((chi2_1_sf(z * z).unwrap() - two_sided).abs() < 1e-14);
    }
}

#[test]
fn quantile_round_trip() {
    for u in [1e-10, 0.001, 0.025, 0.3, 0.5, 0.9, 0.975, 0.999] {
        assert!((std_normal_cdf(std_normal_quantile(u)) - u).abs() <= 1e-12 * u.max(1e-3));
    }
}
