use gmwb::montecarlo::NormalStream;
use gmwb::{mc_static_price, price, GmwbContract, MarketModel, McConfig, Mode, PricingConfig};

fn setup(g: f64, sigma: f64, fee: f64) -> (GmwbContract, MarketModel) {
    let c = GmwbContract::from_rate(100.0, g, 4, 0.1).unwrap();
    let m = MarketModel::flat(&c, 0.05, sigma, fee).unwrap();
    (c, m)
}

#[test]
fn agrees_with_quadrature_within_sampling_error() {
    for g in [0.05, 0.10, 0.15] {
        let (c, m) = setup(g, 0.2, 0.01);
        let quad = price(&c, &m, &PricingConfig::new(Mode::Static, 4)).unwrap();
        let est = mc_static_price(&c, &m, &McConfig::new(400_000, 9)).unwrap();
        assert!(
            (est.price - quad).abs() <= 4.0 * est.std_error,
            "g={g}: mc {} ± {} vs {quad}",
            est.price,
            est.std_error
        );
    }
}

#[test]
fn fixed_seed_is_reproducible() {
    let (c, m) = setup(0.10, 0.2, 0.01);
    let a = mc_static_price(&c, &m, &McConfig::new(100_000, 3)).unwrap();
    let b = mc_static_price(&c, &m, &McConfig::new(100_000, 3)).unwrap();
    assert_eq!(a, b);
    let other = mc_static_price(&c, &m, &McConfig::new(100_000, 4)).unwrap();
    assert_ne!(a.price, other.price);
}

#[test]
fn standard_error_scales_with_inverse_root_paths() {
    let (c, m) = setup(0.10, 0.2, 0.01);
    let small = mc_static_price(&c, &m, &McConfig::new(100_000, 5)).unwrap();
    let large = mc_static_price(&c, &m, &McConfig::new(1_600_000, 5)).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((ratio / 4.0 - 1.0).abs() <= 0.2, "{ratio}");
}

#[test]
fn partial_final_chunk_is_handled() {
    let (c, m) = setup(0.10, 0.2, 0.01);
    let est = mc_static_price(&c, &m, &McConfig::new(2 * 4096 + 10, 1)).unwrap();
    assert_eq!(est.paths, 8202);
    assert!(est.price.is_finite() && est.std_error > 0.0);
}

#[test]
fn zero_volatility_has_no_sampling_error() {
    let (c, m) = setup(0.10, 0.0, 0.02);
    let est = mc_static_price(&c, &m, &McConfig::new(10_000, 1)).unwrap();
    assert_eq!(est.std_error, 0.0);
}

#[test]
fn streams_are_independent() {
    let a: Vec<f64> = NormalStream::new(1, 0).take(50_000).collect();
    let b: Vec<f64> = NormalStream::new(1, 1).take(50_000).collect();
    let corr = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64;
    assert!(corr.abs() < 4.0 / (a.len() as f64).sqrt(), "{corr}");
}
