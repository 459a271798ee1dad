use gmwb::feesolver::{fee_std_error_bounds, fee_std_error_derivative, solve_for_target};
use gmwb::{
    mc_static_price, price, solve_fair_fee, FeeSolverConfig, GmwbContract, MarketModel, McConfig, Mode,
    PricingConfig, RootMethod,
};

const R: f64 = 0.05;

fn contract(g: f64) -> GmwbContract {
    GmwbContract::from_rate(100.0, g, 4, 0.1).unwrap()
}

/// Static contract value with zero volatility, summed cash flow by cash flow.
fn deterministic_price(c: &GmwbContract, fee: f64) -> f64 {
    let n = c.num_withdrawals();
    let (mut w, mut pv, mut t_prev) = (c.premium(), 0.0, 0.0);
    for k in 1..=n {
        let t = c.dates()[k - 1];
        w *= ((R - fee) * (t - t_prev)).exp();
        t_prev = t;
        let g = c.contractual_amount(k);
        if k < n {
            pv += (-R * t).exp() * g;
            w = (w - g).max(0.0);
        } else {
            pv += (-R * t).exp() * w.max(g);
        }
    }
    pv
}

/// Smallest fee on a 1e-7 lattice at which the deterministic price drops
/// to `target` or below.
fn scan_root(c: &GmwbContract, target: f64) -> f64 {
    let steps = 1_000_000;
    (0..=steps)
        .map(|i| i as f64 * 1e-7)
        .find(|&fee| deterministic_price(c, fee) <= target)
        .expect("root inside [0, 0.1]")
}

#[test]
fn zero_volatility_fee_matches_scan() {
    let c = contract(0.10);
    let cfg = PricingConfig::new(Mode::Static, 4).with_wealth_segments(16_000);
    let solver = FeeSolverConfig::for_premium(100.0).with_tolerance(1e-9);
    let pricer = |fee: f64| price(&c, &MarketModel::flat(&c, R, 0.0, fee)?, &cfg);

    // Without volatility the account never empties at zero fee, so the
    // guarantee is worthless and the fair fee is zero.
    let fair = solve_fair_fee(pricer, 100.0, &solver).unwrap();
    assert!(fair.fee <= 1e-7, "{}", fair.fee);

    for target in [99.0, 97.5, 95.0] {
        let want = scan_root(&c, target);
        let got = solve_for_target(pricer, target, &solver).unwrap();
        assert!((got.fee - want).abs() <= 1.1e-7, "target {target}: {} vs {want}", got.fee);
    }
}

#[test]
fn newton_and_bisection_agree_on_table_rows() {
    let cfg = PricingConfig::new(Mode::Static, 4);
    let solver = FeeSolverConfig::for_premium(100.0);
    for g in [0.05, 0.10, 0.15] {
        let c = contract(g);
        let pricer = |fee: f64| price(&c, &MarketModel::flat(&c, R, 0.2, fee)?, &cfg);
        let newton = solve_fair_fee(pricer, 100.0, &solver.with_method(RootMethod::Newton)).unwrap();
        let bisect = solve_fair_fee(pricer, 100.0, &solver.with_method(RootMethod::Bisection)).unwrap();
        let h = 1e-5;
        let slope = (pricer(newton.fee + h).unwrap() - pricer(newton.fee - h).unwrap()) / (2.0 * h);
        let allowed = 2.0 * solver.tolerance / slope.abs();
        assert!(
            (newton.fee - bisect.fee).abs() <= allowed,
            "g={g}: newton {} bisection {} allowed {allowed}",
            newton.fee,
            bisect.fee
        );
        assert!(newton.residual.abs() <= solver.tolerance);
        assert!(bisect.residual.abs() <= solver.tolerance);
    }
}

#[test]
fn unbracketed_fee_reports_endpoint_prices() {
    let c = contract(0.10);
    let cfg = PricingConfig::new(Mode::Static, 4);
    let solver = FeeSolverConfig::for_premium(100.0).with_bounds(0.0, 0.005);
    let err = solve_fair_fee(|fee| price(&c, &MarketModel::flat(&c, R, 0.2, fee)?, &cfg), 100.0, &solver)
        .unwrap_err();
    match err {
        gmwb::Error::NoSolution {
            price_at_lower,
            price_at_upper,
            ..
        } => {
            assert!(price_at_lower > 100.0 && price_at_upper > 100.0);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn standard_error_methods_agree_on_monte_carlo_fee() {
    let c = contract(0.10);
    let mc = McConfig::new(2_000_000, 42);
    let solver = FeeSolverConfig::for_premium(100.0).with_initial_guess(0.0096);
    let mut pricer = |fee: f64| Ok(mc_static_price(&c, &MarketModel::flat(&c, R, 0.2, fee)?, &mc)?.price);
    let fair = solve_fair_fee(&mut pricer, 100.0, &solver).unwrap();
    let eps = mc_static_price(&c, &MarketModel::flat(&c, R, 0.2, fair.fee).unwrap(), &mc)
        .unwrap()
        .std_error;
    let bounds = fee_std_error_bounds(&mut pricer, 100.0, eps, &solver.with_initial_guess(fair.fee)).unwrap();
    let deriv = fee_std_error_derivative(&mut pricer, fair.fee, eps, &solver).unwrap();
    assert!(bounds > 0.0 && deriv > 0.0);
    assert!(
        (bounds - deriv).abs() <= 0.1 * deriv,
        "bounds {bounds:.3e} derivative {deriv:.3e}"
    );
}
