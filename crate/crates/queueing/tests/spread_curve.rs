use uasflow_core::DesignParams;
use uasflow_queueing::{expected_spread, AnalyticScenario, SolverOptions};

fn theta_star(lambda: f64, m: u32, eta: f64) -> f64 {
    let sc = AnalyticScenario::nominal(DesignParams::new(5, m, eta, 5, 10), lambda);
    expected_spread(&sc, &SolverOptions::default()).zone(0, 1).unwrap().out.theta0_star
}

/// Frozen after agreeing with simulated busy fractions to within 0.03.
#[test]
fn source_zone_congestion_curve() {
    let frozen = [0.2649, 0.5799, 0.7116, 0.7693, 0.7979, 0.8127, 0.8201, 0.8234, 0.8246, 0.8248];
    for (i, want) in frozen.iter().enumerate() {
        let got = theta_star((i + 1) as f64 / 10.0, 2, 0.5);
        assert!((got - want).abs() < 1e-3, "lambda {}: {got} vs {want}", (i + 1) as f64 / 10.0);
    }
}

#[test]
fn congestion_grows_with_arrivals_and_falls_with_threshold() {
    let mut prev = 0.0;
    for i in 1..=10 {
        let t = theta_star(i as f64 / 10.0, 2, 0.5);
        assert!(t >= prev - 1e-9);
        prev = t;
    }
    assert!(theta_star(0.6, 2, 0.5) > theta_star(0.6, 4, 0.5));
}

#[test]
fn level_one_spread_mirrors_under_reflected_branching() {
    for eta in [0.1, 0.3] {
        let a = expected_spread(&AnalyticScenario::nominal(DesignParams::new(5, 2, eta, 5, 10), 0.8), &SolverOptions::default());
        let b = expected_spread(&AnalyticScenario::nominal(DesignParams::new(5, 2, 1.0 - eta, 5, 10), 0.8), &SolverOptions::default());
        let (sa, sb) = (a.level_spread(1).unwrap(), b.level_spread(1).unwrap());
        assert_eq!((sa.x_min, sa.x_max), (-sb.x_max, -sb.x_min));
    }
}
