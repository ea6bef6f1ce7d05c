use std::collections::BTreeMap;

use marginkit_core::fundamentals::{FactorStats, NormalizedFactors, PricePoint};
use marginkit_core::kelly::{psi, std_normal_cdf};
use marginkit_core::montecarlo::{
    mc_estimate, simulate_valuation, Distribution, Generator, SimulationConfig, StandardMap, ValuationSimulator,
};
use marginkit_core::portfolio::correlation_report;
use marginkit_core::valuation::{sensitivities, NrrConfig};

/// Maclaurin series of erf, summed until terms vanish. Accurate to ~1e-14
/// for |x| <= 3.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x * x / n;
        let contrib = term / (2.0 * n + 1.0);
        sum += contrib;
        if contrib.abs() <= 1e-18 * sum.abs() || n > 200.0 {
            break;
        }
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

#[test]
fn normal_cdf_matches_series_oracle() {
    for i in -40..=40 {
        let x = i as f64 * 0.1;
        let oracle = 0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2));
        assert!((std_normal_cdf(x) - oracle).abs() < 1e-13, "x = {x}");
    }
}

#[test]
fn normal_cdf_reference_values() {
    // 30-digit reference values
    let table = [
        (-1.0, 0.158_655_253_931_457_05),
        (-10.0, 7.619_853_024_160_527e-24),
        (6.0, 0.999_999_999_013_412_4),
    ];
    for (x, expected) in table {
        let got = std_normal_cdf(x);
        assert!((got - expected).abs() <= 1e-14 * expected, "Φ({x}) = {got}");
    }
    assert!(std_normal_cdf(6.0) > 1.0 - 1e-9);
    // ψ at one standard deviation either side
    assert!((psi(90.0, 100.0, 10.0).unwrap() - 0.682_689_492_137_085_9).abs() < 1e-13);
}

fn lcg(state: &mut u64) -> f64 {
    *state = state
        .wrapping_mul(6_364_136_223_846_793_005)
        .wrapping_add(1_442_695_040_888_963_407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn sensitivities_match_central_differences() {
    let h = 1e-6;
    let price = |c: f64, m: f64| (1.0 + m) / (1.0 + m - c);
    let growth = |p: f64, m: f64| (p - 1.0) * (1.0 + m) / p;
    let rate = |p: f64, c: f64| p / (p - 1.0) * c - 1.0;
    let central = |f: &dyn Fn(f64) -> f64, x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-5 * b.abs();

    let mut state = 12345u64;
    for _ in 0..100 {
        let m = 0.02 + 0.96 * lcg(&mut state);
        let c = 1.0 + (m - 0.01) * lcg(&mut state);
        let p = price(c, m);
        let s = sensitivities(p, m, c).unwrap();
        assert!(close(s.dp_dc, central(&|x| price(x, m), c)));
        assert!(close(s.dp_dm, central(&|x| price(c, x), m)));
        assert!(close(s.dc_dm, central(&|x| growth(p, x), m)));
        assert!(close(s.dc_dp, central(&|x| growth(x, m), p)));
        assert!(close(s.dm_dc, central(&|x| rate(p, x), c)));
        assert!(close(s.dm_dp, central(&|x| rate(x, c), p)));
        assert!((s.dc_dm * s.dm_dc - 1.0).abs() < 1e-12);
        assert!(s.dp_dm < 0.0);
    }
}

#[test]
fn monte_carlo_coverage_over_seeds() {
    // |mean - 1| <= 3 se for E[X^2], X ~ N(0, 1), in at least 99% of seeds
    let seeds = 400;
    let covered = (0..seeds)
        .filter(|&seed| {
            let e = mc_estimate(|s| s.standard_normal(), |x| x * x, 10_000, seed, Generator::ChaCha8).unwrap();
            (e.mean - 1.0).abs() <= 3.0 * e.std_error()
        })
        .count();
    assert!(covered as f64 >= 0.99 * seeds as f64, "{covered}/{seeds}");
}

fn factors() -> NormalizedFactors {
    NormalizedFactors::from_moments(
        vec!["cogs".into(), "opex".into()],
        vec![
            FactorStats { mean: 0.6, std: 0.03 },
            FactorStats { mean: 0.25, std: 0.02 },
        ],
        0.02,
        0.01,
    )
    .unwrap()
}

fn sim_config(seed: u64) -> SimulationConfig {
    SimulationConfig {
        n_samples: 1000,
        seed,
        distribution: Distribution::Normal,
        horizon: 15,
        generator: Generator::ChaCha20,
    }
}

#[test]
fn same_seed_is_bit_identical() {
    let nrr = NrrConfig::new(0.09, 15, 1e-9).unwrap();
    let a = simulate_valuation(&factors(), 500.0, &nrr, sim_config(42), &StandardMap::default()).unwrap();
    let b = simulate_valuation(&factors(), 500.0, &nrr, sim_config(42), &StandardMap::default()).unwrap();
    let bits = |d: &[f64]| d.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(a.samples()), bits(b.samples()));
    assert_eq!(a.mean().to_bits(), b.mean().to_bits());
    assert_eq!(a.std().to_bits(), b.std().to_bits());
    let c = simulate_valuation(&factors(), 500.0, &nrr, sim_config(43), &StandardMap::default()).unwrap();
    assert_ne!(a.mean(), c.mean());
}

#[test]
fn raising_the_rate_lowers_every_sample() {
    let low = NrrConfig::new(0.09, 15, 1e-9).unwrap();
    let high = NrrConfig::new(0.11, 15, 1e-9).unwrap();
    let map = StandardMap::default();
    let f = factors();
    let a = ValuationSimulator::new(&f, 500.0, &low, sim_config(5), &map).unwrap();
    let b = ValuationSimulator::new(&f, 500.0, &high, sim_config(5), &map).unwrap();
    for i in 0..1000 {
        let (Some(x), Some(y)) = (a.sample(i).unwrap(), b.sample(i).unwrap()) else {
            panic!("sample {i} rejected");
        };
        assert!(y < x, "sample {i}: {y} !< {x}");
    }
    assert!(b.run().unwrap().mean() < a.run().unwrap().mean());
}

#[test]
fn bootstrap_reuses_historical_rows() {
    use marginkit_core::fundamentals::{normalize, AssetKind, FundamentalSeries, Period};
    let revenue = [100.0, 104.0, 109.0, 112.0, 118.0];
    let cost = [0.80, 0.82, 0.79, 0.81, 0.80];
    let periods = revenue
        .iter()
        .zip(cost)
        .enumerate()
        .map(|(t, (r, c))| Period {
            index: t as i64,
            revenue: *r,
            factors: vec![r * c],
        })
        .collect();
    let series = FundamentalSeries::new("B", AssetKind::Dynamic, vec!["cost".into()], periods, vec![]).unwrap();
    let n = normalize(&series).unwrap();
    let nrr = NrrConfig::new(0.12, 10, 1e-9).unwrap();
    let mut cfg = sim_config(9);
    cfg.distribution = Distribution::Bootstrap;
    cfg.horizon = 10;
    let dist = simulate_valuation(&n, 118.0, &nrr, cfg, &StandardMap::default()).unwrap();
    // only four (share, growth) rows exist, so at most four distinct prices
    let mut distinct: Vec<u64> = dist.samples().iter().map(|x| x.to_bits()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    assert!(distinct.len() <= 4 && distinct.len() >= 2, "{}", distinct.len());
}

#[test]
fn independent_random_walks_are_nearly_uncorrelated() {
    let n = 10_000;
    let mut histories = BTreeMap::new();
    for (id, seed) in [("A", 1u64), ("B", 2u64)] {
        let mut s = Generator::ChaCha20.stream(seed, 0);
        let mut price = 100.0;
        let series: Vec<PricePoint> = (0..=n)
            .map(|t| {
                if t > 0 {
                    price *= (0.01 * s.standard_normal()).exp();
                }
                PricePoint { index: t as i64, price }
            })
            .collect();
        histories.insert(id.to_string(), series);
    }
    let m = correlation_report(&histories).unwrap();
    assert!(m.values[0][1].abs() < 0.05, "{}", m.values[0][1]);
}
