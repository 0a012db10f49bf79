use vvix_core::analytics::vvix_simple;
use vvix_core::calibration::{
    black_price, build_weights, bs_vega, calibrate, heston_vanilla_price, objective_at, synthetic_quotes, HestonSlice,
    VegaFloorRule, VvixMethod, VvixMode, WeightKind, WeightScheme,
};
use vvix_core::model::preset;
use vvix_core::{CalibrationResult, CalibrationSpec, HestonParams, MarketConvention, VanillaQuote};

const SPOT: f64 = 100.0;
const MATURITIES: [f64; 5] = [1.0 / 12.0, 2.0 / 12.0, 0.25, 0.5, 1.0];

fn quotes(name: &str) -> Vec<VanillaQuote> {
    synthetic_quotes(&preset(name).unwrap(), &MarketConvention::default(), SPOT, &MATURITIES, 15).unwrap()
}

fn vega_spec(quotes: Vec<VanillaQuote>) -> CalibrationSpec {
    let mut spec = CalibrationSpec::new(quotes, SPOT);
    spec.scheme = WeightScheme::new(WeightKind::InverseVega);
    spec
}

fn assert_recovered(got: &HestonParams, want: &HestonParams) {
    for (i, (g, w)) in got.to_vec().iter().zip(want.to_vec()).enumerate() {
        assert!((g / w - 1.0).abs() < 1e-3, "coordinate {i}: {g} vs {w}");
    }
}

#[test]
fn plain_round_trip() {
    let want = preset("set4").unwrap();
    let res = calibrate(&vega_spec(quotes("set4"))).unwrap();
    assert_recovered(&res.params, &want);
    assert!(res.rms < 1e-8, "{}", res.rms);
    assert_eq!(res.free.len(), 5);
}

#[test]
fn fixed_kappa_round_trip() {
    let want = preset("set2").unwrap();
    let mut spec = vega_spec(quotes("set2"));
    spec.fix_kappa = Some(0.75);
    let res = calibrate(&spec).unwrap();
    assert_eq!(res.params.kappa, 0.75);
    assert!(!res.free.iter().any(|n| n == "kappa"));
    assert_recovered(&res.params, &want);
}

#[test]
fn vvix_solve_round_trip() {
    let want = preset("set4").unwrap();
    let conv = MarketConvention::default();
    let target = vvix_simple(&want, conv.vvix_maturity(), &conv).unwrap().points;
    let mut spec = vega_spec(quotes("set4"));
    spec.vvix_mode = VvixMode::Solve { target };
    let res = calibrate(&spec).unwrap();
    assert_recovered(&res.params, &want);
    // sigma is implied by the target, not searched over
    assert_eq!(res.free.len(), 4);
    assert!(!res.free.iter().any(|n| n == "sigma"));
    assert!((res.vvix.simple.unwrap() - target).abs() < 1e-6);
}

fn penalty_run(weight: Option<f64>) -> CalibrationResult {
    let mut spec = CalibrationSpec::new(quotes("set1"), SPOT);
    if let Some(weight) = weight {
        spec.vvix_mode = VvixMode::Penalty {
            weight,
            target: 200.0,
            method: VvixMethod::LogContract,
        };
    }
    calibrate(&spec).unwrap()
}

#[test]
fn high_vvix_penalty_drives_up_kappa_and_sigma() {
    let free = penalty_run(None).params;
    let anchored = penalty_run(Some(0.1)).params;
    assert!(anchored.sigma >= 2.0 * free.sigma, "{anchored:?} vs {free:?}");
    assert!(anchored.kappa >= 2.0 * free.kappa, "{anchored:?} vs {free:?}");
}

#[test]
fn objective_ignores_quote_order() {
    let p = preset("set4").unwrap();
    let off = p.with_sigma(0.7);
    let qs = quotes("set4");
    let mut rev = qs.clone();
    rev.reverse();
    let a = objective_at(&vega_spec(qs), &off).unwrap();
    let b = objective_at(&vega_spec(rev), &off).unwrap();
    assert!((a - b).abs() < 1e-12 * a, "{a} {b}");
}

#[test]
fn objective_scales_with_prices() {
    let p = preset("set4").unwrap();
    let off = HestonParams { v0: 0.05, ..p.with_sigma(0.7) };
    let qs = quotes("set4");
    let base = objective_at(&CalibrationSpec::new(qs.clone(), SPOT), &off).unwrap();
    // prices, spot and strikes scaled together keep the same model in relative terms
    let c = 3.0;
    let scaled: Vec<VanillaQuote> = qs
        .iter()
        .map(|q| VanillaQuote {
            strike: c * q.strike,
            price: c * q.price,
            ..q.clone()
        })
        .collect();
    let s = objective_at(&CalibrationSpec::new(scaled, c * SPOT), &off).unwrap();
    assert!((s / (c * c * base) - 1.0).abs() < 1e-8, "{s} vs {}", c * c * base);
}

#[test]
fn deterministic_variance_gives_black_prices() {
    let conv = MarketConvention::default();
    let p = preset("set1").unwrap().with_sigma(1e-8);
    for tau in [0.1, 1.0] {
        let x = p.kappa * tau;
        let avg = p.theta + (p.v0 - p.theta) * (1.0 - (-x).exp()) / x;
        for k in [80.0, 100.0, 120.0] {
            let h = heston_vanilla_price(&p, &conv, SPOT, k, tau, true).unwrap();
            let b = black_price(SPOT, k, tau, avg.sqrt(), 1.0, true);
            assert!((h / b - 1.0).abs() < 1e-4, "{tau} {k}: {h} vs {b}");
        }
    }
}

#[test]
fn vanilla_edge_cases() {
    let conv = MarketConvention { r: 0.03, q: 0.01, ..MarketConvention::default() };
    let p = preset("set3").unwrap();
    let fwd = conv.forward(SPOT, 0.5);
    let call = heston_vanilla_price(&p, &conv, SPOT, 1e-6, 0.5, true).unwrap();
    assert!((call - fwd).abs() < 1e-8 * fwd, "{call} vs {fwd}");
    for k in [70.0, 100.0, 140.0] {
        let c = heston_vanilla_price(&p, &conv, SPOT, k, 0.5, true).unwrap();
        let q = heston_vanilla_price(&p, &conv, SPOT, k, 0.5, false).unwrap();
        assert!((c - q - (fwd - k)).abs() < 1e-10 * fwd);
        let slice = HestonSlice::new(&p, &conv, SPOT, 0.5).unwrap();
        assert!((slice.price(k, true) - c).abs() < 1e-8 * fwd);
    }
}

#[test]
fn vega_matches_bumped_black_price() {
    let (f, k, t, s) = (100.0, 90.0, 0.5, 0.2);
    let h = 1e-5;
    let fd = (black_price(f, k, t, s + h, 1.0, true) - black_price(f, k, t, s - h, 1.0, true)) / (2.0 * h);
    assert!((bs_vega(f, k, t, s, 1.0) / fd - 1.0).abs() < 1e-6);
}

#[test]
fn inverse_vega_weights_are_capped() {
    let conv = MarketConvention::default();
    // a far out-of-the-money call with a tiny vega
    let q = VanillaQuote {
        maturity: 0.1,
        strike: 160.0,
        is_call: true,
        price: 1e-12,
        implied_vol: Some(0.2),
        discount: 1.0,
    };
    let vega = bs_vega(100.0, q.strike, q.maturity, 0.2, 1.0);
    assert!(vega < 1e-5, "{vega}");
    let floor = WeightScheme::new(WeightKind::InverseVega);
    assert_eq!(build_weights(&[q.clone()], &floor, 100.0, &conv).unwrap(), vec![100.0]);
    let printed = WeightScheme {
        floor_rule: VegaFloorRule::PrintedMin,
        ..floor
    };
    assert!(build_weights(&[q], &printed, 100.0, &conv).unwrap()[0] > 1e5);
}
