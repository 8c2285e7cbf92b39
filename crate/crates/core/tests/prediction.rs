use std::f64::consts::LN_2;

use proptest::prelude::*;
use resalloc::channel::RadioParams;
use resalloc::par::Execution;
use resalloc::prediction::oracle::monte_carlo_error_oracle;
use resalloc::prediction::PredictionDistribution::{Gaussian, Uniform};
use resalloc::prediction::{
    mu_hat, predicted_avg_rate, rate_error_stats, sigma_hat_sq, BandwidthPrediction, GainPrediction, TrueFrameState,
};

fn radio() -> RadioParams {
    RadioParams::new(8, 10e6, 40.0, 4e-21).unwrap()
}

/// Midpoint rule for `E[f(U)]`, `U` uniform on `[a, b]`.
fn uniform_expectation(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = 20_000;
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() / n as f64
}

/// `E[ln ||h||^2]` for `||h||^2 ~ Gamma(n, 1)` is the digamma function.
fn digamma_int(n: usize) -> f64 {
    -0.577_215_664_901_532_9 + (1..n).map(|k| 1.0 / k as f64).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_spectral_efficiency_matches_quadrature(snr_db in 15.0f64..40.0, ratio in 0.0f64..0.95) {
        let r = radio();
        let mean = 10f64.powf(snr_db / 10.0) / r.snr_per_gain();
        let g = GainPrediction::with_delta_ratio(mean, ratio, Uniform).unwrap();
        let (a, b) = (mean - g.half_width, mean + g.half_width);
        let e_ln_gain = if b > a { uniform_expectation(a, b, f64::ln) } else { mean.ln() };
        let expected = (e_ln_gain + r.snr_per_gain().ln() + digamma_int(r.num_antennas)) / LN_2;
        let got = mu_hat(&g, &r).unwrap();
        prop_assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn spread_variance_matches_quadrature(snr_db in 15.0f64..40.0, ratio in 0.01f64..0.95) {
        let r = radio();
        let mean = 10f64.powf(snr_db / 10.0) / r.snr_per_gain();
        let g = GainPrediction::with_delta_ratio(mean, ratio, Uniform).unwrap();
        let (a, b) = (mean - g.half_width, mean + g.half_width);
        let m1 = uniform_expectation(a, b, |x| x.log2());
        let m2 = uniform_expectation(a, b, |x| x.log2().powi(2));
        let expected = m2 - m1 * m1;
        let got = sigma_hat_sq(&g, None, &r).unwrap();
        prop_assert!((got - expected).abs() <= 1e-6 * expected.max(1e-9) + 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn more_slots_never_increase_variance(ratio in 0.0f64..0.9, ts in 1usize..200) {
        let r = radio();
        let g = GainPrediction::with_delta_ratio(1e-12, ratio, Uniform).unwrap();
        let fewer = sigma_hat_sq(&g, Some(ts), &r).unwrap();
        let more = sigma_hat_sq(&g, Some(ts + 1), &r).unwrap();
        let limit = sigma_hat_sq(&g, None, &r).unwrap();
        prop_assert!(limit <= more && more <= fewer);
    }

    #[test]
    fn predicted_rate_is_monotone(bw in 1e5f64..1e7, g in 1e-14f64..1e-10, k in 1.01f64..3.0) {
        let r = radio();
        let base = predicted_avg_rate(bw, g, &r);
        prop_assert!(base > 0.0);
        prop_assert!(predicted_avg_rate(bw * k, g, &r) > base);
        prop_assert!(predicted_avg_rate(bw, g * k, &r) > base);
    }
}

#[test]
fn jensen_bounds_the_mean_spectral_efficiency() {
    let r = radio();
    for ratio in [0.0, 0.3, 0.9] {
        let g = GainPrediction::with_delta_ratio(1e-12, ratio, Uniform).unwrap();
        let upper = (1e-12 * r.snr_per_gain() * r.num_antennas as f64).log2();
        assert!(mu_hat(&g, &r).unwrap() < upper);
    }
}

#[test]
fn monte_carlo_error_converges_to_closed_form() {
    let r = radio();
    let bw = BandwidthPrediction::with_cv(1e6, 0.2, Gaussian).unwrap();
    let g = GainPrediction::with_delta_ratio(1e-12, 0.5, Uniform).unwrap();
    let truth = TrueFrameState::new(1e6, 1e-12, 0.2).unwrap();
    let closed = rate_error_stats(&bw, &g, &truth, Some(100), &r).unwrap();
    let mut gaps = Vec::new();
    for (i, samples) in [2_000usize, 20_000, 200_000].into_iter().enumerate() {
        let rep =
            monte_carlo_error_oracle(&bw, &g, &truth, 100, &r, samples, 11 + i as u64, Execution::Parallel).unwrap();
        let se = (rep.error.variance() / samples as f64).sqrt();
        let gap = (rep.error.mean - closed.mean).abs();
        assert!(gap < 5.0 * se, "{samples} samples: gap {gap}, standard error {se}");
        gaps.push(gap / closed.variance.sqrt());
    }
    assert!(gaps[2] < 0.02);
    let rep = monte_carlo_error_oracle(&bw, &g, &truth, 100, &r, 200_000, 5, Execution::Parallel).unwrap();
    assert!((rep.error.variance() / closed.variance - 1.0).abs() < 0.05);
}

#[test]
fn execution_modes_give_identical_samples() {
    let r = radio();
    let bw = BandwidthPrediction::with_cv(1e6, 0.1, Uniform).unwrap();
    let g = GainPrediction::with_delta_ratio(1e-12, 0.2, Gaussian).unwrap();
    let truth = TrueFrameState::new(1e6, 1e-12, 0.1).unwrap();
    let a = monte_carlo_error_oracle(&bw, &g, &truth, 10, &r, 30_000, 3, Execution::Sequential).unwrap();
    let b = monte_carlo_error_oracle(&bw, &g, &truth, 10, &r, 30_000, 3, Execution::Parallel).unwrap();
    assert_eq!(a.samples, b.samples);
}
