//! Predicted average rates and the statistics of their errors.
//!
//! The closed forms assume a uniform large-scale gain prediction on
//! `[mean - delta/2, mean + delta/2]` and a high SNR, where
//! `log2(1 + x) ~ log2(x)`. With `a = mean * P_max / sigma^2` and
//! `x = delta / (2 mean)` they reduce to
//!
//! ```text
//! mu_hat       = (ln a + psi(N_t) + atanh(x)/x - 1 + ln(1 - x^2)/2) / ln 2
//! sigma_hat^2  = (1 - (1 - x^2) (atanh(x)/x)^2) / ln^2 2 + psi'(N_t) / (T_s ln^2 2)
//! ```
//!
//! which is the form used below; it is numerically stable as `delta -> 0`.

pub mod grid;
pub mod oracle;
pub mod special;

use std::f64::consts::LN_2;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::RadioParams;
use crate::error::{domain, Result};
pub use special::{digamma, trigamma, EULER_GAMMA};

/// Predicted average SNR at or above this linear value counts as high SNR
/// (15 dB).
pub const HIGH_SNR_THRESHOLD: f64 = 31.622_776_601_683_793;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionDistribution {
    Gaussian,
    Uniform,
}

impl PredictionDistribution {
    pub fn label(self) -> &'static str {
        match self {
            PredictionDistribution::Gaussian => "G",
            PredictionDistribution::Uniform => "U",
        }
    }
}

/// Distribution of the predicted frame-average residual bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPrediction {
    /// Hz.
    pub mean: f64,
    /// Hz.
    pub std_dev: f64,
    pub distribution: PredictionDistribution,
}

impl BandwidthPrediction {
    pub fn new(mean: f64, std_dev: f64, distribution: PredictionDistribution) -> Result<Self> {
        if !(mean > 0.0) || !(std_dev >= 0.0) {
            return Err(domain("bandwidth prediction needs mean > 0 and std_dev >= 0"));
        }
        if distribution == PredictionDistribution::Uniform && 3f64.sqrt() * std_dev >= mean {
            return Err(domain("uniform bandwidth prediction would reach non-positive values"));
        }
        Ok(BandwidthPrediction {
            mean,
            std_dev,
            distribution,
        })
    }

    /// Prediction with standard deviation `cv * mean`.
    pub fn with_cv(mean: f64, cv: f64, distribution: PredictionDistribution) -> Result<Self> {
        Self::new(mean, cv * mean, distribution)
    }

    /// One predicted bandwidth, clipped at zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.std_dev == 0.0 {
            return self.mean;
        }
        match self.distribution {
            PredictionDistribution::Gaussian => Normal::new(self.mean, self.std_dev)
                .expect("finite parameters")
                .sample(rng)
                .max(0.0),
            PredictionDistribution::Uniform => {
                let half = 3f64.sqrt() * self.std_dev;
                self.mean - half + 2.0 * half * rng.random::<f64>()
            }
        }
    }
}

/// Distribution of the predicted large-scale gain.
///
/// The Gaussian variant has the same mean and variance (`delta^2 / 12`) as
/// the uniform one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPrediction {
    pub mean: f64,
    /// delta / 2.
    pub half_width: f64,
    pub distribution: PredictionDistribution,
}

impl GainPrediction {
    pub fn new(mean: f64, half_width: f64, distribution: PredictionDistribution) -> Result<Self> {
        if !(half_width >= 0.0) || !(mean - half_width > 0.0) {
            return Err(domain(format!(
                "gain prediction needs half_width >= 0 and mean - half_width > 0 (mean {mean}, half_width {half_width})"
            )));
        }
        Ok(GainPrediction {
            mean,
            half_width,
            distribution,
        })
    }

    /// Prediction with `delta = ratio * mean`.
    pub fn with_delta_ratio(mean: f64, ratio: f64, distribution: PredictionDistribution) -> Result<Self> {
        Self::new(mean, 0.5 * ratio * mean, distribution)
    }

    pub fn delta(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn std_dev(&self) -> f64 {
        self.delta() / 12f64.sqrt()
    }

    /// One predicted gain. Gaussian draws are clipped at zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.half_width == 0.0 {
            return self.mean;
        }
        match self.distribution {
            PredictionDistribution::Uniform => self.mean - self.half_width + self.delta() * rng.random::<f64>(),
            PredictionDistribution::Gaussian => Normal::new(self.mean, self.std_dev())
                .expect("finite parameters")
                .sample(rng)
                .max(0.0),
        }
    }
}

/// Ground truth of one frame for one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueFrameState {
    /// E{W_t}, Hz.
    pub mean_bandwidth: f64,
    /// Large-scale gain.
    pub gain: f64,
    /// Coefficient of variation of the per-slot residual bandwidth.
    pub bandwidth_cv: f64,
}

impl TrueFrameState {
    pub fn new(mean_bandwidth: f64, gain: f64, bandwidth_cv: f64) -> Result<Self> {
        if !(mean_bandwidth > 0.0) || !(gain > 0.0) || !(bandwidth_cv >= 0.0) {
            return Err(domain("true frame state needs positive bandwidth and gain"));
        }
        Ok(TrueFrameState {
            mean_bandwidth,
            gain,
            bandwidth_cv,
        })
    }
}

/// Moments of the average-rate prediction error `R_hat - R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateErrorStats {
    /// bit/s.
    pub mean: f64,
    /// (bit/s)^2.
    pub variance: f64,
    /// bit/s/Hz.
    pub mu_hat: f64,
    /// (bit/s/Hz)^2.
    pub sigma_hat_sq: f64,
    /// Whether the lowest predicted SNR is in the high-SNR regime.
    pub high_snr: bool,
}

/// Predicted average rate `W_hat log2(1 + alpha_hat N_t P_max / sigma^2)`.
pub fn predicted_avg_rate(bandwidth: f64, gain: f64, radio: &RadioParams) -> f64 {
    if bandwidth <= 0.0 {
        return 0.0;
    }
    let snr = gain * radio.num_antennas as f64 * radio.snr_per_gain();
    bandwidth * snr.ln_1p() / LN_2
}

/// True when `(mean - delta/2) P_max / sigma^2` is at least 15 dB.
pub fn is_high_snr(gain: &GainPrediction, radio: &RadioParams) -> bool {
    (gain.mean - gain.half_width) * radio.snr_per_gain() >= HIGH_SNR_THRESHOLD
}

fn check_gain(gain: &GainPrediction) -> Result<f64> {
    if !(gain.half_width >= 0.0) || !(gain.mean - gain.half_width > 0.0) {
        return Err(domain("gain prediction support must be positive"));
    }
    Ok(gain.half_width / gain.mean)
}

/// `atanh(x)/x - 1 + ln(1 - x^2)/2`, zero at `x = 0`.
fn spread_mean_term(x: f64) -> f64 {
    if x < 1e-4 {
        -x * x / 6.0 - x.powi(4) / 20.0
    } else {
        x.atanh() / x - 1.0 + 0.5 * (1.0 - x * x).ln()
    }
}

/// `1 - (1 - x^2)(atanh(x)/x)^2`, zero at `x = 0`.
fn spread_var_term(x: f64) -> f64 {
    if x < 1e-3 {
        x * x / 3.0 + 7.0 * x.powi(4) / 45.0
    } else {
        let r = x.atanh() / x;
        1.0 - (1.0 - x * x) * r * r
    }
}

/// Mean spectral efficiency (bit/s/Hz) under the uniform gain prediction.
pub fn mu_hat(gain: &GainPrediction, radio: &RadioParams) -> Result<f64> {
    let x = check_gain(gain)?;
    let a = gain.mean * radio.snr_per_gain();
    let psi = digamma(radio.num_antennas)?;
    Ok((a.ln() + psi + spread_mean_term(x)) / LN_2)
}

/// Variance of the frame-average spectral efficiency. `None` means
/// infinitely many slots per frame.
pub fn sigma_hat_sq(gain: &GainPrediction, time_slots: Option<usize>, radio: &RadioParams) -> Result<f64> {
    let x = check_gain(gain)?;
    let spread = spread_var_term(x) / (LN_2 * LN_2);
    let fading = match time_slots {
        None => 0.0,
        Some(0) => return Err(domain("time_slots must be >= 1")),
        Some(ts) => trigamma(radio.num_antennas)? / (ts as f64 * LN_2 * LN_2),
    };
    Ok(spread + fading)
}

/// High-SNR mean of the true frame-average rate:
/// `W_bar (log2(alpha P_max / sigma^2) + psi(N_t) / ln 2)`.
pub fn true_mean_rate(truth: &TrueFrameState, radio: &RadioParams) -> Result<f64> {
    let se = (truth.gain * radio.snr_per_gain()).log2() + digamma(radio.num_antennas)? / LN_2;
    Ok(truth.mean_bandwidth * se)
}

/// Closed-form mean and variance of the rate prediction error.
pub fn rate_error_stats(
    bw: &BandwidthPrediction,
    gain: &GainPrediction,
    truth: &TrueFrameState,
    time_slots: Option<usize>,
    radio: &RadioParams,
) -> Result<RateErrorStats> {
    let mu = mu_hat(gain, radio)?;
    let s2 = sigma_hat_sq(gain, time_slots, radio)?;
    let mean = bw.mean * mu - true_mean_rate(truth, radio)?;
    let variance = product_variance(bw.mean, bw.std_dev * bw.std_dev, mu, s2);
    Ok(RateErrorStats {
        mean,
        variance,
        mu_hat: mu,
        sigma_hat_sq: s2,
        high_snr: is_high_snr(gain, radio),
    })
}

/// Var{XY} for independent X, Y:
/// `(var_x + mean_x^2)(var_y + mean_y^2) - mean_x^2 mean_y^2`.
pub fn product_variance(mean_x: f64, var_x: f64, mean_y: f64, var_y: f64) -> f64 {
    // Expanded to avoid cancelling two large products.
    var_x * var_y + var_x * mean_y * mean_y + var_y * mean_x * mean_x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasKind {
    /// Bandwidth prediction mean is `eta` times the truth.
    Bandwidth,
    /// Gain prediction mean is `eta` times the truth.
    Gain,
}

/// Approximate bias of the predicted average rate (bit/s) caused by a
/// multiplicative prediction bias `eta`. The bandwidth case returns the
/// magnitude, the gain case a signed value.
pub fn bias_propagation(kind: BiasKind, eta: f64, truth: &TrueFrameState, radio: &RadioParams) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(domain(format!("bias factor must be positive, got {eta}")));
    }
    Ok(match kind {
        BiasKind::Bandwidth => truth.mean_bandwidth * (truth.gain * radio.snr_per_gain()).log2() * (eta - 1.0).abs(),
        BiasKind::Gain => truth.mean_bandwidth * eta.log2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn radio() -> RadioParams {
        RadioParams::new(8, 10e6, 40.0, 4e-21).unwrap()
    }

    fn gain_at(snr_db: f64, ratio: f64, r: &RadioParams) -> GainPrediction {
        let mean = 10f64.powf(snr_db / 10.0) / r.snr_per_gain();
        GainPrediction::with_delta_ratio(mean, ratio, PredictionDistribution::Uniform).unwrap()
    }

    /// Closed form in terms of `mean` and `delta` directly, to cross-check the
    /// `atanh` form.
    fn mu_hat_raw(g: &GainPrediction, r: &RadioParams) -> f64 {
        let (m, d) = (g.mean, g.delta());
        let p_s = r.snr_per_gain();
        let psi = digamma(r.num_antennas).unwrap();
        (m * ((m + d / 2.0) / (m - d / 2.0)).ln()
            + d / 2.0 * ((m * m - d * d / 4.0) * p_s * p_s).ln()
            + d * (psi - 1.0))
            / (d * LN_2)
    }

    fn sigma_raw(g: &GainPrediction) -> f64 {
        let (m, d) = (g.mean, g.delta());
        ((d * d / 4.0 - m * m) * ((m + d / 2.0) / (m - d / 2.0)).ln().powi(2) + d * d) / (d * d * LN_2 * LN_2)
    }

    #[test]
    fn atanh_forms_match_direct_forms() {
        let r = radio();
        for ratio in [0.1, 0.5, 1.0, 1.5] {
            let g = gain_at(35.0, ratio, &r);
            assert_relative_eq!(mu_hat(&g, &r).unwrap(), mu_hat_raw(&g, &r), max_relative = 1e-12);
            assert_relative_eq!(sigma_hat_sq(&g, None, &r).unwrap(), sigma_raw(&g), max_relative = 1e-9);
        }
    }

    #[test]
    fn delta_zero_limits() {
        let r = radio();
        let g = gain_at(35.0, 0.0, &r);
        let limit = (g.mean * r.snr_per_gain()).log2() + digamma(8).unwrap() / LN_2;
        assert_relative_eq!(mu_hat(&g, &r).unwrap(), limit, max_relative = 1e-14);
        assert_eq!(sigma_hat_sq(&g, None, &r).unwrap(), 0.0);
        assert_relative_eq!(
            sigma_hat_sq(&g, Some(100), &r).unwrap(),
            trigamma(8).unwrap() / (100.0 * LN_2 * LN_2),
            max_relative = 1e-14
        );
        // Approaching the limit continuously.
        let tiny = gain_at(35.0, 1e-3, &r);
        assert_relative_eq!(mu_hat(&tiny, &r).unwrap(), limit, epsilon = 1e-6);
        let x: f64 = 5e-4;
        assert_relative_eq!(
            sigma_hat_sq(&tiny, None, &r).unwrap(),
            x * x / (3.0 * LN_2 * LN_2),
            max_relative = 1e-5
        );
    }

    #[test]
    fn series_and_direct_agree_at_switch() {
        for x in [9e-5f64, 1.1e-4, 9e-4, 1.1e-3, 1e-2] {
            let direct_m = x.atanh() / x - 1.0 + 0.5 * (1.0 - x * x).ln();
            assert_relative_eq!(spread_mean_term(x), direct_m, max_relative = 1e-6);
            assert_relative_eq!(
                spread_var_term(x),
                x * x / 3.0 + 7.0 * x.powi(4) / 45.0,
                max_relative = 1e-4
            );
        }
    }

    #[test]
    fn mu_hat_increases_with_gain() {
        let r = radio();
        let mut last = f64::NEG_INFINITY;
        for db in [10.0, 15.0, 20.0, 30.0, 40.0] {
            let m = mu_hat(&gain_at(db, 0.5, &r), &r).unwrap();
            assert!(m > last);
            last = m;
        }
    }

    #[test]
    fn scale_invariance() {
        let r = radio();
        let g = gain_at(25.0, 0.7, &r);
        for c in [1e-3, 0.5, 7.0, 1e4] {
            let r2 = RadioParams::new(8, r.max_bandwidth, r.max_power, r.noise_psd * c).unwrap();
            let g2 = GainPrediction::new(g.mean * c, g.half_width * c, g.distribution).unwrap();
            assert_relative_eq!(mu_hat(&g, &r).unwrap(), mu_hat(&g2, &r2).unwrap(), max_relative = 1e-12);
            assert_relative_eq!(
                sigma_hat_sq(&g, Some(100), &r).unwrap(),
                sigma_hat_sq(&g2, Some(100), &r2).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn product_variance_identity() {
        for (mx, vx, my, vy) in [(1.0, 0.04, 11.0, 0.3), (3.0, 0.0, 2.0, 0.0), (0.0, 2.0, 5.0, 1.0)] {
            let direct: f64 = (vx + mx * mx) * (vy + my * my) - mx * mx * my * my;
            assert_relative_eq!(
                product_variance(mx, vx, my, vy),
                direct,
                epsilon = 1e-12,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn unbiased_small_delta_has_zero_mean_error() {
        let r = radio();
        let g = gain_at(35.0, 1e-6, &r);
        let bw = BandwidthPrediction::with_cv(1e6, 0.2, PredictionDistribution::Gaussian).unwrap();
        let truth = TrueFrameState::new(1e6, g.mean, 0.2).unwrap();
        let s = rate_error_stats(&bw, &g, &truth, Some(100), &r).unwrap();
        assert!(s.mean.abs() < 1e-3, "{}", s.mean);
        assert!(s.high_snr);
    }

    #[test]
    fn deterministic_inputs_have_zero_variance() {
        let r = radio();
        let g = gain_at(35.0, 0.0, &r);
        let bw = BandwidthPrediction::new(1e6, 0.0, PredictionDistribution::Gaussian).unwrap();
        let truth = TrueFrameState::new(1e6, g.mean, 0.0).unwrap();
        let s = rate_error_stats(&bw, &g, &truth, None, &r).unwrap();
        assert_eq!(s.variance, 0.0);
    }

    #[test]
    fn predicted_rate_examples() {
        let r = radio();
        let gain = 3.0 / (8.0 * r.snr_per_gain());
        assert_relative_eq!(predicted_avg_rate(2e6, gain, &r), 4e6, max_relative = 1e-12);
        assert_eq!(predicted_avg_rate(0.0, gain, &r), 0.0);
    }

    #[test]
    fn bias_examples() {
        let r = radio();
        let gain = 10f64.powf(3.5) / r.snr_per_gain();
        let truth = TrueFrameState::new(1.0, gain, 0.2).unwrap();
        assert_eq!(bias_propagation(BiasKind::Bandwidth, 1.0, &truth, &r).unwrap(), 0.0);
        assert_eq!(bias_propagation(BiasKind::Gain, 1.0, &truth, &r).unwrap(), 0.0);
        let b = bias_propagation(BiasKind::Bandwidth, 2.0, &truth, &r).unwrap();
        assert_relative_eq!(b, 3.5 * 10f64.log2(), max_relative = 1e-12);
        assert!((b - 11.63).abs() < 0.01);
        assert_relative_eq!(bias_propagation(BiasKind::Gain, 2.0, &truth, &r).unwrap(), 1.0);
        assert!(bias_propagation(BiasKind::Gain, 0.0, &truth, &r).is_err());
    }

    #[test]
    fn invalid_predictions_rejected() {
        assert!(GainPrediction::new(1.0, 1.0, PredictionDistribution::Uniform).is_err());
        assert!(BandwidthPrediction::new(1.0, 0.6, PredictionDistribution::Uniform).is_err());
        assert!(BandwidthPrediction::new(1.0, 0.6, PredictionDistribution::Gaussian).is_ok());
    }
}
