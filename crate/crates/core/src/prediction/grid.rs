//! Closed-form error statistics against the Monte Carlo oracle over a grid
//! of prediction settings, plus the bias sweeps.

use serde::{Deserialize, Serialize};

use super::oracle::TruthSamples;
use super::{rate_error_stats, BandwidthPrediction, GainPrediction, PredictionDistribution, TrueFrameState};
use crate::channel::{db_to_linear, RadioParams};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::stats::standard_normal_pdf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub seed: u64,
    /// Monte Carlo samples per grid point.
    pub samples: usize,
    pub num_antennas: usize,
    pub slots_per_frame: usize,
    /// True mean residual bandwidth, MHz.
    pub mean_bandwidth_mhz: f64,
    /// Per-slot variability of the true residual bandwidth.
    pub true_bandwidth_cv: f64,
    /// Average SNR `alpha P_max / sigma^2`, dB.
    pub snr_db: Vec<f64>,
    pub bandwidth_cv: Vec<f64>,
    pub gain_delta_ratio: Vec<f64>,
    pub bandwidth_distributions: Vec<PredictionDistribution>,
    pub gain_distributions: Vec<PredictionDistribution>,
    /// Bias factors for the bias sweep. Empty skips it.
    pub bias_factors: Vec<f64>,
    pub bias_snr_db: f64,
    pub bias_bandwidth_cv: f64,
    pub bias_gain_delta_ratio: f64,
    pub histogram_bins: usize,
    /// Half-width of the histogram range, in standard deviations.
    pub histogram_range: f64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        use PredictionDistribution::*;
        StatsConfig {
            seed: 1,
            samples: 1_000_000,
            num_antennas: 8,
            slots_per_frame: 100,
            mean_bandwidth_mhz: 1.0,
            true_bandwidth_cv: 0.2,
            snr_db: vec![5.0, 35.0],
            bandwidth_cv: vec![0.2],
            gain_delta_ratio: vec![1.0],
            bandwidth_distributions: vec![Gaussian, Uniform],
            gain_distributions: vec![Gaussian, Uniform],
            bias_factors: vec![0.6, 0.8, 1.0, 1.2, 1.4],
            bias_snr_db: 35.0,
            bias_bandwidth_cv: 0.2,
            bias_gain_delta_ratio: 0.1,
            histogram_bins: 40,
            histogram_range: 4.0,
        }
    }
}

impl StatsConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: StatsConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.samples == 0 || self.slots_per_frame == 0 || self.histogram_bins == 0 {
            return bad("samples, slots_per_frame and histogram_bins must be positive");
        }
        if !(self.mean_bandwidth_mhz > 0.0) || !(self.true_bandwidth_cv >= 0.0) || !(self.histogram_range > 0.0) {
            return bad("mean_bandwidth_mhz and histogram_range must be positive, true_bandwidth_cv >= 0");
        }
        if self.bias_factors.iter().any(|&e| !(e > 0.0)) {
            return bad("bias factors must be positive");
        }
        self.radio()?;
        Ok(())
    }

    pub fn radio(&self) -> Result<RadioParams> {
        RadioParams::new(self.num_antennas, 10e6, 40.0, db_to_linear(-174.0) * 1e-3)
    }

    /// Every combination of the grid axes, SNR outermost.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &snr_db in &self.snr_db {
            for &bandwidth_cv in &self.bandwidth_cv {
                for &gain_delta_ratio in &self.gain_delta_ratio {
                    for &bandwidth_distribution in &self.bandwidth_distributions {
                        for &gain_distribution in &self.gain_distributions {
                            out.push(GridPoint {
                                snr_db,
                                bandwidth_cv,
                                gain_delta_ratio,
                                bandwidth_distribution,
                                gain_distribution,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn truth(&self, snr_db: f64, radio: &RadioParams) -> Result<TrueFrameState> {
        TrueFrameState::new(
            self.mean_bandwidth_mhz * 1e6,
            db_to_linear(snr_db) / radio.snr_per_gain(),
            self.true_bandwidth_cv,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub snr_db: f64,
    pub bandwidth_cv: f64,
    pub gain_delta_ratio: f64,
    pub bandwidth_distribution: PredictionDistribution,
    pub gain_distribution: PredictionDistribution,
}

/// Closed form and oracle at one grid point. Rates in bit/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub snr_db: f64,
    pub bandwidth_cv: f64,
    pub gain_delta_ratio: f64,
    pub bandwidth_distribution: PredictionDistribution,
    pub gain_distribution: PredictionDistribution,
    pub closed_mean: f64,
    pub oracle_mean: f64,
    pub closed_variance: f64,
    pub oracle_variance: f64,
    /// |closed - oracle| mean, in oracle standard deviations.
    pub mean_gap_in_sd: f64,
    /// |closed - oracle| / oracle variance.
    pub variance_rel_gap: f64,
    pub ks_normal: f64,
    pub high_snr: bool,
}

/// Standardised error density at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfRow {
    pub snr_db: f64,
    pub bandwidth_distribution: PredictionDistribution,
    pub gain_distribution: PredictionDistribution,
    pub z: f64,
    pub density: f64,
    pub normal_density: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridReport {
    pub rows: Vec<GridRow>,
    pub pdf: Vec<PdfRow>,
}

fn prediction_at(p: &GridPoint, truth: &TrueFrameState) -> Result<(BandwidthPrediction, GainPrediction)> {
    let bw = BandwidthPrediction::with_cv(truth.mean_bandwidth, p.bandwidth_cv, p.bandwidth_distribution)?;
    let gain = GainPrediction::with_delta_ratio(truth.gain, p.gain_delta_ratio, p.gain_distribution)?;
    Ok((bw, gain))
}

/// Evaluates every grid point. True-rate samples are drawn once per SNR
/// and shared by the points at that SNR.
pub fn run_grid(cfg: &StatsConfig, exec: Execution) -> Result<GridReport> {
    cfg.validate()?;
    let radio = cfg.radio()?;
    let mut report = GridReport::default();
    let mut cached: Option<(f64, TruthSamples)> = None;
    for p in cfg.points() {
        let truth = cfg.truth(p.snr_db, &radio)?;
        if cached.as_ref().is_none_or(|(s, _)| *s != p.snr_db) {
            let seed = cfg.seed ^ p.snr_db.to_bits();
            let samples = TruthSamples::generate(&truth, cfg.slots_per_frame, &radio, cfg.samples, seed, exec)?;
            cached = Some((p.snr_db, samples));
        }
        let (_, samples) = cached.as_ref().expect("filled above");
        let (bw, gain) = prediction_at(&p, &truth)?;
        let closed = rate_error_stats(&bw, &gain, &truth, Some(cfg.slots_per_frame), &radio)?;
        let oracle = samples.against(&bw, &gain, &radio, exec)?;
        let sd = oracle.error.std_dev();
        let var = oracle.error.variance();
        report.rows.push(GridRow {
            snr_db: p.snr_db,
            bandwidth_cv: p.bandwidth_cv,
            gain_delta_ratio: p.gain_delta_ratio,
            bandwidth_distribution: p.bandwidth_distribution,
            gain_distribution: p.gain_distribution,
            closed_mean: closed.mean,
            oracle_mean: oracle.error.mean,
            closed_variance: closed.variance,
            oracle_variance: var,
            mean_gap_in_sd: (closed.mean - oracle.error.mean).abs() / sd,
            variance_rel_gap: (closed.variance - var).abs() / var,
            ks_normal: oracle.ks_normal(),
            high_snr: closed.high_snr,
        });
        for (z, density) in oracle.histogram(cfg.histogram_bins, cfg.histogram_range) {
            report.pdf.push(PdfRow {
                snr_db: p.snr_db,
                bandwidth_distribution: p.bandwidth_distribution,
                gain_distribution: p.gain_distribution,
                z,
                density,
                normal_density: standard_normal_pdf(z),
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasedInput {
    Bandwidth,
    Gain,
}

/// Mean prediction error when one input is biased by `eta`. Rates in bit/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub input: BiasedInput,
    pub eta: f64,
    pub closed_mean: f64,
    pub oracle_mean: f64,
    pub oracle_std_err: f64,
    /// Mean true bandwidth, so curves can be normalised.
    pub mean_bandwidth: f64,
}

/// Sweeps the bias factor of each input at `bias_snr_db`, sharing one set
/// of true-rate samples.
pub fn run_bias(cfg: &StatsConfig, exec: Execution) -> Result<Vec<BiasRow>> {
    cfg.validate()?;
    if cfg.bias_factors.is_empty() {
        return Ok(Vec::new());
    }
    let radio = cfg.radio()?;
    let truth = cfg.truth(cfg.bias_snr_db, &radio)?;
    let seed = cfg.seed ^ cfg.bias_snr_db.to_bits() ^ 0xB1A5;
    let samples = TruthSamples::generate(&truth, cfg.slots_per_frame, &radio, cfg.samples, seed, exec)?;
    let w = truth.mean_bandwidth;
    let mut rows = Vec::new();
    for input in [BiasedInput::Bandwidth, BiasedInput::Gain] {
        for &eta in &cfg.bias_factors {
            let (bw_eta, gain_eta) = match input {
                BiasedInput::Bandwidth => (eta, 1.0),
                BiasedInput::Gain => (1.0, eta),
            };
            let bw = BandwidthPrediction::new(bw_eta * w, cfg.bias_bandwidth_cv * w, PredictionDistribution::Gaussian)?;
            let gain = GainPrediction::with_delta_ratio(
                gain_eta * truth.gain,
                cfg.bias_gain_delta_ratio,
                PredictionDistribution::Uniform,
            )?;
            let closed = rate_error_stats(&bw, &gain, &truth, Some(cfg.slots_per_frame), &radio)?;
            let oracle = samples.against(&bw, &gain, &radio, exec)?;
            rows.push(BiasRow {
                input,
                eta,
                closed_mean: closed.mean,
                oracle_mean: oracle.error.mean,
                oracle_std_err: oracle.error.std_err(),
                mean_bandwidth: w,
            });
        }
    }
    Ok(rows)
}
