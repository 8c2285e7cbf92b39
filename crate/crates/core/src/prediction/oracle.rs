//! Monte Carlo oracle for the rate prediction error.
//!
//! Each sample draws a predicted bandwidth and gain, evaluates the
//! predicted frame-average rate over `T_s` fresh fading draws, and
//! subtracts an independently simulated true frame-average rate.

use std::f64::consts::LN_2;

use rand::Rng;

use super::{BandwidthPrediction, GainPrediction, TrueFrameState};
use crate::channel::{RadioParams, SlotBandwidth, SmallScaleFading};
use crate::error::{domain, Result};
use crate::par::{map_indexed, Execution};
use crate::rng::{stream_rng, Stream};
use crate::stats::{ks_vs_standard_normal, standardized_histogram, Moments};

const CHUNK: usize = 8192;

#[derive(Debug, Clone)]
pub struct OracleReport {
    /// Moments of `R_hat - R`.
    pub error: Moments,
    pub predicted: Moments,
    pub truth: Moments,
    /// Error samples in draw order.
    pub samples: Vec<f64>,
}

impl OracleReport {
    /// KS distance of the standardised errors to N(0, 1).
    pub fn ks_normal(&self) -> f64 {
        ks_vs_standard_normal(&self.samples)
    }

    pub fn histogram(&self, bins: usize, range: f64) -> Vec<(f64, f64)> {
        standardized_histogram(&self.samples, bins, range)
    }
}

/// Slots whose `1 + snr` factors are multiplied before taking one log.
/// `(1 + 1e5)^16` stays far below `f64::MAX`.
const LOG_BLOCK: usize = 16;

/// Sum over the slots of `ln(1 + snr * ||h||^2)`, with fresh fading draws.
fn sum_ln_1p<R: Rng + ?Sized>(snr: f64, slots: usize, fading: &SmallScaleFading, rng: &mut R) -> f64 {
    let mut total = 0.0;
    let mut left = slots;
    while left > 0 {
        let n = left.min(LOG_BLOCK);
        let mut prod = 1.0;
        for _ in 0..n {
            prod *= 1.0 + snr * fading.sample(rng);
        }
        total += prod.ln();
        left -= n;
    }
    total
}

/// Draws of the predicted frame-average rate `R_hat`.
#[derive(Debug, Clone, Copy)]
pub struct PredictedSampler {
    bw: BandwidthPrediction,
    gain: GainPrediction,
    fading: SmallScaleFading,
    snr_per_gain: f64,
    time_slots: usize,
}

impl PredictedSampler {
    pub fn new(
        bw: &BandwidthPrediction,
        gain: &GainPrediction,
        time_slots: usize,
        radio: &RadioParams,
    ) -> Result<Self> {
        if time_slots == 0 {
            return Err(domain("time_slots must be >= 1"));
        }
        Ok(PredictedSampler {
            bw: *bw,
            gain: *gain,
            fading: SmallScaleFading::new(radio.num_antennas)?,
            snr_per_gain: radio.snr_per_gain(),
            time_slots,
        })
    }

    /// `W_hat / T_s * sum_t log2(1 + alpha_hat ||h_t||^2 P_max / sigma^2)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w_hat = self.bw.sample(rng);
        let snr_hat = self.gain.sample(rng) * self.snr_per_gain;
        let se = sum_ln_1p(snr_hat, self.time_slots, &self.fading, rng);
        w_hat * se / (self.time_slots as f64 * LN_2)
    }
}

/// Draws of the true frame-average rate `R`.
#[derive(Debug, Clone, Copy)]
pub struct TruthSampler {
    fading: SmallScaleFading,
    slot_bw: SlotBandwidth,
    snr: f64,
    time_slots: usize,
}

impl TruthSampler {
    pub fn new(truth: &TrueFrameState, time_slots: usize, radio: &RadioParams) -> Result<Self> {
        if time_slots == 0 {
            return Err(domain("time_slots must be >= 1"));
        }
        Ok(TruthSampler {
            fading: SmallScaleFading::new(radio.num_antennas)?,
            slot_bw: SlotBandwidth::new(truth.mean_bandwidth, truth.bandwidth_cv)?,
            snr: truth.gain * radio.snr_per_gain(),
            time_slots,
        })
    }

    /// `1/T_s * sum_t W_t log2(1 + alpha ||h_t||^2 P_max / sigma^2)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut r = 0.0;
        for _ in 0..self.time_slots {
            let w = self.slot_bw.sample(rng);
            r += w * (self.snr * self.fading.sample(rng)).ln_1p();
        }
        r / (self.time_slots as f64 * LN_2)
    }
}

fn chunked<F>(samples: usize, seed: u64, part: u64, exec: Execution, draw: F) -> Vec<f64>
where
    F: Fn(&mut crate::rng::SimRng) -> f64 + Send + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts = map_indexed(chunks, exec, |c| {
        let n = CHUNK.min(samples - c * CHUNK);
        let mut rng = stream_rng(seed, Stream::Oracle, &[part, c as u64]);
        (0..n).map(|_| draw(&mut rng)).collect::<Vec<f64>>()
    });
    parts.concat()
}

/// Simulated true rates, reusable against several predictions that share
/// the same ground truth.
#[derive(Debug, Clone)]
pub struct TruthSamples {
    pub rates: Vec<f64>,
    seed: u64,
    time_slots: usize,
}

impl TruthSamples {
    pub fn generate(
        truth: &TrueFrameState,
        time_slots: usize,
        radio: &RadioParams,
        samples: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<Self> {
        let sampler = TruthSampler::new(truth, time_slots, radio)?;
        Ok(TruthSamples {
            rates: chunked(samples, seed, 0, exec, |rng| sampler.draw(rng)),
            seed,
            time_slots,
        })
    }

    /// Pairs each stored true rate with an independent predicted rate.
    pub fn against(
        &self,
        bw: &BandwidthPrediction,
        gain: &GainPrediction,
        radio: &RadioParams,
        exec: Execution,
    ) -> Result<OracleReport> {
        let sampler = PredictedSampler::new(bw, gain, self.time_slots, radio)?;
        let predicted = chunked(self.rates.len(), self.seed, 1, exec, |rng| sampler.draw(rng));
        let samples: Vec<f64> = predicted.iter().zip(&self.rates).map(|(p, t)| p - t).collect();
        Ok(OracleReport {
            error: samples.iter().copied().collect(),
            predicted: predicted.iter().copied().collect(),
            truth: self.rates.iter().copied().collect(),
            samples,
        })
    }
}

/// Runs `samples` joint draws split into fixed-size chunks, each with its
/// own RNG stream, so the result is independent of the execution mode.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_error_oracle(
    bw: &BandwidthPrediction,
    gain: &GainPrediction,
    truth: &TrueFrameState,
    time_slots: usize,
    radio: &RadioParams,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<OracleReport> {
    TruthSamples::generate(truth, time_slots, radio, samples, seed, exec)?.against(bw, gain, radio, exec)
}
