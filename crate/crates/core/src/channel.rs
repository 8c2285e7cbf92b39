//! Physical-layer primitives: path loss, small-scale fading, per-slot
//! residual bandwidth and the instantaneous / frame-average rates.
//!
//! All quantities are SI: Hz, W, W/Hz, bit/s, s.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Frame/slot structure of a prediction window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// Frames per prediction window.
    pub frames_per_window: usize,
    pub slots_per_frame: usize,
    /// Frame duration in seconds.
    pub frame_duration: f64,
    /// Playback duration of one segment, in frames.
    pub segment_frames: usize,
}

impl TimeGrid {
    pub fn new(
        frames_per_window: usize,
        slots_per_frame: usize,
        frame_duration: f64,
        segment_frames: usize,
    ) -> Result<Self> {
        let grid = TimeGrid {
            frames_per_window,
            slots_per_frame,
            frame_duration,
            segment_frames,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segment_frames < 1 || self.frames_per_window < self.segment_frames {
            return Err(domain(format!(
                "need frames_per_window ({}) >= segment_frames ({}) >= 1",
                self.frames_per_window, self.segment_frames
            )));
        }
        if self.slots_per_frame < 1 {
            return Err(domain("slots_per_frame must be >= 1"));
        }
        if !(self.frame_duration > 0.0) {
            return Err(domain("frame_duration must be > 0"));
        }
        Ok(())
    }

    pub fn slot_duration(&self) -> f64 {
        self.frame_duration / self.slots_per_frame as f64
    }
}

/// Base-station radio parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub num_antennas: usize,
    /// W_max, Hz.
    pub max_bandwidth: f64,
    /// P_max, W.
    pub max_power: f64,
    /// N_0, W/Hz.
    pub noise_psd: f64,
}

impl RadioParams {
    pub fn new(num_antennas: usize, max_bandwidth: f64, max_power: f64, noise_psd: f64) -> Result<Self> {
        let r = RadioParams {
            num_antennas,
            max_bandwidth,
            max_power,
            noise_psd,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas < 1 {
            return Err(domain("num_antennas must be >= 1"));
        }
        for (name, v) in [
            ("max_bandwidth", self.max_bandwidth),
            ("max_power", self.max_power),
            ("noise_psd", self.noise_psd),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// sigma^2 = N_0 * W_max.
    pub fn noise_power(&self) -> f64 {
        self.noise_psd * self.max_bandwidth
    }

    /// P_max / sigma^2; multiplying a large-scale gain by this gives the
    /// average SNR per unit small-scale gain.
    pub fn snr_per_gain(&self) -> f64 {
        self.max_power / self.noise_power()
    }

    /// Residual power tied to residual bandwidth: p = W * P_max / W_max.
    pub fn residual_power(&self, residual_bandwidth: f64) -> f64 {
        residual_bandwidth * self.max_power / self.max_bandwidth
    }
}

/// Linear large-scale (path-loss) power gain of a user in one frame.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LargeScaleGain(f64);

impl LargeScaleGain {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(LargeScaleGain(value))
        } else {
            Err(domain(format!("large-scale gain must be positive, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Average SNR alpha * P_max / sigma^2 (per unit small-scale gain).
    pub fn average_snr(self, radio: &RadioParams) -> f64 {
        self.0 * radio.snr_per_gain()
    }
}

/// One time slot as seen by one user: its small-scale gain and the BS's
/// residual bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotState {
    /// ||h||^2.
    pub small_scale_gain: f64,
    /// W_{j,t}, Hz.
    pub residual_bandwidth: f64,
}

impl SlotState {
    pub fn new(small_scale_gain: f64, residual_bandwidth: f64) -> Result<Self> {
        if !(small_scale_gain >= 0.0) || !(residual_bandwidth >= 0.0) {
            return Err(domain("slot gain and bandwidth must be non-negative"));
        }
        Ok(SlotState {
            small_scale_gain,
            residual_bandwidth,
        })
    }

    pub fn residual_power(&self, radio: &RadioParams) -> f64 {
        radio.residual_power(self.residual_bandwidth)
    }
}

/// Path loss `36.8 + 36.7 log10(d)` dB as a linear gain (uncalibrated).
pub fn path_loss_gain(distance: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(domain(format!("distance must be positive, got {distance}")));
    }
    let loss_db = 36.8 + 36.7 * distance.log10();
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Scale factor `c` such that `c * path_loss_gain(edge) * P_max / sigma^2`
/// equals the target edge SNR.
pub fn calibrate_snr(edge_distance: f64, target_edge_snr_db: f64, radio: &RadioParams) -> Result<f64> {
    let g = path_loss_gain(edge_distance)?;
    Ok(db_to_linear(target_edge_snr_db) / (g * radio.snr_per_gain()))
}

/// Calibrated path-loss model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub scale: f64,
}

impl PathLoss {
    pub fn calibrated(edge_distance: f64, target_edge_snr_db: f64, radio: &RadioParams) -> Result<Self> {
        Ok(PathLoss {
            scale: calibrate_snr(edge_distance, target_edge_snr_db, radio)?,
        })
    }

    pub fn gain(&self, distance: f64) -> Result<LargeScaleGain> {
        LargeScaleGain::new(self.scale * path_loss_gain(distance)?)
    }
}

/// Sampler for ||h||^2 of an i.i.d. Rayleigh vector with `N_t` unit-power
/// entries: Gamma(shape N_t, scale 1), mean and variance both N_t.
#[derive(Debug, Clone, Copy)]
pub struct SmallScaleFading {
    dist: Gamma<f64>,
}

impl SmallScaleFading {
    pub fn new(num_antennas: usize) -> Result<Self> {
        if num_antennas < 1 {
            return Err(domain("num_antennas must be >= 1"));
        }
        Ok(SmallScaleFading {
            dist: Gamma::new(num_antennas as f64, 1.0).expect("valid gamma parameters"),
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.dist.sample(rng)
    }
}

pub fn draw_small_scale<R: Rng + ?Sized>(num_antennas: usize, rng: &mut R) -> Result<f64> {
    Ok(SmallScaleFading::new(num_antennas)?.sample(rng))
}

/// Per-slot residual bandwidth: Gaussian around the frame mean with the
/// given coefficient of variation, clipped at zero.
#[derive(Debug, Clone, Copy)]
pub struct SlotBandwidth {
    mean: f64,
    dist: Option<Normal<f64>>,
}

impl SlotBandwidth {
    pub fn new(mean: f64, cv: f64) -> Result<Self> {
        if !(mean >= 0.0) || !(cv >= 0.0) {
            return Err(domain("bandwidth mean and cv must be non-negative"));
        }
        let dist = if cv > 0.0 && mean > 0.0 {
            Some(Normal::new(mean, cv * mean).expect("finite normal parameters"))
        } else {
            None
        };
        Ok(SlotBandwidth { mean, dist })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.dist {
            Some(d) => d.sample(rng).max(0.0),
            None => self.mean,
        }
    }
}

/// Achievable rate in one slot: `W log2(1 + alpha ||h||^2 p / (N_0 W))`.
pub fn instantaneous_rate(slot: &SlotState, gain: LargeScaleGain, radio: &RadioParams) -> f64 {
    let w = slot.residual_bandwidth;
    if w <= 0.0 {
        return 0.0;
    }
    let p = slot.residual_power(radio);
    let snr = gain.value() * slot.small_scale_gain * p / (radio.noise_psd * w);
    w * snr.ln_1p() / std::f64::consts::LN_2
}

/// Same rate from the average SNR directly (proportional power makes the
/// SNR independent of the residual bandwidth).
#[inline]
pub fn rate_from_snr(residual_bandwidth: f64, average_snr: f64, small_scale_gain: f64) -> f64 {
    residual_bandwidth * (average_snr * small_scale_gain).ln_1p() / std::f64::consts::LN_2
}

/// Time average of [`instantaneous_rate`] over the slots of one frame.
pub fn frame_average_rate(slots: &[SlotState], gain: LargeScaleGain, radio: &RadioParams) -> Result<f64> {
    if slots.is_empty() {
        return Err(domain("frame_average_rate needs at least one slot"));
    }
    let sum: f64 = slots.iter().map(|s| instantaneous_rate(s, gain, radio)).sum();
    Ok(sum / slots.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use approx::assert_relative_eq;

    fn radio() -> RadioParams {
        // -174 dBm/Hz
        RadioParams::new(8, 10e6, 40.0, db_to_linear(-174.0) * 1e-3).unwrap()
    }

    #[test]
    fn path_loss_at_one_meter() {
        assert_relative_eq!(path_loss_gain(1.0).unwrap(), 10f64.powf(-3.68), max_relative = 1e-12);
        assert_relative_eq!(path_loss_gain(1.0).unwrap(), 2.089e-4, max_relative = 1e-3);
    }

    #[test]
    fn path_loss_decade_factor() {
        let r = path_loss_gain(1.0).unwrap() / path_loss_gain(10.0).unwrap();
        assert_relative_eq!(r, 10f64.powf(3.67), max_relative = 1e-12);
    }

    #[test]
    fn path_loss_rejects_non_positive() {
        assert!(path_loss_gain(0.0).is_err());
        assert!(path_loss_gain(-3.0).is_err());
    }

    #[test]
    fn calibration_hits_target() {
        let r = radio();
        let pl = PathLoss::calibrated(250.0, 5.0, &r).unwrap();
        let snr = pl.gain(250.0).unwrap().average_snr(&r);
        assert_relative_eq!(snr, 10f64.powf(0.5), max_relative = 1e-12);

        let c0 = calibrate_snr(250.0, 0.0, &r).unwrap();
        assert_relative_eq!(
            c0 * path_loss_gain(250.0).unwrap() * r.snr_per_gain(),
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn calibration_scales_inversely_with_power() {
        let r = radio();
        let mut r2 = r;
        r2.max_power *= 2.0;
        let c1 = calibrate_snr(250.0, 5.0, &r).unwrap();
        let c2 = calibrate_snr(250.0, 5.0, &r2).unwrap();
        assert_relative_eq!(c2, c1 / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn rate_examples() {
        let r = radio();
        // alpha chosen so alpha*P/sigma^2 = 1, ||h||^2 = 1
        let g = LargeScaleGain::new(1.0 / r.snr_per_gain()).unwrap();
        let s = SlotState::new(1.0, 1e6).unwrap();
        assert_relative_eq!(instantaneous_rate(&s, g, &r), 1e6, max_relative = 1e-12);

        let g = LargeScaleGain::new(10f64.powf(3.5) / r.snr_per_gain()).unwrap();
        let s = SlotState::new(1.0, 10e6).unwrap();
        let expect = 10e6 * (1.0 + 10f64.powf(3.5)).log2();
        assert_relative_eq!(instantaneous_rate(&s, g, &r), expect, max_relative = 1e-12);
        assert_relative_eq!(expect / 1e6, 116.27, max_relative = 1e-3);

        let idle = SlotState::new(3.0, 0.0).unwrap();
        assert_eq!(instantaneous_rate(&idle, g, &r), 0.0);
    }

    #[test]
    fn frame_average_examples() {
        let r = radio();
        let g = LargeScaleGain::new(1.0 / r.snr_per_gain()).unwrap();
        let s = SlotState::new(1.0, 1e6).unwrap();
        let same = vec![s; 7];
        assert_relative_eq!(frame_average_rate(&same, g, &r).unwrap(), 1e6, max_relative = 1e-12);

        let mut one = vec![SlotState::new(1.0, 0.0).unwrap(); 100];
        one[17] = s;
        assert_relative_eq!(
            frame_average_rate(&one, g, &r).unwrap(),
            1e6 / 100.0,
            max_relative = 1e-12
        );

        assert!(frame_average_rate(&[], g, &r).is_err());
    }

    #[test]
    fn rate_monotone_in_inputs() {
        let r = radio();
        let base_g = 1e3 / r.snr_per_gain();
        let rate = |a: f64, h: f64, w: f64, p: f64| {
            let mut rr = r;
            rr.max_power = p;
            instantaneous_rate(&SlotState::new(h, w).unwrap(), LargeScaleGain::new(a).unwrap(), &rr)
        };
        let r0 = rate(base_g, 2.0, 1e6, 40.0);
        assert!(rate(base_g * 1.1, 2.0, 1e6, 40.0) > r0);
        assert!(rate(base_g, 2.5, 1e6, 40.0) > r0);
        assert!(rate(base_g, 2.0, 1.5e6, 40.0) > r0);
        assert!(rate(base_g, 2.0, 1e6, 50.0) > r0);
    }

    #[test]
    fn small_scale_moments() {
        // E = Var = N_t; check within 3 standard errors at 1e6 draws.
        for nt in [1usize, 8] {
            let f = SmallScaleFading::new(nt).unwrap();
            let mut rng = stream_rng(7, Stream::SmallScale, &[nt as u64]);
            let n = 1_000_000;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let x = f.sample(&mut rng);
                s += x;
                s2 += x * x;
            }
            let mean = s / n as f64;
            let var = s2 / n as f64 - mean * mean;
            let k = nt as f64;
            // SE(mean) = sqrt(k/n); SE(var) ~ sqrt((mu4 - k^2)/n), mu4 = 3k^2 + 6k for Gamma(k,1)
            let se_mean = (k / n as f64).sqrt();
            let se_var = ((3.0 * k * k + 6.0 * k - k * k) / n as f64).sqrt();
            assert!((mean - k).abs() < 3.0 * se_mean, "nt={nt} mean={mean}");
            assert!((var - k).abs() < 3.0 * se_var, "nt={nt} var={var}");
        }
    }

    #[test]
    fn small_scale_density_matches_gamma_pdf() {
        // Histogram of ||h||^2 vs x^{N-1} e^{-x} / Gamma(N), N = 8.
        let f = SmallScaleFading::new(8).unwrap();
        let mut rng = stream_rng(11, Stream::SmallScale, &[]);
        let n = 400_000;
        let width = 0.5;
        let bins = 40;
        let mut hist = vec![0usize; bins];
        for _ in 0..n {
            let x = f.sample(&mut rng);
            let b = (x / width) as usize;
            if b < bins {
                hist[b] += 1;
            }
        }
        let gamma8 = 5040.0;
        for (b, &c) in hist.iter().enumerate() {
            let x = (b as f64 + 0.5) * width;
            let pdf = x.powi(7) * (-x).exp() / gamma8;
            let emp = c as f64 / (n as f64 * width);
            assert!((emp - pdf).abs() < 0.006, "bin {b}: {emp} vs {pdf}");
        }
    }

    #[test]
    fn frame_average_variance_shrinks_with_slots() {
        // Var of a T_s-slot average = per-slot variance / T_s.
        let r = radio();
        let g = LargeScaleGain::new(db_to_linear(20.0) / r.snr_per_gain()).unwrap();
        let f = SmallScaleFading::new(8).unwrap();
        let bw = SlotBandwidth::new(1e6, 0.2).unwrap();
        let mut rng = stream_rng(3, Stream::SmallScale, &[1]);
        let ts = 25;
        let frames = 40_000;
        let mut per_slot = Vec::with_capacity(frames * ts);
        let mut avgs = Vec::with_capacity(frames);
        let mut slots = Vec::with_capacity(ts);
        for _ in 0..frames {
            slots.clear();
            for _ in 0..ts {
                slots.push(SlotState::new(f.sample(&mut rng), bw.sample(&mut rng)).unwrap());
            }
            per_slot.extend(slots.iter().map(|s| instantaneous_rate(s, g, &r)));
            avgs.push(frame_average_rate(&slots, g, &r).unwrap());
        }
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        let ratio = var(&avgs) / (var(&per_slot) / ts as f64);
        // SE of a variance ratio with 40k frames is about sqrt(2/40k) = 0.7%
        assert!((ratio - 1.0).abs() < 0.03, "ratio {ratio}");
    }
}
