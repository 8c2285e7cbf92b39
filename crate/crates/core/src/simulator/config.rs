//! Scenario configuration.
//!
//! Configs are TOML with one table per concern and unit-suffixed keys
//! (`cell_radius_m`, `max_bandwidth_mhz`, ...). Every key has a default
//! matching the reference scenario, so a config only lists what it changes.

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, PathLoss, RadioParams, TimeGrid};
use crate::error::{Error, Result};
use crate::planner::Objective;
use crate::prediction::PredictionDistribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub num_bs: usize,
    pub cell_radius_m: f64,
    pub road_offsets_m: Vec<f64>,
    /// Mean residual bandwidth per BS; shorter lists repeat cyclically.
    pub bs_mean_bandwidth_mhz: Vec<f64>,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            num_bs: 6,
            cell_radius_m: 250.0,
            road_offsets_m: vec![50.0, 100.0, 150.0],
            bs_mean_bandwidth_mhz: vec![10.0, 1.0],
            speed_min_mps: 10.0,
            speed_max_mps: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub num_antennas: usize,
    pub max_bandwidth_mhz: f64,
    pub max_power_w: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub edge_snr_db: f64,
    /// Coefficient of variation of the per-slot residual bandwidth.
    pub slot_bandwidth_cv: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            num_antennas: 8,
            max_bandwidth_mhz: 10.0,
            max_power_w: 40.0,
            noise_psd_dbm_per_hz: -174.0,
            edge_snr_db: 5.0,
            slot_bandwidth_cv: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub frames_per_window: usize,
    pub slots_per_frame: usize,
    pub frame_duration_s: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            frames_per_window: 300,
            slots_per_frame: 100,
            frame_duration_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VideoConfig {
    pub size_mbyte: f64,
    pub segments: usize,
    pub segment_duration_s: f64,
}

impl Default for VideoConfig {
    fn default() -> Self {
        VideoConfig {
            size_mbyte: 20.0,
            segments: 10,
            segment_duration_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrivalConfig {
    pub rate_per_s: f64,
    pub first_frame: usize,
    pub last_frame: usize,
}

impl Default for ArrivalConfig {
    fn default() -> Self {
        ArrivalConfig {
            rate_per_s: 0.5,
            first_frame: 1,
            last_frame: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionNoiseConfig {
    /// Predict each frame-average rate exactly (the realized average over
    /// the frame's slots); the noise settings below are then ignored.
    pub error_free: bool,
    /// CV of the predicted frame bandwidth around its mean.
    pub bandwidth_cv: f64,
    /// delta / mean of the predicted large-scale gain.
    pub gain_delta_ratio: f64,
    /// Multiplicative bias of the predicted bandwidth mean.
    pub bandwidth_bias: f64,
    /// Multiplicative bias of the predicted gain mean.
    pub gain_bias: f64,
    pub bandwidth_distribution: PredictionDistribution,
    pub gain_distribution: PredictionDistribution,
}

impl Default for PredictionNoiseConfig {
    fn default() -> Self {
        PredictionNoiseConfig {
            error_free: false,
            bandwidth_cv: 0.2,
            gain_delta_ratio: 1.0,
            bandwidth_bias: 1.0,
            gain_bias: 1.0,
            bandwidth_distribution: PredictionDistribution::Gaussian,
            gain_distribution: PredictionDistribution::Uniform,
        }
    }
}

impl PredictionNoiseConfig {
    /// Zero prediction error: every predicted average rate equals the
    /// realized one.
    pub fn error_free() -> Self {
        PredictionNoiseConfig {
            error_free: true,
            ..Self::exact_inputs()
        }
    }

    /// Bandwidth and gain predicted at their true means, rates from the
    /// large-antenna approximation.
    pub fn exact_inputs() -> Self {
        PredictionNoiseConfig {
            bandwidth_cv: 0.0,
            gain_delta_ratio: 0.0,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceKind {
    /// Video on demand: planned at the request, playback after the
    /// initial delay.
    Vod,
    /// Video on reservation: planned at the reservation, playback after
    /// the lead time, no initial delay.
    Vor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub kind: ServiceKind,
    pub initial_delay_s: f64,
    pub lead_s: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            kind: ServiceKind::Vod,
            initial_delay_s: 3.0,
            lead_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Proposed,
    MaxThroughput,
    MinTime,
    NonpredQos,
    NonpredBestEffort,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Proposed,
        Scheme::MaxThroughput,
        Scheme::MinTime,
        Scheme::NonpredQos,
        Scheme::NonpredBestEffort,
    ];

    /// Planning objective, `None` for the non-predictive schemes.
    pub fn objective(self) -> Option<Objective> {
        match self {
            Scheme::Proposed => Some(Objective::WeightedTime),
            Scheme::MaxThroughput => Some(Objective::MaxThroughput),
            Scheme::MinTime => Some(Objective::MinTime),
            Scheme::NonpredQos | Scheme::NonpredBestEffort => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::MaxThroughput => "max_throughput",
            Scheme::MinTime => "min_time",
            Scheme::NonpredQos => "nonpred_qos",
            Scheme::NonpredBestEffort => "nonpred_best_effort",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        let s = s.to_ascii_lowercase().replace('-', "_");
        Scheme::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub policy: Scheme,
    /// Use per-slot channel state when executing a plan.
    pub csi: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            policy: Scheme::Proposed,
            csi: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosConfig {
    /// A user is satisfied when its total stalling time is at most this.
    pub stall_tolerance_s: f64,
    /// Fraction of satisfied users a supportable arrival rate needs.
    pub satisfaction_quantile: f64,
}

impl Default for QosConfig {
    fn default() -> Self {
        QosConfig {
            stall_tolerance_s: 10.0,
            satisfaction_quantile: 0.99,
        }
    }
}

/// Axes of the figure sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Arrival rates, ascending.
    pub rates_per_s: Vec<f64>,
    /// Stalling tolerances for the supportable-rate curve, seconds.
    pub tolerances_s: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            rates_per_s: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
            tolerances_s: vec![0.0, 5.0, 10.0, 20.0, 40.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub trials: usize,
    pub topology: TopologyConfig,
    pub radio: RadioConfig,
    pub grid: GridConfig,
    pub video: VideoConfig,
    pub arrivals: ArrivalConfig,
    pub prediction: PredictionNoiseConfig,
    pub service: ServiceConfig,
    pub scheme: SchemeConfig,
    pub qos: QosConfig,
    pub sweep: SweepConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            trials: 100,
            topology: TopologyConfig::default(),
            radio: RadioConfig::default(),
            grid: GridConfig::default(),
            video: VideoConfig::default(),
            arrivals: ArrivalConfig::default(),
            prediction: PredictionNoiseConfig::default(),
            service: ServiceConfig::default(),
            scheme: SchemeConfig::default(),
            qos: QosConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

fn whole_frames(seconds: f64, frame: f64, what: &str) -> Result<usize> {
    let n = seconds / frame;
    if !(n >= 0.0) || (n - n.round()).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "{what} ({seconds} s) must be a whole number of frames of {frame} s"
        )));
    }
    Ok(n.round() as usize)
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let t = &self.topology;
        if t.num_bs == 0 || t.road_offsets_m.is_empty() || t.bs_mean_bandwidth_mhz.is_empty() {
            return bad("topology needs at least one BS, road and bandwidth value".into());
        }
        if !(t.cell_radius_m > 0.0) || t.road_offsets_m.iter().any(|&o| !(o > 0.0)) {
            return bad("cell radius and road offsets must be positive".into());
        }
        if t.bs_mean_bandwidth_mhz.iter().any(|&w| !(w >= 0.0)) {
            return bad("bs_mean_bandwidth_mhz must be non-negative".into());
        }
        if !(0.0 < t.speed_min_mps && t.speed_min_mps <= t.speed_max_mps) {
            return bad("need 0 < speed_min_mps <= speed_max_mps".into());
        }
        if self.radio.slot_bandwidth_cv < 0.0 {
            return bad("slot_bandwidth_cv must be >= 0".into());
        }
        self.radio_params()?;
        self.time_grid()?;
        if self.video.segments == 0 || !(self.video.size_mbyte > 0.0) {
            return bad("video needs a positive size and at least one segment".into());
        }
        let a = &self.arrivals;
        if !(a.rate_per_s >= 0.0) || a.first_frame < 1 || a.first_frame > a.last_frame {
            return bad("arrivals need rate >= 0 and 1 <= first_frame <= last_frame".into());
        }
        if a.last_frame > self.grid.frames_per_window {
            return bad("the arrival window must lie inside the prediction window".into());
        }
        let p = &self.prediction;
        if p.bandwidth_cv < 0.0 || !(0.0..2.0).contains(&p.gain_delta_ratio) {
            return bad("need bandwidth_cv >= 0 and 0 <= gain_delta_ratio < 2".into());
        }
        if !(p.bandwidth_bias > 0.0 && p.gain_bias > 0.0) {
            return bad("prediction biases must be positive".into());
        }
        self.initial_delay_frames()?;
        self.lead_frames()?;
        if !(self.qos.stall_tolerance_s >= 0.0) || !(0.0..=1.0).contains(&self.qos.satisfaction_quantile) {
            return bad("need stall_tolerance_s >= 0 and satisfaction_quantile in [0, 1]".into());
        }
        let r = &self.sweep.rates_per_s;
        if r.iter().any(|&x| !(x >= 0.0)) || r.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sweep rates must be non-negative and strictly ascending".into());
        }
        if self.sweep.tolerances_s.iter().any(|&x| !(x >= 0.0)) {
            return bad("sweep tolerances must be non-negative".into());
        }
        Ok(())
    }

    pub fn radio_params(&self) -> Result<RadioParams> {
        let r = &self.radio;
        RadioParams::new(
            r.num_antennas,
            r.max_bandwidth_mhz * 1e6,
            r.max_power_w,
            db_to_linear(r.noise_psd_dbm_per_hz - 30.0),
        )
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn path_loss(&self) -> Result<PathLoss> {
        PathLoss::calibrated(
            self.topology.cell_radius_m,
            self.radio.edge_snr_db,
            &self.radio_params()?,
        )
    }

    pub fn segment_frames(&self) -> Result<usize> {
        whole_frames(
            self.video.segment_duration_s,
            self.grid.frame_duration_s,
            "segment_duration_s",
        )
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        let g = &self.grid;
        if !(g.frame_duration_s > 0.0) {
            return Err(Error::Config("frame_duration_s must be positive".into()));
        }
        TimeGrid::new(
            g.frames_per_window,
            g.slots_per_frame,
            g.frame_duration_s,
            self.segment_frames()?,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn initial_delay_frames(&self) -> Result<usize> {
        whole_frames(
            self.service.initial_delay_s,
            self.grid.frame_duration_s,
            "initial_delay_s",
        )
    }

    pub fn lead_frames(&self) -> Result<usize> {
        whole_frames(self.service.lead_s, self.grid.frame_duration_s, "lead_s")
    }

    /// Segment size in bits (equal segments).
    pub fn segment_bits(&self) -> f64 {
        self.video.size_mbyte * 8e6 / self.video.segments as f64
    }

    /// Mean residual bandwidth of BS `i`, Hz.
    pub fn bs_mean_bandwidth(&self, i: usize) -> f64 {
        let w = &self.topology.bs_mean_bandwidth_mhz;
        w[i % w.len()] * 1e6
    }

    /// SNR per unit small-scale gain at distance `d`.
    pub fn snr_at(&self, d: f64) -> Result<f64> {
        Ok(self.path_loss()?.gain(d)?.value() * self.radio_params()?.snr_per_gain())
    }

    pub fn edge_snr_linear(&self) -> f64 {
        db_to_linear(self.radio.edge_snr_db)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        let text = c.to_toml().unwrap();
        assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), c);
        assert_eq!(c.segment_frames().unwrap(), 10);
        assert_eq!(c.segment_bits(), 16e6);
        assert_eq!(c.bs_mean_bandwidth(3), 1e6);
        assert_eq!(c.bs_mean_bandwidth(4), 10e6);
    }

    #[test]
    fn partial_config_and_errors() {
        let c = ScenarioConfig::from_toml("seed = 9\n[arrivals]\nrate_per_s = 0.3\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.arrivals.rate_per_s, 0.3);
        assert_eq!(c.grid.frames_per_window, 300);
        let e = ScenarioConfig::from_toml("[grid]\nframes = 3\n").unwrap_err();
        assert!(e.to_string().contains("frames"), "{e}");
        assert!(ScenarioConfig::from_toml("[video]\nsegment_duration_s = 2.5\n").is_err());
    }

    #[test]
    fn edge_snr_is_calibrated() {
        let c = ScenarioConfig::default();
        assert!((c.snr_at(250.0).unwrap() - c.edge_snr_linear()).abs() < 1e-9 * c.edge_snr_linear());
    }

    #[test]
    fn scheme_names() {
        for s in Scheme::ALL {
            assert_eq!(Scheme::parse(s.name()), Some(s));
        }
        assert_eq!(Scheme::parse("nonpred-qos"), Some(Scheme::NonpredQos));
    }
}
