//! Many trials: aggregation, arrival-rate sweeps and CDFs.

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::qos::{cdf_points, QosReport};
use super::trial::{run_trial, TrialOptions, TrialOutcome};
use crate::error::Result;
use crate::par::{map_indexed, Execution};

/// Runs trials `0..cfg.trials`; results come back in trial order.
pub fn run_trials(cfg: &ScenarioConfig, exec: Execution) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    map_indexed(cfg.trials, exec, |t| run_trial(cfg, t, TrialOptions::default()))
        .into_iter()
        .collect()
}

/// Per-user QoS of all trials, in trial order.
pub fn pooled(outcomes: &[TrialOutcome]) -> QosReport {
    let mut r = QosReport::default();
    for o in outcomes {
        r.merge(&o.qos);
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rate_per_s: f64,
    pub trials: usize,
    pub users: usize,
    /// Mean over users of the total stalling time.
    pub mean_total_stall_s: f64,
    pub satisfaction: f64,
    pub overloaded_trials: usize,
    #[serde(skip)]
    pub report: QosReport,
}

/// Runs the scenario at each arrival rate.
pub fn sweep_arrival_rate(cfg: &ScenarioConfig, rates: &[f64], exec: Execution) -> Result<Vec<SweepPoint>> {
    rates
        .iter()
        .map(|&rate| {
            let mut c = cfg.clone();
            c.arrivals.rate_per_s = rate;
            let outcomes = run_trials(&c, exec)?;
            let report = pooled(&outcomes);
            Ok(SweepPoint {
                rate_per_s: rate,
                trials: outcomes.len(),
                users: report.users.len(),
                mean_total_stall_s: report.mean_total_stall_s(),
                satisfaction: report.satisfaction_fraction(),
                overloaded_trials: outcomes.iter().filter(|o| o.overloaded).count(),
                report,
            })
        })
        .collect()
}

/// Largest rate such that it and every lower rate of the sweep keep at
/// least `quantile` of users within `tolerance_s` of stalling. `None` if
/// even the lowest rate fails.
pub fn max_supportable_rate(points: &[SweepPoint], tolerance_s: f64, quantile: f64) -> Option<f64> {
    let mut best = None;
    for p in points {
        if p.report.satisfaction_at(tolerance_s) >= quantile {
            best = Some(p.rate_per_s);
        } else {
            break;
        }
    }
    best
}

/// The three CDFs of pooled per-user metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosCdfs {
    pub stall_count: Vec<(f64, f64)>,
    pub stall_time_s: Vec<(f64, f64)>,
    pub max_stall_s: Vec<(f64, f64)>,
}

pub fn emit_cdfs(report: &QosReport) -> QosCdfs {
    QosCdfs {
        stall_count: cdf_points(&report.stall_counts()),
        stall_time_s: cdf_points(&report.stall_times()),
        max_stall_s: cdf_points(&report.max_stalls()),
    }
}
