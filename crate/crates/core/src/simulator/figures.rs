//! Figure presets: which scheme variants each figure compares and the
//! tables it produces.

use serde::{Deserialize, Serialize};

use super::config::{PredictionNoiseConfig, ScenarioConfig, Scheme, ServiceKind};
use super::sweep::{emit_cdfs, max_supportable_rate, pooled, run_trials, sweep_arrival_rate, SweepPoint};
use crate::error::{Error, Result};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    /// Mean stall against arrival rate, with and without prediction, VoD
    /// and VoR.
    F4,
    /// Mean stall against arrival rate, with and without CSI.
    F5,
    /// Supportable arrival rate against stalling tolerance.
    F6,
    /// Mean stall against arrival rate for every scheme.
    F7,
    /// CDFs of per-user stall count, stall time and longest stall.
    F8,
}

impl Figure {
    pub const ALL: [Figure; 5] = [Figure::F4, Figure::F5, Figure::F6, Figure::F7, Figure::F8];

    pub fn name(self) -> &'static str {
        match self {
            Figure::F4 => "f4",
            Figure::F5 => "f5",
            Figure::F6 => "f6",
            Figure::F7 => "f7",
            Figure::F8 => "f8",
        }
    }

    pub fn parse(s: &str) -> Option<Figure> {
        let s = s.to_ascii_lowercase();
        let s = s.strip_prefix("fig").map(|r| format!("f{r}")).unwrap_or(s);
        Figure::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Variants compared in the figure.
    pub fn series(self) -> Vec<Series> {
        let base = Series::new(Scheme::Proposed);
        match self {
            Figure::F4 => {
                let mut out = Vec::new();
                for scheme in [Scheme::Proposed, Scheme::NonpredQos] {
                    out.push(Series::new(scheme));
                    for lead in [10.0, 20.0] {
                        out.push(Series {
                            label: format!("{}_vor{}", scheme.name(), lead),
                            service: ServiceKind::Vor,
                            lead_s: lead,
                            ..Series::new(scheme)
                        });
                    }
                }
                out
            }
            Figure::F5 => {
                let mut out = Vec::new();
                for scheme in [Scheme::Proposed, Scheme::MinTime] {
                    out.push(Series::new(scheme));
                    out.push(Series {
                        label: format!("{}_no_csi", scheme.name()),
                        csi: false,
                        ..Series::new(scheme)
                    });
                }
                out
            }
            Figure::F6 | Figure::F7 | Figure::F8 => {
                let mut out = vec![
                    base.clone(),
                    Series {
                        label: "proposed_error_free".into(),
                        error_free: true,
                        ..base
                    },
                ];
                out.extend(Scheme::ALL[1..].iter().map(|&s| Series::new(s)));
                out
            }
        }
    }
}

/// One scheme variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub scheme: Scheme,
    pub csi: bool,
    pub service: ServiceKind,
    pub lead_s: f64,
    pub error_free: bool,
}

impl Series {
    pub fn new(scheme: Scheme) -> Series {
        Series {
            label: scheme.name().to_string(),
            scheme,
            csi: true,
            service: ServiceKind::Vod,
            lead_s: 0.0,
            error_free: false,
        }
    }

    /// The scenario with this variant's scheme, service and prediction.
    pub fn apply(&self, base: &ScenarioConfig) -> ScenarioConfig {
        let mut c = base.clone();
        c.scheme.policy = self.scheme;
        c.scheme.csi = self.csi;
        c.service.kind = self.service;
        if self.service == ServiceKind::Vor {
            c.service.lead_s = self.lead_s;
        }
        if self.error_free {
            c.prediction = PredictionNoiseConfig::error_free();
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub series: String,
    pub rate_per_s: f64,
    pub trials: usize,
    pub users: usize,
    pub mean_total_stall_s: f64,
    pub satisfaction: f64,
    pub overloaded_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub series: String,
    pub tolerance_s: f64,
    pub quantile: f64,
    /// Empty when even the lowest swept rate misses the quantile.
    pub max_rate_per_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub series: String,
    pub value: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Curve(Vec<CurveRow>),
    Capacity(Vec<CapacityRow>),
    Cdf(Vec<CdfRow>),
}

/// A table and the file stem it is written under.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTable {
    pub stem: String,
    pub table: Table,
}

fn curve_rows(label: &str, points: &[SweepPoint]) -> Vec<CurveRow> {
    points
        .iter()
        .map(|p| CurveRow {
            series: label.to_string(),
            rate_per_s: p.rate_per_s,
            trials: p.trials,
            users: p.users,
            mean_total_stall_s: p.mean_total_stall_s,
            satisfaction: p.satisfaction,
            overloaded_trials: p.overloaded_trials,
        })
        .collect()
}

/// Runs a figure for the given series (normally `figure.series()`, maybe
/// filtered).
pub fn run_figure(
    figure: Figure,
    base: &ScenarioConfig,
    series: &[Series],
    exec: Execution,
) -> Result<Vec<NamedTable>> {
    base.validate()?;
    if series.is_empty() {
        return Err(Error::Config(format!("no series left to run for {}", figure.name())));
    }
    let rates = &base.sweep.rates_per_s;
    match figure {
        Figure::F4 | Figure::F5 | Figure::F7 => {
            let mut rows = Vec::new();
            for s in series {
                let points = sweep_arrival_rate(&s.apply(base), rates, exec)?;
                rows.extend(curve_rows(&s.label, &points));
            }
            let stem = match figure {
                Figure::F4 => "fig4_prediction_gain",
                Figure::F5 => "fig5_csi",
                _ => "fig7_stall_vs_rate",
            };
            Ok(vec![NamedTable {
                stem: stem.into(),
                table: Table::Curve(rows),
            }])
        }
        Figure::F6 => {
            let mut rows = Vec::new();
            for s in series {
                let points = sweep_arrival_rate(&s.apply(base), rates, exec)?;
                for &tol in &base.sweep.tolerances_s {
                    rows.push(CapacityRow {
                        series: s.label.clone(),
                        tolerance_s: tol,
                        quantile: base.qos.satisfaction_quantile,
                        max_rate_per_s: max_supportable_rate(&points, tol, base.qos.satisfaction_quantile),
                    });
                }
            }
            Ok(vec![NamedTable {
                stem: "fig6_supportable_rate".into(),
                table: Table::Capacity(rows),
            }])
        }
        Figure::F8 => {
            let (mut count, mut time, mut longest) = (Vec::new(), Vec::new(), Vec::new());
            for s in series {
                let cdfs = emit_cdfs(&pooled(&run_trials(&s.apply(base), exec)?));
                let rows = |pts: Vec<(f64, f64)>| {
                    pts.into_iter().map(|(value, cdf)| CdfRow {
                        series: s.label.clone(),
                        value,
                        cdf,
                    })
                };
                count.extend(rows(cdfs.stall_count));
                time.extend(rows(cdfs.stall_time_s));
                longest.extend(rows(cdfs.max_stall_s));
            }
            Ok(vec![
                NamedTable {
                    stem: "fig8_stall_count_cdf".into(),
                    table: Table::Cdf(count),
                },
                NamedTable {
                    stem: "fig8_stall_time_cdf".into(),
                    table: Table::Cdf(time),
                },
                NamedTable {
                    stem: "fig8_max_stall_cdf".into(),
                    table: Table::Cdf(longest),
                },
            ])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Figure::ALL {
            assert_eq!(Figure::parse(f.name()), Some(f));
        }
        assert_eq!(Figure::parse("fig8"), Some(Figure::F8));
        assert_eq!(Figure::parse("f9"), None);
    }

    #[test]
    fn series_sets() {
        assert_eq!(Figure::F4.series().len(), 6);
        assert_eq!(Figure::F5.series().len(), 4);
        let f7 = Figure::F7.series();
        assert_eq!(f7.len(), 6);
        assert!(f7.iter().any(|s| s.error_free));
        let vor = &Figure::F4.series()[2];
        let c = vor.apply(&ScenarioConfig::default());
        assert_eq!((c.service.kind, c.service.lead_s), (ServiceKind::Vor, 20.0));
    }

    #[test]
    fn empty_series_is_an_error() {
        assert!(run_figure(Figure::F8, &ScenarioConfig::default(), &[], Execution::Sequential).is_err());
    }
}
