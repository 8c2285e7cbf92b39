//! Monte Carlo network experiments.
//!
//! A trial draws Poisson request arrivals, user trajectories along the
//! roads, per-frame predictions and per-slot channels, then runs the
//! configured scheme frame by frame until every video is delivered.

pub mod config;
pub mod figures;
pub mod qos;
pub mod sweep;
pub mod topology;
pub mod trial;

pub use config::{ScenarioConfig, Scheme, ServiceKind, SweepConfig};
pub use figures::{run_figure, Figure, NamedTable, Series, Table};
pub use qos::{QosReport, UserQos};
pub use sweep::{emit_cdfs, max_supportable_rate, pooled, run_trials, sweep_arrival_rate, QosCdfs, SweepPoint};
pub use trial::{generate_trial, run_trial, TrialOptions, TrialOutcome};
