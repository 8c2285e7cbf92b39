//! CSV writers. Floats are written in shortest round-trip form.

use std::path::Path;

use serde::Serialize;

use resalloc::simulator::{NamedTable, Table, TrialOutcome};

use crate::CliResult;

/// Writes `rows` to `<dir>/<stem>.csv` and returns the file name.
pub fn write_rows<T: Serialize>(dir: &Path, stem: &str, rows: &[T]) -> CliResult<String> {
    let name = format!("{stem}.csv");
    let mut w = csv::Writer::from_path(dir.join(&name))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(name)
}

pub fn write_table(dir: &Path, t: &NamedTable) -> CliResult<String> {
    match &t.table {
        Table::Curve(rows) => write_rows(dir, &t.stem, rows),
        Table::Capacity(rows) => write_rows(dir, &t.stem, rows),
        Table::Cdf(rows) => write_rows(dir, &t.stem, rows),
    }
}

#[derive(Debug, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub users: usize,
    pub mean_total_stall_s: f64,
    pub satisfaction: f64,
    pub overloaded: bool,
    pub plans: usize,
    pub frames: i64,
}

pub fn trial_rows(outcomes: &[TrialOutcome]) -> Vec<TrialRow> {
    outcomes
        .iter()
        .map(|o| TrialRow {
            trial: o.trial,
            users: o.qos.users.len(),
            mean_total_stall_s: o.qos.mean_total_stall_s(),
            satisfaction: o.qos.satisfaction_fraction(),
            overloaded: o.overloaded,
            plans: o.plans.len(),
            frames: o.frames,
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct UserRow {
    pub trial: usize,
    pub user: usize,
    pub arrival_frame: i64,
    pub stall_time_s: f64,
    pub stall_count: usize,
    pub max_stall_s: f64,
    pub initial_delay_s: f64,
    pub total_wait_s: f64,
    pub satisfied: bool,
}

pub fn user_rows(outcomes: &[TrialOutcome]) -> Vec<UserRow> {
    outcomes
        .iter()
        .flat_map(|o| {
            o.qos.users.iter().map(move |u| UserRow {
                trial: o.trial,
                user: u.user,
                arrival_frame: u.arrival_frame,
                stall_time_s: u.stall_time_s,
                stall_count: u.stall_count,
                max_stall_s: u.max_stall_s,
                initial_delay_s: u.initial_delay_s,
                total_wait_s: u.total_wait_s,
                satisfied: u.satisfied,
            })
        })
        .collect()
}
