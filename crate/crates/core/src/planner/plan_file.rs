//! Plan files and window descriptions in TOML.
//!
//! A plan file lists, per user, the frames with a non-zero time fraction
//! (1-based frame, fraction, serving BS) and records `T_mw*`.

use serde::{Deserialize, Serialize};

use super::{Objective, Plan, UserPlanInput};
use crate::channel::TimeGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub frame: usize,
    pub fraction: f64,
    pub bs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAllocations {
    pub user_id: usize,
    pub total_time_frames: f64,
    #[serde(default)]
    pub allocations: Vec<Allocation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub t_mw_frames: i64,
    pub objective: Objective,
    pub objective_value: f64,
    #[serde(default)]
    pub users: Vec<UserAllocations>,
}

impl From<&Plan> for PlanFile {
    fn from(plan: &Plan) -> Self {
        PlanFile {
            t_mw_frames: plan.t_mw_frames,
            objective: plan.objective,
            objective_value: plan.objective_value,
            users: plan
                .users
                .iter()
                .map(|u| UserAllocations {
                    user_id: u.user_id,
                    total_time_frames: u.fractions.iter().sum(),
                    allocations: u
                        .fractions
                        .iter()
                        .enumerate()
                        .filter(|(_, &s)| s > 0.0)
                        .map(|(j, &s)| Allocation {
                            frame: j + 1,
                            fraction: s,
                            bs: u.serving_bs[j],
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl PlanFile {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Input of a stand-alone planning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowDescription {
    pub frames_per_window: usize,
    pub slots_per_frame: usize,
    pub frame_duration_s: f64,
    pub segment_frames: usize,
    /// Optional search range for `T_mw`; defaults to the structural range.
    pub t_mw_min_frames: Option<i64>,
    pub t_mw_max_frames: Option<i64>,
    #[serde(default)]
    pub objective: Option<Objective>,
    #[serde(default)]
    pub users: Vec<WindowUser>,
}

/// One user of a window description. Sizes in bits, rates in bit/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowUser {
    pub user_id: usize,
    pub segment_bits: Vec<f64>,
    #[serde(default)]
    pub initial_delay_frames: i64,
    #[serde(default)]
    pub first_play_offset_frames: i64,
    pub predicted_rates_bps: Vec<f64>,
    /// Serving BS per frame; a single entry applies to every frame.
    #[serde(default)]
    pub serving_bs: Vec<usize>,
}

impl WindowDescription {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(
            self.frames_per_window,
            self.slots_per_frame,
            self.frame_duration_s,
            self.segment_frames,
        )
    }

    pub fn bounds(&self) -> (i64, i64) {
        (
            self.t_mw_min_frames.unwrap_or(0),
            self.t_mw_max_frames.unwrap_or(i64::MAX),
        )
    }

    pub fn inputs(&self) -> Result<Vec<UserPlanInput>> {
        let tf = self.frames_per_window;
        self.users
            .iter()
            .map(|u| {
                let serving_bs = match u.serving_bs.len() {
                    0 => vec![0; tf],
                    1 => vec![u.serving_bs[0]; tf],
                    _ => u.serving_bs.clone(),
                };
                let predicted_rates = if u.predicted_rates_bps.len() == 1 {
                    vec![u.predicted_rates_bps[0]; tf]
                } else {
                    u.predicted_rates_bps.clone()
                };
                if predicted_rates.len() != tf || serving_bs.len() != tf {
                    return Err(Error::Config(format!(
                        "user {}: predicted_rates_bps and serving_bs need 1 or {tf} entries",
                        u.user_id
                    )));
                }
                Ok(UserPlanInput {
                    user_id: u.user_id,
                    segment_bits: u.segment_bits.clone(),
                    initial_delay_frames: u.initial_delay_frames,
                    first_play_offset_frames: u.first_play_offset_frames,
                    predicted_rates,
                    serving_bs,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::PlannedUser;

    #[test]
    fn plan_round_trips() {
        let plan = Plan {
            users: vec![PlannedUser {
                user_id: 3,
                fractions: vec![0.1 + 0.2, 0.0, 1.0],
                serving_bs: vec![0, 0, 1],
                predicted_rates: vec![1.0, 2.0, 3.0],
            }],
            t_mw_frames: 4,
            objective: Objective::WeightedTime,
            objective_value: 3.9,
        };
        let file = PlanFile::from(&plan);
        assert_eq!(file.users[0].allocations.len(), 2);
        assert_eq!(file.users[0].allocations[1].frame, 3);
        assert_eq!(file.users[0].allocations[1].bs, 1);
        let text = file.to_toml().unwrap();
        assert_eq!(PlanFile::from_toml(&text).unwrap(), file);
    }

    #[test]
    fn window_broadcasts_scalars() {
        let text = r#"
frames_per_window = 5
slots_per_frame = 10
frame_duration_s = 1.0
segment_frames = 1

[[users]]
user_id = 1
segment_bits = [4e6]
predicted_rates_bps = [2e6]
serving_bs = [2]
"#;
        let w = WindowDescription::from_toml(text).unwrap();
        let inputs = w.inputs().unwrap();
        assert_eq!(inputs[0].predicted_rates, vec![2e6; 5]);
        assert_eq!(inputs[0].serving_bs, vec![2; 5]);
        assert!(WindowDescription::from_toml("frames_per_window = 1\nbogus = 2").is_err());
    }
}
