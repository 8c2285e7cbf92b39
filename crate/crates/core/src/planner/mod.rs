//! Transmission planning over a prediction window.
//!
//! For a fixed maximal waiting time `T_mw` the plan is a linear program in
//! the time fractions `s[k][j]` (problem P2). The smallest feasible `T_mw`
//! is found by an integer search that relies on feasibility being monotone
//! in `T_mw`.

pub mod greedy;
pub mod lp;
pub mod plan_file;

use serde::{Deserialize, Serialize};

use crate::channel::TimeGrid;
use crate::error::{Error, Result};
pub use greedy::greedy_single_user;
use lp::{solve_lp_with, LpProblem, Sense, SolveOptions};

/// Planning objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `sum_j sum_k j * s[k][j]`: favours early frames.
    #[default]
    WeightedTime,
    /// `sum s`: total transmission time.
    MinTime,
    /// `-sum s * R_hat`: delivered data.
    MaxThroughput,
}

impl Objective {
    pub fn parse(s: &str) -> Option<Objective> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "proposed" | "weighted_time" => Some(Objective::WeightedTime),
            "min_time" => Some(Objective::MinTime),
            "max_throughput" => Some(Objective::MaxThroughput),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::WeightedTime => "weighted_time",
            Objective::MinTime => "min_time",
            Objective::MaxThroughput => "max_throughput",
        }
    }
}

/// One user's view of the prediction window. Frame `j` (1-based) of the
/// window is entry `j - 1` of the per-frame vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserPlanInput {
    pub user_id: usize,
    /// Bits of each segment still to be delivered, in playback order.
    pub segment_bits: Vec<f64>,
    /// Waiting already committed (initial delay plus stalls), frames.
    pub initial_delay_frames: i64,
    /// Frames from the window start to the nominal playback of the first
    /// listed segment.
    pub first_play_offset_frames: i64,
    /// Predicted average rate per frame, bit/s.
    pub predicted_rates: Vec<f64>,
    /// Serving base station per frame.
    pub serving_bs: Vec<usize>,
}

impl UserPlanInput {
    pub fn total_bits(&self) -> f64 {
        self.segment_bits.iter().sum()
    }

    /// Deadline frame index of segment `n` (1-based) for a given `T_mw`.
    pub fn deadline(&self, t_mw: i64, n: usize, grid: &TimeGrid) -> i64 {
        t_mw - self.initial_delay_frames + self.first_play_offset_frames + (n as i64 - 1) * grid.segment_frames as i64
    }

    fn cumulative(&self) -> Vec<f64> {
        self.segment_bits
            .iter()
            .scan(0.0, |acc, b| {
                *acc += b;
                Some(*acc)
            })
            .collect()
    }

    /// First segment whose cumulative demand is positive.
    fn first_pending(&self) -> Option<usize> {
        self.segment_bits.iter().position(|&b| b > 0.0).map(|i| i + 1)
    }
}

/// Per-user part of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedUser {
    pub user_id: usize,
    /// `s[j]` per frame of the window.
    pub fractions: Vec<f64>,
    pub serving_bs: Vec<usize>,
    pub predicted_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub users: Vec<PlannedUser>,
    pub t_mw_frames: i64,
    pub objective: Objective,
    pub objective_value: f64,
}

impl Plan {
    pub fn empty(t_mw_frames: i64, objective: Objective) -> Plan {
        Plan {
            users: Vec::new(),
            t_mw_frames,
            objective,
            objective_value: 0.0,
        }
    }

    pub fn user(&self, user_id: usize) -> Option<&PlannedUser> {
        self.users.iter().find(|u| u.user_id == user_id)
    }
}

/// Reference from an LP column back to `(input index, frame index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarRef {
    pub user: usize,
    pub frame: usize,
}

/// Problem P2 at a fixed `T_mw`.
#[derive(Debug, Clone)]
pub struct P2 {
    pub lp: LpProblem,
    pub vars: Vec<VarRef>,
    pub t_mw: i64,
    pub objective: Objective,
}

impl P2 {
    /// Expands an LP solution into a plan.
    pub fn to_plan(&self, inputs: &[UserPlanInput], x: &[f64]) -> Plan {
        let mut users: Vec<PlannedUser> = inputs
            .iter()
            .map(|u| PlannedUser {
                user_id: u.user_id,
                fractions: vec![0.0; u.predicted_rates.len()],
                serving_bs: u.serving_bs.clone(),
                predicted_rates: u.predicted_rates.clone(),
            })
            .collect();
        for (v, &val) in self.vars.iter().zip(x) {
            users[v.user].fractions[v.frame] = val;
        }
        let objective_value = objective_value(self.objective, &users);
        Plan {
            users,
            t_mw_frames: self.t_mw,
            objective: self.objective,
            objective_value,
        }
    }
}

/// Unscaled objective of a set of planned users.
pub fn objective_value(objective: Objective, users: &[PlannedUser]) -> f64 {
    let mut total = 0.0;
    for u in users {
        for (j, &s) in u.fractions.iter().enumerate() {
            total += match objective {
                Objective::WeightedTime => (j + 1) as f64 * s,
                Objective::MinTime => s,
                Objective::MaxThroughput => -s * u.predicted_rates[j],
            };
        }
    }
    total
}

fn check_input(u: &UserPlanInput, grid: &TimeGrid) -> Result<()> {
    let tf = grid.frames_per_window;
    if u.predicted_rates.len() != tf || u.serving_bs.len() != tf {
        return Err(Error::Domain(format!(
            "user {}: per-frame vectors must have {tf} entries",
            u.user_id
        )));
    }
    if u.segment_bits.iter().any(|b| !(*b >= 0.0)) || u.predicted_rates.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Domain(format!(
            "user {}: segment sizes and rates must be non-negative",
            u.user_id
        )));
    }
    Ok(())
}

/// Lays out P2 for the given `T_mw`.
pub fn build_p2(inputs: &[UserPlanInput], t_mw: i64, grid: &TimeGrid, objective: Objective) -> Result<P2> {
    let tf = grid.frames_per_window;
    let dt = grid.frame_duration;
    let mut lp = LpProblem::new();
    let mut vars = Vec::new();
    let rate_scale = inputs
        .iter()
        .flat_map(|u| u.predicted_rates.iter().copied())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let num_bs = inputs
        .iter()
        .flat_map(|u| u.serving_bs.iter().copied())
        .max()
        .map_or(0, |b| b + 1);
    // Columns sharing each (bs, frame) capacity row.
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); num_bs * tf];

    for (k, u) in inputs.iter().enumerate() {
        check_input(u, grid)?;
        let Some(first) = u.first_pending() else {
            continue;
        };
        let n_seg = u.segment_bits.len();
        for n in [first, n_seg] {
            let d = u.deadline(t_mw, n, grid);
            if d < 1 || d > tf as i64 {
                return Err(Error::DeadlineOutOfWindow {
                    user: u.user_id,
                    index: d,
                    window: tf,
                });
            }
        }
        let last = u.deadline(t_mw, n_seg, grid) as usize;
        let base = vars.len();
        let mut col_of_frame = vec![usize::MAX; last];
        for j in 0..last {
            let r = u.predicted_rates[j];
            if r <= 0.0 {
                continue;
            }
            let cost = match objective {
                Objective::WeightedTime => (j + 1) as f64,
                Objective::MinTime => 1.0,
                Objective::MaxThroughput => -r / rate_scale,
            };
            let c = lp.add_variable(cost, 0.0, 1.0);
            vars.push(VarRef { user: k, frame: j });
            col_of_frame[j] = c;
            cells[u.serving_bs[j] * tf + j].push(c);
        }
        let cum = u.cumulative();
        for n in first..=n_seg {
            let d = u.deadline(t_mw, n, grid) as usize;
            let coeffs: Vec<(usize, f64)> = (0..d)
                .filter(|&j| col_of_frame[j] != usize::MAX)
                .map(|j| (col_of_frame[j], u.predicted_rates[j] * dt))
                .collect();
            let sense = if n == n_seg { Sense::Eq } else { Sense::Ge };
            if n < n_seg && cum[n - 1] <= 0.0 {
                continue;
            }
            lp.add_constraint(
                coeffs,
                sense,
                cum[n - 1],
                format!("user {} segment {} by frame {}", u.user_id, n, d),
            );
        }
        debug_assert!(vars.len() >= base);
    }
    for (cell, cols) in cells.iter().enumerate() {
        if cols.len() >= 2 {
            let (bs, j) = (cell / tf, cell % tf);
            lp.add_constraint(
                cols.iter().map(|&c| (c, 1.0)).collect(),
                Sense::Le,
                1.0,
                format!("capacity of bs {} in frame {}", bs, j + 1),
            );
        }
    }
    Ok(P2 {
        lp,
        vars,
        t_mw,
        objective,
    })
}

/// Structural search bounds `[lo, hi]` on `T_mw`: every pending deadline
/// must fall inside the window and `T_mw` cannot be below the waiting any
/// user has already committed to.
pub fn structural_bounds(inputs: &[UserPlanInput], grid: &TimeGrid) -> (i64, i64) {
    let tf = grid.frames_per_window as i64;
    let seg = grid.segment_frames as i64;
    let mut lo = 0i64;
    let mut hi = i64::MAX;
    for u in inputs {
        let Some(first) = u.first_pending() else {
            continue;
        };
        let n = u.segment_bits.len() as i64;
        let shift = u.first_play_offset_frames - u.initial_delay_frames;
        lo = lo.max(1 - shift - (first as i64 - 1) * seg).max(u.initial_delay_frames);
        hi = hi.min(tf - shift - (n - 1) * seg);
    }
    if hi == i64::MAX {
        hi = lo;
    }
    (lo, hi)
}

/// Smallest `T_mw` at which each user could meet its deadlines if it had
/// every BS to itself. No joint plan can do better.
pub fn solo_lower_bound(inputs: &[UserPlanInput], grid: &TimeGrid) -> Option<i64> {
    let seg = grid.segment_frames as i64;
    let mut lb = i64::MIN;
    for u in inputs {
        let Some(first) = u.first_pending() else {
            continue;
        };
        let mut prefix = Vec::with_capacity(u.predicted_rates.len());
        let mut acc = 0.0;
        for r in &u.predicted_rates {
            acc += r * grid.frame_duration;
            prefix.push(acc);
        }
        let cum = u.cumulative();
        for n in first..=u.segment_bits.len() {
            let need = cum[n - 1];
            // Relative slack keeps round-off from flipping feasibility.
            let f = prefix.partition_point(|&p| p < need * (1.0 - 1e-12));
            if f == prefix.len() {
                return None;
            }
            let frames = f as i64 + 1;
            let t = frames + u.initial_delay_frames - u.first_play_offset_frames - (n as i64 - 1) * seg;
            lb = lb.max(t);
        }
    }
    Some(lb)
}

/// Whether P2 has a feasible point at `t_mw`.
pub fn is_feasible(inputs: &[UserPlanInput], t_mw: i64, grid: &TimeGrid) -> Result<bool> {
    let p2 = build_p2(inputs, t_mw, grid, Objective::MinTime)?;
    let sol = solve_lp_with(
        &p2.lp,
        SolveOptions {
            feasibility_only: true,
            ..Default::default()
        },
    )?;
    Ok(sol.is_feasible())
}

/// Solves P2 at a fixed `T_mw`. Infeasibility is reported as an error
/// naming the row with the largest remaining violation.
pub fn solve_p2(inputs: &[UserPlanInput], t_mw: i64, grid: &TimeGrid, objective: Objective) -> Result<Plan> {
    let p2 = build_p2(inputs, t_mw, grid, objective)?;
    let sol = solve_lp_with(&p2.lp, SolveOptions::default())?;
    if !sol.is_feasible() {
        let (row, violation) = sol.binding.unwrap_or((0, f64::NAN));
        let binding = p2
            .lp
            .constraints
            .get(row)
            .map_or_else(|| "unknown row".to_string(), |c| c.label.clone());
        return Err(Error::Infeasible { binding, violation });
    }
    Ok(p2.to_plan(inputs, &sol.x))
}

/// Finds the smallest feasible `T_mw` in `bounds` and the optimal plan
/// for `objective` there.
///
/// The search starts from the larger of `bounds.0`, the structural lower
/// bound and the single-user bound, gallops upward, then bisects.
pub fn optimize_t_mw(
    inputs: &[UserPlanInput],
    grid: &TimeGrid,
    bounds: (i64, i64),
    objective: Objective,
) -> Result<Plan> {
    let active: Vec<UserPlanInput> = inputs.iter().filter(|u| u.total_bits() > 0.0).cloned().collect();
    let (s_lo, s_hi) = structural_bounds(&active, grid);
    let lo = bounds.0.max(s_lo);
    let hi = bounds.1.min(s_hi);
    if active.is_empty() {
        return Ok(Plan::empty(lo.max(bounds.0), objective));
    }
    if hi < lo {
        return Err(Error::Infeasible {
            binding: format!("window cannot hold every deadline (T_mw range [{lo}, {hi}] is empty)"),
            violation: (lo - hi) as f64,
        });
    }
    let start = match solo_lower_bound(&active, grid) {
        Some(b) => b.max(lo),
        None => hi + 1,
    };
    if start > hi {
        // Report the binding row at the largest admissible value.
        return solve_p2(&active, hi, grid, objective).and(Err(Error::Infeasible {
            binding: "single-user capacity before the final deadline".into(),
            violation: 0.0,
        }));
    }
    let mut bad = start - 1;
    let mut good = None;
    let mut t = start;
    let mut step = 1;
    loop {
        if is_feasible(&active, t, grid)? {
            good = Some(t);
            break;
        }
        bad = t;
        if t == hi {
            break;
        }
        t = (t + step).min(hi);
        step *= 2;
    }
    let Some(mut good) = good else {
        return solve_p2(&active, hi, grid, objective);
    };
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if is_feasible(&active, mid, grid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    solve_p2(&active, good, grid, objective)
}

/// Events that trigger a new plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplanEvent {
    NewArrival,
    WindowExhausted,
}

/// Playback and delivery state of one user at a re-plan instant.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProgress {
    pub user_id: usize,
    /// Full-video segment sizes, bits.
    pub segment_bits: Vec<f64>,
    pub delivered_bits: f64,
    pub segments_played: usize,
    /// Initial delay plus stalls so far, frames.
    pub committed_wait_frames: i64,
    /// Frames from now to the nominal start of the next unplayed segment.
    pub next_play_offset_frames: i64,
    /// Per-frame predictions for the new window.
    pub predicted_rates: Vec<f64>,
    pub serving_bs: Vec<usize>,
}

impl UserProgress {
    /// Residual bits of the unplayed segments, delivered bits filling
    /// segments in playback order.
    pub fn residual_segments(&self) -> Vec<f64> {
        let mut delivered = self.delivered_bits;
        let mut out = Vec::with_capacity(self.segment_bits.len());
        for (i, &b) in self.segment_bits.iter().enumerate() {
            let take = delivered.min(b).max(0.0);
            delivered -= take;
            if i >= self.segments_played {
                out.push(b - take);
            }
        }
        out
    }

    pub fn to_input(&self) -> UserPlanInput {
        UserPlanInput {
            user_id: self.user_id,
            segment_bits: self.residual_segments(),
            initial_delay_frames: self.committed_wait_frames,
            first_play_offset_frames: self.next_play_offset_frames,
            predicted_rates: self.predicted_rates.clone(),
            serving_bs: self.serving_bs.clone(),
        }
    }
}

/// Re-plans for every user with undelivered bits, anchoring the window at
/// the event time. The event kind does not change the construction: both
/// a new arrival and an exhausted window restart the window at "now".
pub fn replan(
    _event: ReplanEvent,
    users: &[UserProgress],
    grid: &TimeGrid,
    bounds: (i64, i64),
    objective: Objective,
) -> Result<Plan> {
    let inputs: Vec<UserPlanInput> = users.iter().map(UserProgress::to_input).collect();
    optimize_t_mw(&inputs, grid, bounds, objective)
}

/// Largest relative violation of `plan` against P2 at its own `T_mw`,
/// checked directly on the plan's fractions.
pub fn plan_violation(inputs: &[UserPlanInput], grid: &TimeGrid, plan: &Plan) -> Result<f64> {
    let p2 = build_p2(inputs, plan.t_mw_frames, grid, plan.objective)?;
    let mut worst = 0.0f64;
    // Values of LP columns.
    let x: Vec<f64> = p2
        .vars
        .iter()
        .map(|v| plan.user(inputs[v.user].user_id).map_or(0.0, |u| u.fractions[v.frame]))
        .collect();
    worst = worst.max(p2.lp.max_violation(&x).0);
    // Fractions outside the LP columns (past deadlines) must be zero.
    for (k, u) in inputs.iter().enumerate() {
        if let Some(pu) = plan.user(u.user_id) {
            for (j, &s) in pu.fractions.iter().enumerate() {
                if !p2.vars.iter().any(|v| v.user == k && v.frame == j) {
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    Ok(worst)
}
