//! Slot-level execution of a plan.
//!
//! Each BS serves one user per slot. Under a plan, a user is eligible in
//! frame `J` while its delivery lags the transmission progress `Λ(k, J)`
//! and its planned fraction for the frame is positive; the BS picks the
//! eligible user with the highest instantaneous rate. Users that ended the
//! previous frame behind their progress hold debt and are served first.
//! Baselines ignore the plan entirely.

use crate::planner::Plan;

/// Cumulative delivery targets `Λ(k, J)` in absolute bits, indexed by user
/// id. Users absent from the plan have no row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProgressTable {
    rows: Vec<Option<Vec<f64>>>,
}

impl ProgressTable {
    /// Builds the table for a plan made when user `k` had already received
    /// `delivered[k]` bits. Entry `J` of a row is the target at the end of
    /// window frame `J` (entry 0 is the starting point).
    pub fn from_plan(plan: &Plan, delivered: &[f64], frame_duration: f64) -> Self {
        let mut rows = vec![None; delivered.len()];
        for u in &plan.users {
            let mut acc = delivered[u.user_id];
            let mut row = Vec::with_capacity(u.fractions.len() + 1);
            row.push(acc);
            for (s, r) in u.fractions.iter().zip(&u.predicted_rates) {
                acc += s * r * frame_duration;
                row.push(acc);
            }
            rows[u.user_id] = Some(row);
        }
        ProgressTable { rows }
    }

    pub fn has_user(&self, user: usize) -> bool {
        matches!(self.rows.get(user), Some(Some(_)))
    }

    /// `Λ(user, frame)` with `frame` 1-based inside the window; frames past
    /// the window keep the final value.
    pub fn target(&self, user: usize, frame: usize) -> Option<f64> {
        let row = self.rows.get(user)?.as_ref()?;
        Some(row[frame.min(row.len() - 1)])
    }

    /// Shortfall `Λ(user, frame) - delivered`, positive when behind.
    pub fn shortfall(&self, user: usize, frame: usize, delivered: f64) -> Option<f64> {
        self.target(user, frame).map(|t| t - delivered)
    }
}

/// Bits delivered to each user and the number of slots it was served.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeliveryState {
    pub delivered_bits: Vec<f64>,
    pub served_slots: Vec<u64>,
}

impl DeliveryState {
    pub fn new(num_users: usize) -> Self {
        DeliveryState {
            delivered_bits: vec![0.0; num_users],
            served_slots: vec![0; num_users],
        }
    }

    pub fn record(&mut self, user: usize, bits: f64) {
        self.delivered_bits[user] += bits;
        self.served_slots[user] += 1;
    }
}

/// Users of `coverage` whose delivery is strictly behind `Λ(k, frame)`.
pub fn lagging_set(coverage: &[usize], frame: usize, progress: &ProgressTable, delivered: &[f64]) -> Vec<usize> {
    coverage
        .iter()
        .copied()
        .filter(|&k| progress.shortfall(k, frame, delivered[k]).is_some_and(|d| d > 0.0))
        .collect()
}

/// Highest `rate(k)` over candidates with `eligible(k)`; ties go to the
/// earlier candidate.
pub fn argmax_rate(
    candidates: &[usize],
    eligible: impl Fn(usize) -> bool,
    rate: impl Fn(usize) -> f64,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &k in candidates {
        if !eligible(k) {
            continue;
        }
        let r = rate(k);
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((k, r));
        }
    }
    best.map(|(k, _)| k)
}

/// Max-rate selection among lagging users with a positive planned fraction
/// in this frame (or outstanding debt).
pub fn select_user(
    candidates: &[usize],
    planned_fraction: impl Fn(usize) -> f64,
    debts: &DebtLedger,
    delivered: &[f64],
    rate: impl Fn(usize) -> f64,
) -> Option<usize> {
    argmax_rate(
        candidates,
        |k| planned_fraction(k) > 0.0 || debts.owes(k, delivered[k]),
        rate,
    )
}

/// Catch-up targets carried into the next frame: user `k` owes until its
/// delivery reaches `Λ(k, J)` of the frame that just ended.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DebtLedger {
    targets: Vec<Option<f64>>,
}

impl DebtLedger {
    pub fn new(num_users: usize) -> Self {
        DebtLedger {
            targets: vec![None; num_users],
        }
    }

    pub fn owes(&self, user: usize, delivered: f64) -> bool {
        self.targets
            .get(user)
            .copied()
            .flatten()
            .is_some_and(|t| t - delivered > 0.0)
    }

    pub fn debt(&self, user: usize, delivered: f64) -> f64 {
        self.targets
            .get(user)
            .copied()
            .flatten()
            .map_or(0.0, |t| (t - delivered).max(0.0))
    }

    pub fn is_empty(&self, delivered: &[f64]) -> bool {
        (0..self.targets.len()).all(|k| !self.owes(k, delivered[k]))
    }

    /// Debt holders among `candidates`.
    pub fn holders(&self, candidates: &[usize], delivered: &[f64]) -> Vec<usize> {
        candidates
            .iter()
            .copied()
            .filter(|&k| self.owes(k, delivered[k]))
            .collect()
    }
}

/// Debts at the boundary after window frame `frame`.
pub fn catch_up(frame: usize, progress: &ProgressTable, delivered: &[f64]) -> DebtLedger {
    let targets = (0..delivered.len())
        .map(|k| progress.target(k, frame).filter(|&t| t - delivered[k] > 0.0))
        .collect();
    DebtLedger { targets }
}

/// Planned service in one slot: debt holders first, then lagging users
/// with a positive fraction, each group by maximal instantaneous rate.
pub fn planned_slot_choice(
    coverage: &[usize],
    frame: usize,
    progress: &ProgressTable,
    debts: &DebtLedger,
    delivered: &[f64],
    planned_fraction: impl Fn(usize) -> f64,
    rate: impl Fn(usize) -> f64 + Copy,
) -> Option<usize> {
    let holders = debts.holders(coverage, delivered);
    if !holders.is_empty() {
        return argmax_rate(&holders, |_| true, rate);
    }
    let lagging = lagging_set(coverage, frame, progress, delivered);
    select_user(&lagging, planned_fraction, debts, delivered, rate)
}

/// Best effort: highest instantaneous rate among users with pending bits.
pub fn baseline_best_effort(pending: &[usize], rate: impl Fn(usize) -> f64) -> Option<usize> {
    argmax_rate(pending, |_| true, rate)
}

/// A pending user as seen by the earliest-deadline baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeadlineCandidate {
    pub user: usize,
    /// Frame by which the next segment is needed.
    pub deadline: i64,
    pub remaining_bits: f64,
}

/// Earliest deadline first; ties go to more remaining bits, then to the
/// lower user id.
pub fn baseline_earliest_deadline(candidates: &[DeadlineCandidate]) -> Option<usize> {
    candidates
        .iter()
        .min_by(|a, b| {
            a.deadline
                .cmp(&b.deadline)
                .then(b.remaining_bits.total_cmp(&a.remaining_bits))
                .then(a.user.cmp(&b.user))
        })
        .map(|c| c.user)
}

/// Contiguous slot blocks for a frame without CSI: users in id order, each
/// getting `round(s * T_s)` slots; the last user takes whatever remains of
/// the planned total.
pub fn sequential_no_csi(fractions: &[(usize, f64)], slots_per_frame: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, f64)> = fractions.iter().copied().filter(|&(_, s)| s > 0.0).collect();
    order.sort_by_key(|&(k, _)| k);
    let total: f64 = order.iter().map(|&(_, s)| s).sum();
    let total_slots = ((total * slots_per_frame as f64).round() as usize).min(slots_per_frame);
    let mut out = Vec::with_capacity(order.len());
    let mut used = 0usize;
    for (i, &(k, s)) in order.iter().enumerate() {
        let n = if i + 1 == order.len() {
            total_slots.saturating_sub(used)
        } else {
            ((s * slots_per_frame as f64).round() as usize).min(total_slots - used)
        };
        used += n;
        out.push((k, n));
    }
    out
}

/// Slot owners in order from [`sequential_no_csi`] blocks.
pub fn expand_blocks(blocks: &[(usize, usize)]) -> Vec<usize> {
    blocks.iter().flat_map(|&(k, n)| std::iter::repeat_n(k, n)).collect()
}
