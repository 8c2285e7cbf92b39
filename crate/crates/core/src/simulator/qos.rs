//! Playback tracking and QoS metrics.
//!
//! Segments start only at frame boundaries. Segment `n` starts at the first
//! boundary at or after both the end of segment `n - 1` and its own full
//! delivery; any gap beyond the nominal start is a stall. The first
//! segment's nominal start is the end of the initial delay (VoD) or the
//! reserved playback time (VoR).

use serde::{Deserialize, Serialize};

use crate::stats::ecdf;

#[derive(Debug, Clone, PartialEq)]
pub struct Playback {
    /// Frame at which the first segment is due.
    pub nominal_start: i64,
    /// Initial delay granted by the service, frames.
    pub initial_delay: i64,
    pub segments: usize,
    pub segment_frames: i64,
    started: usize,
    next_nominal: i64,
    first_start: Option<i64>,
    stall_frames: i64,
    stall_count: usize,
    max_stall: i64,
}

impl Playback {
    pub fn new(nominal_start: i64, initial_delay: i64, segments: usize, segment_frames: i64) -> Self {
        Playback {
            nominal_start,
            initial_delay,
            segments,
            segment_frames,
            started: 0,
            next_nominal: nominal_start,
            first_start: None,
            stall_frames: 0,
            stall_count: 0,
            max_stall: 0,
        }
    }

    fn start_next(&mut self, frame: i64) {
        let stall = frame - self.next_nominal;
        debug_assert!(stall >= 0);
        if stall > 0 {
            self.stall_frames += stall;
            self.stall_count += 1;
            self.max_stall = self.max_stall.max(stall);
        }
        if self.first_start.is_none() {
            self.first_start = Some(frame);
        }
        self.started += 1;
        self.next_nominal = frame + self.segment_frames;
    }

    /// Starts whatever can start at the beginning of `frame`, given that
    /// `ready` segments were fully delivered before it.
    pub fn advance(&mut self, frame: i64, ready: usize) {
        while self.started < self.segments && self.started < ready && self.next_nominal <= frame {
            self.start_next(frame);
        }
    }

    /// Plays out the rest once every segment is delivered by `ready_frame`.
    pub fn complete(&mut self, ready_frame: i64) {
        while self.started < self.segments {
            let f = self.next_nominal.max(ready_frame);
            self.start_next(f);
        }
    }

    pub fn is_finished(&self) -> bool {
        self.started == self.segments
    }

    pub fn segments_started(&self) -> usize {
        self.started
    }

    /// Nominal start of the next segment if no further stall happens.
    pub fn next_nominal(&self) -> i64 {
        self.next_nominal
    }

    /// Waiting committed by frame `now`: the initial delay, past stalls
    /// and any stall in progress.
    pub fn committed_wait(&self, now: i64) -> i64 {
        let ongoing = if self.is_finished() {
            0
        } else {
            (now - self.next_nominal).max(0)
        };
        self.initial_delay + self.stall_frames + ongoing
    }

    /// Frames from `now` until the next segment is due (0 while stalled).
    pub fn next_play_offset(&self, now: i64) -> i64 {
        (self.next_nominal - now).max(0)
    }

    pub fn stall_frames(&self) -> i64 {
        self.stall_frames
    }

    pub fn total_wait_frames(&self) -> i64 {
        self.initial_delay + self.stall_frames
    }

    pub fn report(&self, user: usize, arrival_frame: i64, frame_duration: f64, tolerance_s: f64) -> UserQos {
        let first = self.first_start.unwrap_or(self.nominal_start);
        let stall_time_s = self.stall_frames as f64 * frame_duration;
        UserQos {
            user,
            arrival_frame,
            stall_time_s,
            stall_count: self.stall_count,
            max_stall_s: self.max_stall as f64 * frame_duration,
            initial_delay_s: (self.initial_delay + first - self.nominal_start) as f64 * frame_duration,
            total_wait_s: self.total_wait_frames() as f64 * frame_duration,
            satisfied: stall_time_s <= tolerance_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserQos {
    pub user: usize,
    pub arrival_frame: i64,
    pub stall_time_s: f64,
    pub stall_count: usize,
    pub max_stall_s: f64,
    pub initial_delay_s: f64,
    /// Initial delay plus stalls.
    pub total_wait_s: f64,
    pub satisfied: bool,
}

/// QoS of a set of users (one trial or several pooled).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QosReport {
    pub users: Vec<UserQos>,
}

impl QosReport {
    pub fn mean_total_stall_s(&self) -> f64 {
        if self.users.is_empty() {
            return 0.0;
        }
        self.users.iter().map(|u| u.stall_time_s).sum::<f64>() / self.users.len() as f64
    }

    pub fn satisfaction_fraction(&self) -> f64 {
        if self.users.is_empty() {
            return 1.0;
        }
        self.users.iter().filter(|u| u.satisfied).count() as f64 / self.users.len() as f64
    }

    /// Re-evaluates satisfaction at another tolerance.
    pub fn satisfaction_at(&self, tolerance_s: f64) -> f64 {
        if self.users.is_empty() {
            return 1.0;
        }
        self.users.iter().filter(|u| u.stall_time_s <= tolerance_s).count() as f64 / self.users.len() as f64
    }

    pub fn merge(&mut self, other: &QosReport) {
        self.users.extend(other.users.iter().cloned());
    }

    pub fn stall_counts(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.stall_count as f64).collect()
    }

    pub fn stall_times(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.stall_time_s).collect()
    }

    pub fn max_stalls(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.max_stall_s).collect()
    }
}

/// Empirical CDF steps `(value, F(value))` with one entry per distinct value.
pub fn cdf_points(values: &[f64]) -> Vec<(f64, f64)> {
    ecdf(values)
}
