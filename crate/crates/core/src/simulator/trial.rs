//! One Monte Carlo trial: arrivals, mobility, predictions, planning and
//! slot-level service.
//!
//! Every random draw is keyed by `(seed, trial, indices)`, so two schemes
//! run on the same trial see the same users, channels and predictions.

use std::cell::RefCell;
use std::collections::{HashMap, VecDeque};

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, Scheme, ServiceKind};
use super::qos::{Playback, QosReport};
use super::topology::{Mobility, Topology};
use crate::channel::{rate_from_snr, PathLoss, RadioParams, SlotBandwidth, SmallScaleFading, TimeGrid};
use crate::error::{Error, Result};
use crate::planner::{replan, Plan, ReplanEvent, UserProgress};
use crate::prediction::{predicted_avg_rate, BandwidthPrediction, GainPrediction};
use crate::rng::{stream_rng, Stream};
use crate::scheduler::{
    baseline_best_effort, baseline_earliest_deadline, catch_up, planned_slot_choice, sequential_no_csi,
    DeadlineCandidate, DebtLedger, DeliveryState, ProgressTable,
};

/// Hard stop for runaway trials, in frames after the last arrival.
const MAX_DRAIN_FRAMES: i64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimUser {
    pub id: usize,
    /// Request (VoD) or reservation (VoR) frame.
    pub arrival_frame: i64,
    /// Frame at which the first segment is due.
    pub nominal_start: i64,
    /// Initial delay granted by the service, frames.
    pub initial_delay: i64,
    pub mobility: Mobility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSetup {
    pub trial: usize,
    pub users: Vec<SimUser>,
}

/// Draws the users of a trial.
pub fn generate_trial(cfg: &ScenarioConfig, trial: usize) -> Result<TrialSetup> {
    cfg.validate()?;
    let topology = topology(cfg)?;
    let mut arrivals = stream_rng(cfg.seed, Stream::Arrivals, &[trial as u64]);
    let mean = cfg.arrivals.rate_per_s * cfg.grid.frame_duration_s;
    let (initial_delay, offset) = match cfg.service.kind {
        ServiceKind::Vod => {
            let w = cfg.initial_delay_frames()? as i64;
            (w, w)
        }
        ServiceKind::Vor => (0, cfg.lead_frames()? as i64),
    };
    let mut users = Vec::new();
    if mean > 0.0 {
        let poisson = Poisson::new(mean).map_err(|e| Error::Config(e.to_string()))?;
        for f in cfg.arrivals.first_frame..=cfg.arrivals.last_frame {
            let count = poisson.sample(&mut arrivals) as usize;
            for _ in 0..count {
                let id = users.len();
                let mut rng = stream_rng(cfg.seed, Stream::Mobility, &[trial as u64, id as u64]);
                let mobility = Mobility::random(
                    &topology,
                    (cfg.topology.speed_min_mps, cfg.topology.speed_max_mps),
                    &mut rng,
                );
                users.push(SimUser {
                    id,
                    arrival_frame: f as i64,
                    nominal_start: f as i64 + offset,
                    initial_delay,
                    mobility,
                });
            }
        }
    }
    Ok(TrialSetup { trial, users })
}

fn topology(cfg: &ScenarioConfig) -> Result<Topology> {
    Topology::new(
        cfg.topology.num_bs,
        cfg.topology.cell_radius_m,
        cfg.topology.road_offsets_m.clone(),
    )
}

/// Deterministic view of the channel and the predictions of one trial.
#[derive(Debug, Clone)]
pub struct World<'a> {
    pub cfg: &'a ScenarioConfig,
    pub trial: usize,
    pub users: &'a [SimUser],
    pub topology: Topology,
    pub path_loss: PathLoss,
    pub radio: RadioParams,
    pub grid: TimeGrid,
    fading: SmallScaleFading,
    realized: RefCell<HashMap<(usize, i64), f64>>,
}

impl<'a> World<'a> {
    pub fn new(cfg: &'a ScenarioConfig, setup: &'a TrialSetup) -> Result<Self> {
        Ok(World {
            cfg,
            trial: setup.trial,
            users: &setup.users,
            topology: topology(cfg)?,
            path_loss: cfg.path_loss()?,
            radio: cfg.radio_params()?,
            grid: cfg.time_grid()?,
            fading: SmallScaleFading::new(cfg.radio.num_antennas)?,
            realized: RefCell::new(HashMap::new()),
        })
    }

    /// Serving BS and large-scale gain of `user` in absolute frame `f`,
    /// taken at the middle of the frame.
    pub fn link(&self, user: usize, f: i64) -> (usize, f64) {
        let u = &self.users[user];
        let elapsed = ((f - u.arrival_frame) as f64 + 0.5) * self.grid.frame_duration;
        let x = u.mobility.x_at(&self.topology, elapsed);
        let (bs, d) = self.topology.nearest(x, u.mobility.road_offset);
        let gain = self.path_loss.gain(d.max(1.0)).map_or(0.0, |g| g.value());
        (bs, gain)
    }

    fn key(&self, extra: &[u64]) -> Vec<u64> {
        let mut k = Vec::with_capacity(extra.len() + 1);
        k.push(self.trial as u64);
        k.extend_from_slice(extra);
        k
    }

    /// Predicted frame-average residual bandwidth of BS `bs` in frame `f`.
    pub fn predicted_bandwidth(&self, bs: usize, f: i64) -> f64 {
        let p = &self.cfg.prediction;
        let mean = p.bandwidth_bias * self.cfg.bs_mean_bandwidth(bs);
        match BandwidthPrediction::with_cv(mean, p.bandwidth_cv, p.bandwidth_distribution) {
            Ok(pred) => {
                let mut rng = stream_rng(
                    self.cfg.seed,
                    Stream::BandwidthPrediction,
                    &self.key(&[bs as u64, f as u64]),
                );
                pred.sample(&mut rng)
            }
            Err(_) => 0.0,
        }
    }

    /// Predicted large-scale gain of `user` in frame `f`.
    pub fn predicted_gain(&self, user: usize, f: i64, true_gain: f64) -> f64 {
        let p = &self.cfg.prediction;
        match GainPrediction::with_delta_ratio(p.gain_bias * true_gain, p.gain_delta_ratio, p.gain_distribution) {
            Ok(pred) => {
                let mut rng = stream_rng(
                    self.cfg.seed,
                    Stream::GainPrediction,
                    &self.key(&[user as u64, f as u64]),
                );
                pred.sample(&mut rng)
            }
            Err(_) => 0.0,
        }
    }

    /// Frame-average rate `user` would get in frame `f` if served in every
    /// slot.
    pub fn realized_rate(&self, user: usize, f: i64) -> f64 {
        if let Some(&r) = self.realized.borrow().get(&(user, f)) {
            return r;
        }
        let (bs, gain) = self.link(user, f);
        let snr = gain * self.radio.snr_per_gain();
        let (mut w, mut h) = (Vec::new(), Vec::new());
        self.slot_bandwidths(bs, f, &mut w);
        self.slot_fading(user, f, &mut h);
        let r = w.iter().zip(&h).map(|(&w, &h)| rate_from_snr(w, snr, h)).sum::<f64>() / w.len() as f64;
        self.realized.borrow_mut().insert((user, f), r);
        r
    }

    /// Serving BS and predicted average rate of `user` in frame `f`.
    pub fn predicted_rate(&self, user: usize, f: i64) -> (usize, f64) {
        if self.cfg.prediction.error_free {
            return (self.link(user, f).0, self.realized_rate(user, f));
        }
        let (bs, gain) = self.link(user, f);
        let w = self.predicted_bandwidth(bs, f);
        let a = self.predicted_gain(user, f, gain);
        (bs, predicted_avg_rate(w, a, &self.radio))
    }

    /// Residual bandwidth of every slot of frame `f` at BS `bs`.
    pub fn slot_bandwidths(&self, bs: usize, f: i64, out: &mut Vec<f64>) {
        out.clear();
        let dist = SlotBandwidth::new(self.cfg.bs_mean_bandwidth(bs), self.cfg.radio.slot_bandwidth_cv)
            .expect("validated bandwidth");
        let mut rng = stream_rng(self.cfg.seed, Stream::SlotBandwidth, &self.key(&[bs as u64, f as u64]));
        out.extend((0..self.grid.slots_per_frame).map(|_| dist.sample(&mut rng)));
    }

    /// Small-scale gains of every slot of frame `f` for `user`.
    pub fn slot_fading(&self, user: usize, f: i64, out: &mut Vec<f64>) {
        out.clear();
        let mut rng = stream_rng(self.cfg.seed, Stream::SmallScale, &self.key(&[user as u64, f as u64]));
        out.extend((0..self.grid.slots_per_frame).map(|_| self.fading.sample(&mut rng)));
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    /// Keep a per-slot service log.
    pub record_events: bool,
}

/// One served slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotEvent {
    pub frame: i64,
    /// 1-based slot within the frame.
    pub slot: usize,
    pub bs: usize,
    pub user: usize,
    pub bits: f64,
}

/// A plan made during the trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub frame: i64,
    pub t_mw_frames: i64,
    pub users: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub qos: QosReport,
    /// Some plan was infeasible and the trial fell back to earliest
    /// deadline first until the next successful plan.
    pub overloaded: bool,
    pub plans: Vec<PlanRecord>,
    /// `T_mw*` of the last plan that included each user.
    pub last_t_mw: Vec<Option<i64>>,
    pub total_wait_frames: Vec<i64>,
    pub delivered_bits: Vec<f64>,
    pub video_bits: f64,
    /// Frames simulated until every video was delivered.
    pub frames: i64,
    /// Times a user was served by more than one BS in a slot.
    pub exclusivity_violations: usize,
    pub events: Vec<SlotEvent>,
}

impl TrialOutcome {
    pub fn mean_total_stall_s(&self) -> f64 {
        self.qos.mean_total_stall_s()
    }
}

struct ActivePlan {
    start: i64,
    plan: Plan,
    /// Position of each user in `plan.users`.
    index: Vec<Option<usize>>,
    progress: ProgressTable,
}

impl ActivePlan {
    fn fraction(&self, user: usize, window_frame: usize) -> f64 {
        match self.index[user] {
            Some(i) if window_frame >= 1 => self.plan.users[i]
                .fractions
                .get(window_frame - 1)
                .copied()
                .unwrap_or(0.0),
            _ => 0.0,
        }
    }
}

/// Runs one trial of the configured scheme.
pub fn run_trial(cfg: &ScenarioConfig, trial: usize, options: TrialOptions) -> Result<TrialOutcome> {
    let setup = generate_trial(cfg, trial)?;
    run_setup(cfg, &setup, options)
}

/// Runs a pre-generated trial.
pub fn run_setup(cfg: &ScenarioConfig, setup: &TrialSetup, options: TrialOptions) -> Result<TrialOutcome> {
    let world = World::new(cfg, setup)?;
    let grid = world.grid;
    let n = setup.users.len();
    let num_bs = cfg.topology.num_bs;
    let ts = grid.slots_per_frame;
    let slot_time = grid.slot_duration();
    let seg_frames = grid.segment_frames as i64;
    let seg_bits = cfg.segment_bits();
    let segments = cfg.video.segments;
    let video_bits = seg_bits * segments as f64;
    let done_tol = 1e-6 * video_bits;
    let objective = cfg.scheme.policy.objective();
    let csi = cfg.scheme.csi;

    let ready_count =
        |delivered: f64| -> usize { (((delivered + done_tol) / seg_bits).floor() as usize).min(segments) };

    let mut delivery = DeliveryState::new(n);
    let mut playback: Vec<Playback> = setup
        .users
        .iter()
        .map(|u| Playback::new(u.nominal_start, u.initial_delay, segments, seg_frames))
        .collect();
    let mut done_frame: Vec<Option<i64>> = vec![None; n];
    let mut last_t_mw = vec![None; n];
    let mut plans = Vec::new();
    let mut active_plan: Option<ActivePlan> = None;
    let mut debts = DebtLedger::new(n);
    let mut overloaded = false;
    let mut fallback_since: Option<i64> = None;
    let mut events = Vec::new();
    let mut exclusivity_violations = 0usize;
    let last_arrival = setup.users.iter().map(|u| u.arrival_frame).max().unwrap_or(0);

    let mut coverage: Vec<Vec<usize>> = vec![Vec::new(); num_bs];
    let mut snr = vec![0.0; n];
    let mut fading: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut bandwidth: Vec<Vec<f64>> = vec![Vec::new(); num_bs];
    let mut served_stamp: Vec<usize> = vec![usize::MAX; n];
    let mut queues: Vec<VecDeque<(usize, usize)>> = vec![VecDeque::new(); num_bs];

    let mut f: i64 = 1;
    loop {
        for u in &setup.users {
            if u.arrival_frame <= f {
                let k = u.id;
                playback[k].advance(f, ready_count(delivery.delivered_bits[k]));
            }
        }
        let is_active = |k: usize, d: &DeliveryState| {
            setup.users[k].arrival_frame <= f && done_frame[k].is_none() && d.delivered_bits[k] + done_tol < video_bits
        };
        let any_active = (0..n).any(|k| is_active(k, &delivery));
        if !any_active && f > last_arrival {
            break;
        }
        if f > last_arrival + MAX_DRAIN_FRAMES {
            return Err(Error::Domain(format!("trial {} did not drain", setup.trial)));
        }

        if let Some(obj) = objective {
            let arrival = setup.users.iter().any(|u| u.arrival_frame == f);
            let exhausted = active_plan
                .as_ref()
                .is_some_and(|p| f >= p.start + grid.frames_per_window as i64);
            let retry = fallback_since.is_some_and(|s| f >= s + seg_frames);
            if any_active && (arrival || exhausted || retry) {
                let event = if arrival {
                    ReplanEvent::NewArrival
                } else {
                    ReplanEvent::WindowExhausted
                };
                let progress: Vec<UserProgress> = (0..n)
                    .filter(|&k| is_active(k, &delivery))
                    .map(|k| {
                        let (serving_bs, predicted_rates): (Vec<usize>, Vec<f64>) = (0..grid.frames_per_window as i64)
                            .map(|j| world.predicted_rate(k, f + j))
                            .unzip();
                        UserProgress {
                            user_id: k,
                            segment_bits: vec![seg_bits; segments],
                            delivered_bits: delivery.delivered_bits[k],
                            segments_played: playback[k].segments_started(),
                            committed_wait_frames: playback[k].committed_wait(f),
                            next_play_offset_frames: playback[k].next_play_offset(f),
                            predicted_rates,
                            serving_bs,
                        }
                    })
                    .collect();
                match replan(event, &progress, &grid, (0, i64::MAX), obj) {
                    Ok(plan) => {
                        let mut index = vec![None; n];
                        for (i, u) in plan.users.iter().enumerate() {
                            index[u.user_id] = Some(i);
                            last_t_mw[u.user_id] = Some(plan.t_mw_frames);
                        }
                        plans.push(PlanRecord {
                            frame: f,
                            t_mw_frames: plan.t_mw_frames,
                            users: plan.users.iter().map(|u| u.user_id).collect(),
                        });
                        let progress = ProgressTable::from_plan(&plan, &delivery.delivered_bits, grid.frame_duration);
                        active_plan = Some(ActivePlan {
                            start: f,
                            plan,
                            index,
                            progress,
                        });
                        debts = DebtLedger::new(n);
                        fallback_since = None;
                    }
                    Err(Error::Infeasible { .. }) | Err(Error::DeadlineOutOfWindow { .. }) => {
                        overloaded = true;
                        active_plan = None;
                        fallback_since = Some(f);
                    }
                    Err(e) => return Err(e),
                }
            }
        }

        // Coverage and channel draws of this frame.
        for c in coverage.iter_mut() {
            c.clear();
        }
        for k in 0..n {
            if is_active(k, &delivery) {
                let (bs, gain) = world.link(k, f);
                coverage[bs].push(k);
                snr[k] = gain * world.radio.snr_per_gain();
                world.slot_fading(k, f, &mut fading[k]);
            }
        }
        for bs in 0..num_bs {
            if !coverage[bs].is_empty() {
                world.slot_bandwidths(bs, f, &mut bandwidth[bs]);
            }
        }
        let window_frame = active_plan.as_ref().map_or(0, |p| (f - p.start + 1) as usize);
        if let (Some(p), false) = (&active_plan, csi) {
            for bs in 0..num_bs {
                let fr: Vec<(usize, f64)> = coverage[bs].iter().map(|&k| (k, p.fraction(k, window_frame))).collect();
                queues[bs] = sequential_no_csi(&fr, ts).into_iter().collect();
            }
        }

        for t in 0..ts {
            let stamp = (f as usize).wrapping_mul(ts).wrapping_add(t);
            for bs in 0..num_bs {
                let cov = &coverage[bs];
                if cov.is_empty() {
                    continue;
                }
                let w = bandwidth[bs][t];
                let rate = |k: usize| rate_from_snr(w, snr[k], fading[k][t]);
                let delivered = &delivery.delivered_bits;
                let pending: Vec<usize> = cov
                    .iter()
                    .copied()
                    .filter(|&k| delivered[k] + done_tol < video_bits)
                    .collect();
                if pending.is_empty() {
                    continue;
                }
                let choice = match (&active_plan, objective) {
                    (Some(p), Some(_)) if csi => planned_slot_choice(
                        &pending,
                        window_frame,
                        &p.progress,
                        &debts,
                        delivered,
                        |k| p.fraction(k, window_frame),
                        rate,
                    ),
                    (Some(p), Some(_)) => {
                        let holders = debts.holders(&pending, delivered);
                        if let Some(&k) = holders.iter().min() {
                            Some(k)
                        } else {
                            let q = &mut queues[bs];
                            let mut pick = None;
                            while let Some(&mut (k, ref mut left)) = q.front_mut() {
                                let lagging = p
                                    .progress
                                    .shortfall(k, window_frame, delivered[k])
                                    .is_some_and(|s| s > 0.0);
                                if *left == 0 || !lagging || delivered[k] + done_tol >= video_bits {
                                    q.pop_front();
                                    continue;
                                }
                                *left -= 1;
                                pick = Some(k);
                                break;
                            }
                            pick
                        }
                    }
                    (None, Some(_)) | (_, None) => match cfg.scheme.policy {
                        Scheme::NonpredBestEffort => baseline_best_effort(&pending, rate),
                        _ => {
                            let cands: Vec<DeadlineCandidate> = pending
                                .iter()
                                .map(|&k| {
                                    let next = ready_count(delivered[k]) as i64;
                                    let started = playback[k].segments_started() as i64;
                                    DeadlineCandidate {
                                        user: k,
                                        deadline: playback[k].next_nominal() + (next - started).max(0) * seg_frames,
                                        remaining_bits: video_bits - delivered[k],
                                    }
                                })
                                .collect();
                            baseline_earliest_deadline(&cands)
                        }
                    },
                };
                let Some(k) = choice else { continue };
                let bits = (rate(k) * slot_time)
                    .min(video_bits - delivery.delivered_bits[k])
                    .max(0.0);
                if served_stamp[k] == stamp {
                    exclusivity_violations += 1;
                }
                served_stamp[k] = stamp;
                delivery.record(k, bits);
                if options.record_events {
                    events.push(SlotEvent {
                        frame: f,
                        slot: t + 1,
                        bs,
                        user: k,
                        bits,
                    });
                }
            }
        }

        if let Some(p) = &active_plan {
            debts = catch_up(window_frame, &p.progress, &delivery.delivered_bits);
        }
        for (k, done) in done_frame.iter_mut().enumerate() {
            if setup.users[k].arrival_frame <= f
                && done.is_none()
                && delivery.delivered_bits[k] + done_tol >= video_bits
            {
                *done = Some(f);
            }
        }
        f += 1;
    }

    for u in &setup.users {
        let elapsed = (done_frame[u.id].unwrap_or(f) - u.arrival_frame + 1) as f64 * grid.frame_duration;
        let wraps = u.mobility.wraps(&world.topology, elapsed);
        if wraps > 0 {
            log::debug!(
                "trial {} user {} wrapped around the strip {wraps} time(s)",
                setup.trial,
                u.id
            );
        }
    }
    for k in 0..n {
        let ready = done_frame[k].map_or(f, |d| d + 1);
        playback[k].advance(f, ready_count(delivery.delivered_bits[k]));
        playback[k].complete(ready);
    }
    let qos = QosReport {
        users: setup
            .users
            .iter()
            .map(|u| playback[u.id].report(u.id, u.arrival_frame, grid.frame_duration, cfg.qos.stall_tolerance_s))
            .collect(),
    };
    Ok(TrialOutcome {
        trial: setup.trial,
        qos,
        overloaded,
        plans,
        last_t_mw,
        total_wait_frames: playback.iter().map(|p| p.total_wait_frames()).collect(),
        delivered_bits: delivery.delivered_bits,
        video_bits,
        frames: f - 1,
        exclusivity_violations,
        events,
    })
}
