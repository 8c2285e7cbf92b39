use resalloc::par::Execution;
use resalloc::simulator::config::PredictionNoiseConfig;
use resalloc::simulator::qos::{QosReport, UserQos};
use resalloc::simulator::trial::{generate_trial, run_setup};
use resalloc::simulator::{
    emit_cdfs, max_supportable_rate, run_trial, run_trials, sweep_arrival_rate, ScenarioConfig, Scheme, TrialOptions,
};

fn small() -> ScenarioConfig {
    let mut c = ScenarioConfig {
        seed: 21,
        trials: 3,
        ..ScenarioConfig::default()
    };
    c.arrivals.rate_per_s = 0.25;
    c
}

#[test]
fn same_seed_same_outcome() {
    let cfg = small();
    let a = run_trial(&cfg, 1, TrialOptions { record_events: true }).unwrap();
    let b = run_trial(&cfg, 1, TrialOptions { record_events: true }).unwrap();
    assert_eq!(a.qos, b.qos);
    assert_eq!(a.delivered_bits, b.delivered_bits);
    assert_eq!(a.events, b.events);
}

#[test]
fn trials_do_not_depend_on_order_or_execution() {
    let cfg = small();
    let seq = run_trials(&cfg, Execution::Sequential).unwrap();
    let par = run_trials(&cfg, Execution::Parallel).unwrap();
    assert_eq!(seq.len(), 3);
    for (s, p) in seq.iter().zip(&par) {
        assert_eq!(s.qos, p.qos);
    }
    let alone = run_trial(&cfg, 2, TrialOptions::default()).unwrap();
    assert_eq!(alone.qos, seq[2].qos);
}

#[test]
fn schemes_see_the_same_arrivals() {
    let cfg = small();
    let mut other = cfg.clone();
    other.scheme.policy = Scheme::NonpredBestEffort;
    other.scheme.csi = false;
    let a = generate_trial(&cfg, 0).unwrap();
    let b = generate_trial(&other, 0).unwrap();
    let arrivals =
        |s: &resalloc::simulator::trial::TrialSetup| s.users.iter().map(|u| u.arrival_frame).collect::<Vec<_>>();
    assert_eq!(arrivals(&a), arrivals(&b));
}

#[test]
fn zero_arrival_rate_gives_an_empty_trial() {
    let mut cfg = small();
    cfg.arrivals.rate_per_s = 0.0;
    let out = run_trial(&cfg, 0, TrialOptions::default()).unwrap();
    assert!(out.qos.users.is_empty());
    assert!(out.delivered_bits.is_empty());
    assert_eq!(out.mean_total_stall_s(), 0.0);
}

#[test]
fn lone_user_with_exact_prediction_never_stalls() {
    let mut cfg = small();
    cfg.prediction = PredictionNoiseConfig::error_free();
    for trial in 0..3 {
        let mut setup = generate_trial(&cfg, trial).unwrap();
        setup.users.truncate(1);
        let out = run_setup(&cfg, &setup, TrialOptions::default()).unwrap();
        assert_eq!(out.qos.users.len(), 1);
        assert_eq!(out.qos.users[0].stall_time_s, 0.0, "trial {trial}");
        assert_eq!(out.delivered_bits[0], out.video_bits);
    }
}

#[test]
fn outcomes_are_physically_sane() {
    let cfg = small();
    for scheme in Scheme::ALL {
        let mut c = cfg.clone();
        c.scheme.policy = scheme;
        let out = run_trial(&c, 0, TrialOptions { record_events: true }).unwrap();
        assert_eq!(out.exclusivity_violations, 0, "{}", scheme.name());
        let mut sums = vec![0.0; out.delivered_bits.len()];
        for e in &out.events {
            assert!(
                e.bits >= 0.0 && (1..=c.grid.slots_per_frame).contains(&e.slot) && e.bs < c.topology.num_bs,
                "{e:?} {}",
                scheme.name()
            );
            sums[e.user] += e.bits;
        }
        assert_eq!(sums, out.delivered_bits);
        for (q, d) in out.qos.users.iter().zip(&out.delivered_bits) {
            assert!(*d <= out.video_bits);
            assert!(q.stall_time_s >= 0.0 && q.max_stall_s <= q.stall_time_s);
            assert!(q.total_wait_s >= q.stall_time_s);
        }
    }
}

#[test]
fn infinite_tolerance_supports_every_swept_rate() {
    let mut cfg = small();
    cfg.trials = 1;
    let rates = [0.1, 0.25];
    let points = sweep_arrival_rate(&cfg, &rates, Execution::Parallel).unwrap();
    assert_eq!(max_supportable_rate(&points, f64::INFINITY, 0.99), Some(0.25));
    assert_eq!(max_supportable_rate(&points, f64::INFINITY, 1.0), Some(0.25));
}

#[test]
fn stall_free_population_has_a_single_cdf_step() {
    let user = |u| UserQos {
        user: u,
        arrival_frame: 0,
        stall_time_s: 0.0,
        stall_count: 0,
        max_stall_s: 0.0,
        initial_delay_s: 3.0,
        total_wait_s: 3.0,
        satisfied: true,
    };
    let report = QosReport {
        users: (0..5).map(user).collect(),
    };
    let cdfs = emit_cdfs(&report);
    assert_eq!(cdfs.stall_count, vec![(0.0, 1.0)]);
    assert_eq!(cdfs.stall_time_s, vec![(0.0, 1.0)]);
    assert_eq!(cdfs.max_stall_s, vec![(0.0, 1.0)]);
}

#[test]
fn config_round_trips_and_rejects_unknown_keys() {
    let cfg = small();
    let text = cfg.to_toml().unwrap();
    assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), cfg);
    assert!(ScenarioConfig::from_toml("trials = 2\nbogus = 1\n").is_err());
    assert!(ScenarioConfig::from_toml("[arrivals]\nrate_per_s = -1.0\n").is_err());
}
