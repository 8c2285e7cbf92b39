use proptest::prelude::*;
use resalloc::channel::TimeGrid;
use resalloc::planner::{
    build_p2, greedy_single_user, is_feasible, objective_value, optimize_t_mw, plan_violation, solve_p2,
    structural_bounds, Objective, Plan, UserPlanInput,
};

fn rate() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), (1u32..=4).prop_map(|k| k as f64 * 2e6), 2e5f64..1e7,]
}

fn single_user() -> impl Strategy<Value = (Vec<f64>, usize, f64)> {
    (2usize..40)
        .prop_flat_map(|tf| (prop::collection::vec(rate(), tf), 1..=tf, 0.05f64..0.98))
        .prop_filter("some capacity before the deadline", |(r, d, _)| {
            r[..*d].iter().any(|&x| x > 0.0)
        })
}

fn user_strategy(tf: usize, num_bs: usize) -> impl Strategy<Value = UserPlanInput> {
    (
        prop::collection::vec(2e6f64..12e6, 1..=3),
        0i64..=3,
        0i64..=3,
        prop::collection::vec(rate(), tf),
        prop::collection::vec(0..num_bs, tf),
    )
        .prop_map(|(segs, tw, gap, rates, bs)| UserPlanInput {
            user_id: 0,
            segment_bits: segs,
            initial_delay_frames: tw,
            first_play_offset_frames: tw + gap,
            predicted_rates: rates,
            serving_bs: bs,
        })
}

fn multi_user() -> impl Strategy<Value = (Vec<UserPlanInput>, TimeGrid)> {
    (20usize..40, 1usize..=3, 2usize..=4, 2usize..=4).prop_flat_map(|(tf, num_bs, k, seg)| {
        prop::collection::vec(user_strategy(tf, num_bs), k).prop_map(move |mut users| {
            for (i, u) in users.iter_mut().enumerate() {
                u.user_id = i;
            }
            (users, TimeGrid::new(tf, 100, 1.0, seg).unwrap())
        })
    })
}

fn single_input(rates: &[f64], bits: f64) -> UserPlanInput {
    UserPlanInput {
        user_id: 0,
        segment_bits: vec![bits],
        initial_delay_frames: 0,
        first_play_offset_frames: 0,
        predicted_rates: rates.to_vec(),
        serving_bs: vec![0; rates.len()],
    }
}

fn assert_legal(inputs: &[UserPlanInput], grid: &TimeGrid, plan: &Plan) {
    assert!(plan_violation(inputs, grid, plan).unwrap() <= 1e-7);
    let tf = grid.frames_per_window;
    let mut load = std::collections::HashMap::new();
    for (u, pu) in inputs.iter().zip(&plan.users) {
        let last = u.deadline(plan.t_mw_frames, u.segment_bits.len(), grid) as usize;
        for (j, &s) in pu.fractions.iter().enumerate() {
            assert!((-1e-9..=1.0 + 1e-9).contains(&s), "fraction {s} out of range");
            if j >= last || u.predicted_rates[j] == 0.0 {
                assert_eq!(s, 0.0, "time planned after the last deadline or on a dead frame");
            }
            *load.entry((u.serving_bs[j], j)).or_insert(0.0) += s;
        }
    }
    assert!(load.values().all(|&l| l <= 1.0 + 1e-7));
    assert_eq!(plan.users.iter().map(|u| u.fractions.len()).max().unwrap_or(tf), tf);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn min_time_matches_greedy((rates, deadline, frac) in single_user()) {
        let grid = TimeGrid::new(rates.len(), 100, 1.0, 1).unwrap();
        let capacity: f64 = rates[..deadline].iter().sum();
        let bits = capacity * frac;
        let greedy = greedy_single_user(&rates, deadline, bits, 1.0).unwrap();
        let plan = solve_p2(&[single_input(&rates, bits)], deadline as i64, &grid, Objective::MinTime).unwrap();
        let lp: f64 = plan.users[0].fractions.iter().sum();
        let g: f64 = greedy.iter().sum();
        prop_assert!((lp - g).abs() <= 1e-9 * g.max(1.0), "lp {lp} greedy {g}");
        let delivered: f64 = plan.users[0].fractions.iter().zip(&rates).map(|(s, r)| s * r).sum();
        prop_assert!((delivered - bits).abs() <= 1e-9 * bits);
    }

    #[test]
    fn greedy_rejects_overfull_demand((rates, deadline, _f) in single_user()) {
        let capacity: f64 = rates[..deadline].iter().sum();
        prop_assert!(greedy_single_user(&rates, deadline, capacity * 1.01, 1.0).is_none());
    }

    #[test]
    fn feasibility_is_monotone_and_search_finds_the_first((inputs, grid) in multi_user()) {
        let (lo, hi) = structural_bounds(&inputs, &grid);
        let mut first = None;
        for t in lo..=hi {
            let f = is_feasible(&inputs, t, &grid).unwrap();
            if first.is_some() {
                prop_assert!(f, "feasible below {t} but not at it");
            } else if f {
                first = Some(t);
            }
        }
        let got = optimize_t_mw(&inputs, &grid, (0, i64::MAX), Objective::WeightedTime).ok().map(|p| p.t_mw_frames);
        prop_assert_eq!(got, first);
    }

    #[test]
    fn plans_are_legal_for_every_objective((inputs, grid) in multi_user()) {
        for objective in [Objective::WeightedTime, Objective::MinTime, Objective::MaxThroughput] {
            if let Ok(plan) = optimize_t_mw(&inputs, &grid, (0, i64::MAX), objective) {
                assert_legal(&inputs, &grid, &plan);
            }
        }
    }

    #[test]
    fn each_objective_is_optimal_against_the_others((inputs, grid) in multi_user()) {
        let Ok(first) = optimize_t_mw(&inputs, &grid, (0, i64::MAX), Objective::WeightedTime) else {
            return Ok(());
        };
        let t = first.t_mw_frames;
        let objectives = [Objective::WeightedTime, Objective::MinTime, Objective::MaxThroughput];
        let plans: Vec<Plan> = objectives.iter().map(|&o| solve_p2(&inputs, t, &grid, o).unwrap()).collect();
        for (i, &o) in objectives.iter().enumerate() {
            let own = objective_value(o, &plans[i].users);
            for other in &plans {
                let cross = objective_value(o, &other.users);
                prop_assert!(own <= cross + 1e-6 * cross.abs().max(1.0), "{:?}: {own} > {cross}", o);
            }
        }
    }

    #[test]
    fn larger_t_mw_never_hurts((inputs, grid) in multi_user()) {
        let Ok(first) = optimize_t_mw(&inputs, &grid, (0, i64::MAX), Objective::MinTime) else {
            return Ok(());
        };
        let (_, hi) = structural_bounds(&inputs, &grid);
        if first.t_mw_frames < hi {
            let later = solve_p2(&inputs, first.t_mw_frames + 1, &grid, Objective::MinTime).unwrap();
            prop_assert!(later.objective_value <= first.objective_value + 1e-6 * first.objective_value.max(1.0));
        }
    }
}

#[test]
fn deadlines_outside_the_window_are_rejected() {
    let grid = TimeGrid::new(10, 100, 1.0, 2).unwrap();
    let u = single_input(&[1e6; 10], 1e6);
    assert!(build_p2(std::slice::from_ref(&u), 11, &grid, Objective::MinTime).is_err());
    assert!(build_p2(std::slice::from_ref(&u), 0, &grid, Objective::MinTime).is_err());
    assert!(build_p2(&[u], 10, &grid, Objective::MinTime).is_ok());
}

#[test]
fn zero_rate_frames_get_no_columns() {
    let grid = TimeGrid::new(4, 100, 1.0, 1).unwrap();
    let u = single_input(&[0.0, 1e6, 0.0, 1e6], 1e6);
    let p2 = build_p2(&[u], 4, &grid, Objective::WeightedTime).unwrap();
    assert_eq!(p2.vars.iter().map(|v| v.frame).collect::<Vec<_>>(), vec![1, 3]);
}

#[test]
fn shared_cell_forces_later_waiting() {
    // Two users that each need a whole frame of the only BS.
    let grid = TimeGrid::new(10, 100, 1.0, 1).unwrap();
    let users: Vec<UserPlanInput> = (0..2)
        .map(|id| UserPlanInput {
            user_id: id,
            ..single_input(&[1e6; 10], 1e6)
        })
        .collect();
    let alone = optimize_t_mw(&users[..1], &grid, (0, 10), Objective::MinTime).unwrap();
    let both = optimize_t_mw(&users, &grid, (0, 10), Objective::MinTime).unwrap();
    assert_eq!(alone.t_mw_frames, 1);
    assert_eq!(both.t_mw_frames, 2);
}
