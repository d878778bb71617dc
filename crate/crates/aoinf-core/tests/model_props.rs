//! Randomized structural checks of the decision model and its unit-step
//! reduction, driven over small parameter grids where whole-space loops
//! stay cheap.

use aoinf_core::{transformed_row, Action, ModelParams, Mode, StateSpace, SystemState};
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = ModelParams> {
    (
        1u32..=10,
        1u32..=8,
        1u32..=4,
        1u32..=4,
        1u32..=4,
        0u32..=3,
        0.0f64..=1.0,
        0.0f64..=1.0,
    )
        .prop_flat_map(
            |(cap, period, compute, tx, upload, ground, p_tx, p_offload)| {
                (0..=period).prop_map(move |window| ModelParams {
                    aoinf_cap: cap,
                    period,
                    window,
                    compute_dur: compute,
                    tx_dur: tx,
                    upload_dur: upload,
                    ground_infer_dur: ground,
                    p_tx,
                    p_offload,
                })
            },
        )
}

fn space_and_state() -> impl Strategy<Value = (StateSpace, SystemState)> {
    (params_strategy(), any::<prop::sample::Index>()).prop_map(|(params, idx)| {
        let space = StateSpace::enumerate(&params).unwrap();
        let state = space.state(idx.index(space.len()));
        (space, state)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_is_a_sorted_bijection(params in params_strategy()) {
        let space = StateSpace::enumerate(&params).unwrap();
        let cap = params.aoinf_cap as usize;
        prop_assert_eq!(space.len(), cap * params.period as usize * (cap + 2));

        for (i, &state) in space.states().iter().enumerate() {
            prop_assert!(params.is_admissible(state));
            prop_assert_eq!(space.index_of(state).unwrap(), i);
        }
        prop_assert!(space.states().windows(2).all(|w| w[0] < w[1]));

        // Count admissible states over a strict superset grid.
        let mut admissible = 0usize;
        for aoinf in 0..=params.aoinf_cap + 1 {
            for phase in 0..=params.period {
                for cache_full in [false, true] {
                    for cache_age in 0..=params.aoinf_cap + 1 {
                        let mode = Mode { phase, cache_full, cache_age };
                        if params.is_admissible(SystemState::new(aoinf, mode)) {
                            admissible += 1;
                        }
                    }
                }
            }
        }
        prop_assert_eq!(admissible, space.len());
    }

    #[test]
    fn decision_kernel_rows_are_distributions_over_the_space(params in params_strategy()) {
        let space = StateSpace::enumerate(&params).unwrap();
        for &state in space.states() {
            let feasible = params.feasible_actions(state.mode).unwrap();
            prop_assert!(feasible.contains(Action::Idle));
            prop_assert!(feasible.contains(Action::Compute));
            for action in feasible.iter() {
                let dist = params.transition_dist(state, action).unwrap();
                prop_assert_eq!(dist.holding, params.holding_time(action));

                let total: f64 = dist.outcomes.iter().map(|(_, p)| p).sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
                prop_assert!(dist.outcomes.len() <= 2);
                for (succ, p) in &dist.outcomes {
                    prop_assert!(*p > 0.0);
                    prop_assert!(space.index_of(*succ).is_ok());
                }
                if dist.outcomes.len() == 2 {
                    prop_assert_ne!(dist.outcomes[0].0, dist.outcomes[1].0);
                }

                let holding = u64::from(dist.holding);
                prop_assert!(dist.cost >= holding * u64::from(state.aoinf.min(params.aoinf_cap)));
                prop_assert!(dist.cost <= holding * u64::from(params.aoinf_cap));
            }
        }
    }
}

proptest! {
    #[test]
    fn slot_cost_matches_the_slotwise_sum((space, state) in space_and_state()) {
        let params = space.params();
        for action in Action::ALL {
            let holding = params.holding_time(action);
            let expected: u64 = (0..holding)
                .map(|i| u64::from((state.aoinf + i).min(params.aoinf_cap)))
                .sum();
            prop_assert_eq!(params.slot_cost(state.aoinf, action).unwrap(), expected);
        }
    }

    #[test]
    fn feasibility_follows_the_visibility_rules((space, state) in space_and_state()) {
        let params = space.params();
        let remaining = params.remaining_visibility(state.mode.phase).unwrap();
        let expected_remaining = if state.mode.phase < params.window {
            params.window - state.mode.phase
        } else {
            0
        };
        prop_assert_eq!(remaining, expected_remaining);

        let feasible = params.feasible_actions(state.mode).unwrap();
        prop_assert_eq!(
            feasible.contains(Action::Tx),
            state.mode.cache_full && remaining >= params.tx_dur
        );
        prop_assert_eq!(
            feasible.contains(Action::Offload),
            remaining >= params.upload_dur
        );
    }

    #[test]
    fn cache_bookkeeping_is_consistent((space, state) in space_and_state()) {
        let params = space.params();
        for action in params.feasible_actions(state.mode).unwrap().iter() {
            let after = params.mode_after(state.mode, action).unwrap();
            prop_assert_eq!(
                after.phase,
                (state.mode.phase + params.holding_time(action)) % params.period
            );
            prop_assert!(after.cache_full || after.cache_age == 0);
            match action {
                Action::Tx => prop_assert!(!after.cache_full),
                Action::Compute => {
                    prop_assert!(after.cache_full);
                    prop_assert_eq!(after.cache_age, params.compute_dur.min(params.aoinf_cap));
                }
                Action::Idle | Action::Offload => {
                    prop_assert_eq!(after.cache_full, state.mode.cache_full);
                    if state.mode.cache_full {
                        let elapsed = params.holding_time(action);
                        prop_assert_eq!(
                            after.cache_age,
                            (state.mode.cache_age + elapsed).min(params.aoinf_cap)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn aging_and_resets_stay_in_range((space, state) in space_and_state()) {
        let params = space.params();
        for action in params.feasible_actions(state.mode).unwrap().iter() {
            let aged = params.aged_aoinf(state.aoinf, action).unwrap();
            prop_assert!(aged >= state.aoinf.min(params.aoinf_cap));
            prop_assert!(aged <= params.aoinf_cap);
            if matches!(action, Action::Tx | Action::Offload) {
                let reset = params.success_reset(action, state.mode).unwrap();
                prop_assert!(reset >= 1 && reset <= params.aoinf_cap);
            }
        }
    }

    #[test]
    fn kernel_costs_and_aging_grow_with_the_age(
        (space, state) in space_and_state(),
        bump in 1u32..=5,
    ) {
        let params = space.params();
        let higher = (state.aoinf + bump).min(params.aoinf_cap);
        for action in Action::ALL {
            prop_assert!(
                params.slot_cost(state.aoinf, action).unwrap()
                    <= params.slot_cost(higher, action).unwrap()
            );
            prop_assert!(
                params.aged_aoinf(state.aoinf, action).unwrap()
                    <= params.aged_aoinf(higher, action).unwrap()
            );
        }
    }

    #[test]
    fn unit_step_rows_are_distributions(
        (space, state) in space_and_state(),
        theta in 0.05f64..=1.0,
    ) {
        let params = space.params();
        for action in params.feasible_actions(state.mode).unwrap().iter() {
            let row = transformed_row(&space, state, action, theta).unwrap();
            let total: f64 = row.outcomes.iter().map(|(_, p)| p).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
            prop_assert!(row.outcomes.iter().all(|(_, p)| *p >= 0.0));
            prop_assert!(row.outcomes.len() <= 3);

            let dist = params.transition_dist(state, action).unwrap();
            let expected = theta * dist.cost as f64 / f64::from(dist.holding);
            prop_assert!((row.cost - expected).abs() <= 1e-12 * expected.max(1.0));

            // Everything beyond the self-loop is the original kernel scaled
            // by theta / holding.
            let own = space.index_of(state).unwrap();
            let rate = theta / f64::from(dist.holding);
            for (idx, p) in &row.outcomes {
                if *idx != own {
                    let source: f64 = dist
                        .outcomes
                        .iter()
                        .filter(|(succ, _)| space.index_of(*succ).unwrap() == *idx)
                        .map(|(_, q)| q)
                        .sum();
                    prop_assert!((p - rate * source).abs() <= 1e-12);
                }
            }
        }
    }
}
