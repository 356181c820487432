//! Property-based invariants of the model primitives and the power engine.

use proptest::prelude::*;

use geepower_core::{
    build_correlation, correlation_entry, evaluate, exposure, frechet_bounds, mean_and_derivative,
    parse_sequence, CellState, CorrelationSpec, DfChoice, Distribution, EffectModel, Link,
    OutcomeModel, PeriodEffect, TrialSpec,
};

/// A stepped-wedge style specification with one crossover point per
/// sequence; valid by construction for a continuous outcome.
fn wedge_spec(crossovers: &[usize], periods: usize, size: u32, clusters: &[u32]) -> TrialSpec {
    let design_pattern = crossovers
        .iter()
        .map(|&c| {
            (0..periods)
                .map(|j| if j < c { CellState::Control } else { CellState::Intervention })
                .collect()
        })
        .collect();
    TrialSpec {
        design_pattern,
        cp_sizes: vec![vec![size; periods]; crossovers.len()],
        clusters_per_sequence: clusters.to_vec(),
        outcome: OutcomeModel::new(Distribution::Normal, None, 2.0),
        effect_model: EffectModel::Average,
        period_effect: PeriodEffect::Linear,
        delta: 0.4,
        beta: vec![0.1, 0.05],
        correlation: CorrelationSpec::nested_exchangeable(0.08, 0.03),
        max_intervention_period: None,
        alpha: 0.05,
        df_choice: DfChoice::default(),
    }
}

proptest! {
    #[test]
    fn frechet_bounds_are_symmetric_and_bracket_zero(
        mu1 in 0.01f64..0.99,
        mu2 in 0.01f64..0.99,
    ) {
        let (lo, hi) = frechet_bounds(mu1, mu2).unwrap();
        let (lo2, hi2) = frechet_bounds(mu2, mu1).unwrap();
        prop_assert_eq!(lo, lo2);
        prop_assert_eq!(hi, hi2);
        prop_assert!(lo < 0.0 && hi > 0.0, "bounds must bracket independence");
        prop_assert!((-1.0..=1.0).contains(&lo) && (-1.0..=1.0).contains(&hi));
    }

    #[test]
    fn logit_mean_and_slope_are_symmetric(eta in -40.0f64..40.0) {
        let (mu, dmu) = mean_and_derivative(eta, Link::Logit);
        let (mu_neg, dmu_neg) = mean_and_derivative(-eta, Link::Logit);
        prop_assert!((mu + mu_neg - 1.0).abs() < 1e-12);
        prop_assert!((dmu - dmu_neg).abs() < 1e-12);
        prop_assert!(dmu <= 0.25 + 1e-15, "logistic slope peaks at 1/4");
    }

    #[test]
    fn correlation_entry_is_symmetric_under_argument_swap(
        a0 in 0.0f64..0.99,
        a1 in 0.0f64..0.99,
        a2 in 0.0f64..0.99,
        a3 in 0.0f64..0.99,
        r0 in 0.01f64..0.99,
        t in 1usize..20,
        t2 in 1usize..20,
        k in 0usize..10,
        k2 in 0usize..10,
    ) {
        let structures = [
            CorrelationSpec::nested_exchangeable(a1, a2),
            CorrelationSpec::exponential_decay(a0, r0),
            CorrelationSpec::block_exchangeable(a1, a2, a3),
            CorrelationSpec::proportional_decay(a0, r0),
        ];
        for corr in &structures {
            let forward = correlation_entry(corr, t, k, t2, k2);
            let backward = correlation_entry(corr, t2, k2, t, k);
            prop_assert_eq!(forward, backward);
            prop_assert!((-1.0..=1.0).contains(&forward));
        }
    }

    #[test]
    fn decay_entries_match_direct_powers(
        r0 in 0.01f64..1.0,
        d in 1usize..15,
    ) {
        let ed = CorrelationSpec::exponential_decay(0.5, r0);
        let got = correlation_entry(&ed, 1, 0, 1 + d, 1);
        let want = 0.5 * r0.powi(d as i32);
        prop_assert!((got - want).abs() <= 1e-14 * want.abs());
    }

    #[test]
    fn exchangeable_structures_factor_when_nested(
        a2 in 0.0f64..0.5,
        bump in 0.0f64..0.4,
        sizes in proptest::collection::vec(1u32..6, 1..5),
    ) {
        // alpha1 >= alpha2 keeps nested exchangeable positive definite.
        let a1 = a2 + bump;
        let corr = CorrelationSpec::nested_exchangeable(a1, a2);
        let periods: Vec<usize> = (1..=sizes.len()).collect();
        prop_assert!(build_correlation(&corr, &periods, &sizes).is_ok());
    }

    #[test]
    fn average_exposure_is_binary_and_capped_ramp_is_monotone(
        cross in 1usize..6,
        periods in 6usize..10,
        q in 1usize..5,
    ) {
        let row: Vec<CellState> = (0..periods)
            .map(|j| if j < cross { CellState::Control } else { CellState::Intervention })
            .collect();
        for effect in [EffectModel::Average, EffectModel::IncrementalCapped] {
            let profile = parse_sequence(&row, 1, effect).unwrap();
            let mut last = 0.0;
            for t in 1..=periods {
                let u = exposure(&profile, t, effect, Some(q)).unwrap();
                match effect {
                    EffectModel::Average => prop_assert!(u == 0.0 || u == 1.0),
                    _ => {
                        prop_assert!(u >= last, "capped ramp never decreases");
                        prop_assert!(u <= 1.0);
                        last = u;
                    }
                }
            }
            // The capped ramp reaches full exposure given enough periods.
            if effect == EffectModel::IncrementalCapped && periods - cross >= q {
                let u = exposure(&profile, periods, effect, Some(q)).unwrap();
                prop_assert_eq!(u, 1.0);
            }
        }
    }

    #[test]
    fn incremental_exposure_in_complete_wedges(
        cross in 1usize..6,
        periods in 6usize..10,
        q in 1usize..5,
    ) {
        let row: Vec<CellState> = (0..periods)
            .map(|j| if j < cross { CellState::Control } else { CellState::Intervention })
            .collect();
        let profile = parse_sequence(&row, 1, EffectModel::Incremental).unwrap();
        for t in cross + 1..=periods {
            let u = exposure(&profile, t, EffectModel::Incremental, Some(q)).unwrap();
            prop_assert!((u - (t - cross) as f64 / q as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn sequence_order_does_not_change_power(
        crossovers in proptest::collection::vec(1usize..4, 2..5),
        rotate in 0usize..4,
    ) {
        let clusters: Vec<u32> = (0..crossovers.len()).map(|i| 2 + i as u32).collect();
        let spec = wedge_spec(&crossovers, 5, 3, &clusters);
        let base = evaluate(&spec).unwrap();

        let mut rotated = spec.clone();
        let k = rotate % crossovers.len();
        rotated.design_pattern.rotate_left(k);
        rotated.cp_sizes.rotate_left(k);
        rotated.clusters_per_sequence.rotate_left(k);
        let out = evaluate(&rotated).unwrap();

        prop_assert!((out.var_delta - base.var_delta).abs() <= 1e-12 * base.var_delta);
        prop_assert!((out.tpower - base.tpower).abs() <= 1e-12);
    }

    #[test]
    fn replicating_clusters_scales_the_standardized_effect(
        crossovers in proptest::collection::vec(1usize..4, 2..4),
        factor in 2u32..6,
    ) {
        let clusters: Vec<u32> = vec![3; crossovers.len()];
        let spec = wedge_spec(&crossovers, 5, 3, &clusters);
        let base = evaluate(&spec).unwrap();

        let mut scaled = spec.clone();
        for m in &mut scaled.clusters_per_sequence {
            *m *= factor;
        }
        let out = evaluate(&scaled).unwrap();

        let expect = base.stddel * (factor as f64).sqrt();
        prop_assert!(
            (out.stddel - expect).abs() <= 1e-12 * expect,
            "stddel {} != {} * sqrt({})", out.stddel, base.stddel, factor
        );
        prop_assert!(out.zpower >= base.zpower - 1e-12, "more clusters, no less power");
    }

    #[test]
    fn splitting_a_sequence_into_identical_rows_changes_nothing(
        crossovers in proptest::collection::vec(1usize..4, 2..4),
        split in 1u32..4,
    ) {
        let clusters: Vec<u32> = vec![4; crossovers.len()];
        let spec = wedge_spec(&crossovers, 5, 3, &clusters);
        let base = evaluate(&spec).unwrap();

        // Duplicate the last sequence row, dividing its clusters.
        let mut dup = spec.clone();
        let last_pattern = dup.design_pattern.last().unwrap().clone();
        let last_sizes = dup.cp_sizes.last().unwrap().clone();
        dup.design_pattern.push(last_pattern);
        dup.cp_sizes.push(last_sizes);
        *dup.clusters_per_sequence.last_mut().unwrap() = split;
        dup.clusters_per_sequence.push(4 - split);
        let out = evaluate(&dup).unwrap();

        prop_assert!((out.var_delta - base.var_delta).abs() <= 1e-12 * base.var_delta);
        prop_assert!((out.stddel - base.stddel).abs() <= 1e-12 * base.stddel);
    }

    #[test]
    fn block_exchangeable_degenerates_to_nested_exchangeable(
        a2 in 0.0f64..0.4,
        bump in 0.01f64..0.4,
        sizes in proptest::collection::vec(2u32..5, 2..4),
    ) {
        // With alpha3 = alpha2 the same-individual path carries no extra
        // correlation, so BE and NE agree entry for entry.
        let a1 = a2 + bump;
        let be = CorrelationSpec::block_exchangeable(a1, a2, a2);
        let ne = CorrelationSpec::nested_exchangeable(a1, a2);
        let periods: Vec<usize> = (1..=sizes.len()).collect();
        let be_m = build_correlation(&be, &periods, &sizes).unwrap();
        let ne_m = build_correlation(&ne, &periods, &sizes).unwrap();
        prop_assert_eq!(be_m.entries().as_slice(), ne_m.entries().as_slice());
    }

    #[test]
    fn exponential_decay_without_decay_is_exchangeable(
        a0 in 0.0f64..0.5,
        sizes in proptest::collection::vec(1u32..5, 2..4),
    ) {
        let ed = CorrelationSpec::exponential_decay(a0, 1.0);
        let ne = CorrelationSpec::nested_exchangeable(a0, a0);
        let periods: Vec<usize> = (1..=sizes.len()).collect();
        let ed_m = build_correlation(&ed, &periods, &sizes).unwrap();
        let ne_m = build_correlation(&ne, &periods, &sizes).unwrap();
        prop_assert_eq!(ed_m.entries().as_slice(), ne_m.entries().as_slice());
    }
}
