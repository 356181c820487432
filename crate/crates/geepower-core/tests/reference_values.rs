//! End-to-end engine results pinned against an independent reference
//! implementation (numpy/scipy), covering every outcome family, effect
//! model, period-effect shape, and correlation structure.

use geepower_core::{
    evaluate, CellState, CorrelationSpec, DfChoice, Distribution, EffectModel, Link, OutcomeModel,
    PeriodEffect, PowerResult, TrialSpec,
};

fn pattern(rows: &[&[u8]]) -> Vec<Vec<CellState>> {
    rows.iter()
        .map(|r| r.iter().map(|&c| CellState::from_code(c).unwrap()).collect())
        .collect()
}

fn sizes(rows: &[&[u32]]) -> Vec<Vec<u32>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

struct Expected {
    var_delta: f64,
    stddel: f64,
    zpower: f64,
    tpower: f64,
    df: u64,
    totaln: u64,
}

fn check(name: &str, spec: &TrialSpec, want: Expected) {
    let got: PowerResult = evaluate(spec).unwrap_or_else(|e| panic!("{name}: {e}"));
    let close = |got: f64, want: f64| (got - want).abs() <= 1e-12 * (1.0 + want.abs());
    assert!(close(got.var_delta, want.var_delta), "{name} var_delta {} != {}", got.var_delta, want.var_delta);
    assert!(close(got.stddel, want.stddel), "{name} stddel {} != {}", got.stddel, want.stddel);
    assert!(close(got.zpower, want.zpower), "{name} zpower {} != {}", got.zpower, want.zpower);
    assert!(close(got.tpower, want.tpower), "{name} tpower {} != {}", got.tpower, want.tpower);
    assert_eq!(got.df, want.df, "{name} df");
    assert_eq!(got.totaln, want.totaln, "{name} totaln");
}

fn binary_logit_ne() -> TrialSpec {
    TrialSpec {
        design_pattern: pattern(&[&[0, 1, 1], &[0, 0, 1]]),
        cp_sizes: sizes(&[&[30, 30, 30], &[30, 30, 30]]),
        clusters_per_sequence: vec![4, 4],
        outcome: OutcomeModel::new(Distribution::Binary, None, 1.0),
        effect_model: EffectModel::Average,
        period_effect: PeriodEffect::Categorical,
        delta: -0.5,
        beta: vec![0.405, -0.01, -0.01],
        correlation: CorrelationSpec::nested_exchangeable(0.02, 0.01),
        max_intervention_period: None,
        alpha: 0.05,
        df_choice: DfChoice::default(),
    }
}

#[test]
fn binary_logit_average_categorical_nested_exchangeable() {
    check(
        "binary/logit AVE CAT NE",
        &binary_logit_ne(),
        Expected {
            var_delta: 0.10224075730732339,
            stddel: 1.5637163441692843,
            zpower: 0.3459611747329958,
            tpower: 0.14597824097609588,
            df: 4,
            totaln: 720,
        },
    );
}

#[test]
fn same_design_under_other_test_settings() {
    // Identical information matrix; only the test size and df rule change.
    let mut spec = binary_logit_ne();
    spec.alpha = 0.01;
    spec.df_choice = DfChoice::ClustersMinusTwo;
    check(
        "binary/logit AVE CAT NE, alpha 0.01, df I-2",
        &spec,
        Expected {
            var_delta: 0.10224075730732339,
            stddel: 1.5637163441692843,
            zpower: 0.15574202337153753,
            tpower: 0.03788055539158999,
            df: 6,
            totaln: 720,
        },
    );
}

#[test]
fn poisson_log_incremental_linear_exponential_decay() {
    // An incomplete design: sequence 2 skips its implementation period, and
    // the uncapped ramp pushes exposure past 1 in the tail periods.
    let spec = TrialSpec {
        design_pattern: pattern(&[&[0, 1, 1, 1], &[0, 0, 2, 1]]),
        cp_sizes: sizes(&[&[8, 8, 8, 8], &[6, 6, 0, 6]]),
        clusters_per_sequence: vec![3, 5],
        outcome: OutcomeModel::new(Distribution::Poisson, None, 1.4),
        effect_model: EffectModel::Incremental,
        period_effect: PeriodEffect::Linear,
        delta: -0.3,
        beta: vec![0.7, 0.02],
        correlation: CorrelationSpec::exponential_decay(0.05, 0.6),
        max_intervention_period: Some(2),
        alpha: 0.05,
        df_choice: DfChoice::default(),
    };
    check(
        "poisson/log INC LIN ED",
        &spec,
        Expected {
            var_delta: 0.062436097382569986,
            stddel: 1.200613935952833,
            zpower: 0.22382159295098442,
            tpower: 0.11450592887131811,
            df: 5,
            totaln: 186,
        },
    );
}

#[test]
fn normal_identity_capped_categorical_block_exchangeable() {
    let spec = TrialSpec {
        design_pattern: pattern(&[&[0, 0, 1, 1], &[0, 1, 1, 1]]),
        cp_sizes: sizes(&[&[5, 5, 5, 5], &[5, 5, 5, 5]]),
        clusters_per_sequence: vec![2, 4],
        outcome: OutcomeModel::new(Distribution::Normal, None, 3.0),
        effect_model: EffectModel::IncrementalCapped,
        period_effect: PeriodEffect::Categorical,
        delta: 1.1,
        beta: vec![1.0, 2.0, 3.0, 4.0],
        correlation: CorrelationSpec::block_exchangeable(0.15, 0.04, 0.5),
        max_intervention_period: Some(2),
        alpha: 0.05,
        df_choice: DfChoice::default(),
    };
    check(
        "normal/identity INC_EX CAT BE",
        &spec,
        Expected {
            var_delta: 1.340123893805304,
            stddel: 0.9502113418044434,
            zpower: 0.1563069071273081,
            tpower: 0.027011368453225337,
            df: 1,
            totaln: 120,
        },
    );
}

#[test]
fn binary_log_average_categorical_proportional_decay() {
    // Relative-risk parameterization: binary outcome under a log link.
    let spec = TrialSpec {
        design_pattern: pattern(&[&[0, 1, 1], &[0, 0, 1]]),
        cp_sizes: sizes(&[&[7, 7, 7], &[7, 7, 7]]),
        clusters_per_sequence: vec![5, 5],
        outcome: OutcomeModel::new(Distribution::Binary, Some(Link::Log), 1.0),
        effect_model: EffectModel::Average,
        period_effect: PeriodEffect::Categorical,
        delta: -0.2,
        beta: vec![-1.5, -1.4, -1.45],
        correlation: CorrelationSpec::proportional_decay(0.08, 0.5),
        max_intervention_period: None,
        alpha: 0.05,
        df_choice: DfChoice::default(),
    };
    check(
        "binary/log AVE CAT PD",
        &spec,
        Expected {
            var_delta: 0.17829725982606684,
            stddel: 0.47365013049485966,
            zpower: 0.0685980619561906,
            tpower: 0.047957792413406086,
            df: 6,
            totaln: 210,
        },
    );
}

#[test]
fn binary_identity_average_linear_nested_exchangeable() {
    // Risk-difference parameterization: binary outcome under an identity
    // link, single sequence.
    let spec = TrialSpec {
        design_pattern: pattern(&[&[0, 1, 1]]),
        cp_sizes: sizes(&[&[4, 4, 4]]),
        clusters_per_sequence: vec![6],
        outcome: OutcomeModel::new(Distribution::Binary, Some(Link::Identity), 1.0),
        effect_model: EffectModel::Average,
        period_effect: PeriodEffect::Linear,
        delta: 0.15,
        beta: vec![0.3, 0.01],
        correlation: CorrelationSpec::nested_exchangeable(0.1, 0.05),
        max_intervention_period: None,
        alpha: 0.05,
        df_choice: DfChoice::default(),
    };
    check(
        "binary/identity AVE LIN NE",
        &spec,
        Expected {
            var_delta: 0.0665950447013891,
            stddel: 0.581259818115102,
            zpower: 0.08399299219453255,
            tpower: 0.040146734824425136,
            df: 3,
            totaln: 72,
        },
    );
}
