//! Analytical power for multi-period cluster randomized trials under GEE
//! marginal models.
//!
//! The trial is described by an `S x J` design pattern (sequences by calendar
//! periods, each cell control / intervention / unobserved), a matching matrix
//! of cluster-period sizes, and cluster counts per sequence. Outcomes may be
//! binary, count, or continuous with logit / log / identity links; the
//! intervention enters the marginal mean either at full strength or as a
//! fractional exposure that ramps up after crossover. Within-cluster
//! dependence is one of four working correlation structures (nested
//! exchangeable, exponential decay, and their closed-cohort counterparts).
//!
//! For a single cluster in sequence `s` with `n_s` observations, the
//! model-based covariance of the GEE estimator solves
//!
//! ```text
//! cov(theta_hat) = [ sum_s I_s * D_s' V_s^-1 D_s ]^-1 ,
//! V_s = A_s^(1/2) R_s A_s^(1/2)
//! ```
//!
//! where `D_s` is the Jacobian of the marginal means in the regression
//! parameters, `A_s` holds the variance function values, and `R_s` is the
//! working correlation. Power for the two-sided Wald test of the intervention
//! effect `delta` follows from the standardized effect
//! `|delta| / sqrt(var(delta_hat))` under normal and t reference
//! distributions.
//!
//! Everything here is deterministic, allocation-only (`no_std` + `alloc`),
//! and organized so that one expensive factorization of `R_s` is reused
//! across repeated evaluations of the same design (effect-size sweeps).
//!
//! Typical use:
//!
//! ```
//! use geepower_core::{
//!     CellState::{Control as C, Intervention as T},
//!     CorrelationSpec, Distribution, EffectModel, OutcomeModel, PeriodEffect,
//!     TrialSpec, evaluate,
//! };
//!
//! let spec = TrialSpec {
//!     design_pattern: vec![vec![C, T, T], vec![C, C, T]],
//!     cp_sizes: vec![vec![30, 30, 30], vec![30, 30, 30]],
//!     clusters_per_sequence: vec![4, 4],
//!     outcome: OutcomeModel::new(Distribution::Binary, None, 1.0),
//!     effect_model: EffectModel::Average,
//!     period_effect: PeriodEffect::Categorical,
//!     delta: -0.5,
//!     beta: vec![0.405, -0.01, -0.01],
//!     correlation: CorrelationSpec::nested_exchangeable(0.02, 0.01),
//!     max_intervention_period: None,
//!     alpha: 0.05,
//!     df_choice: Default::default(),
//! };
//! let out = evaluate(&spec).unwrap();
//! assert_eq!((out.df, out.totaln), (4, 720));
//! assert!(out.tpower < out.zpower && out.zpower < 1.0);
//! ```

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corr;
pub mod design;
pub mod distributions;
pub mod error;
pub mod linalg;
pub mod model;
pub mod power;
pub mod validate;

pub use corr::{build_correlation, correlation_entry, CorrelationMatrix};
pub use design::{build_design, exposure, parse_sequence, SequenceDesign, SequenceProfile};
pub use error::Error;
pub use model::{
    frechet_bounds, mean_and_derivative, variance_function, CellState, CorrelationKind,
    CorrelationSpec, DfChoice, Distribution, EffectModel, Link, OutcomeModel, PeriodEffect,
    TrialSpec,
};
pub use power::{
    evaluate, model_covariance, power, sequence_information, PowerResult, PreparedDesign,
};
pub use validate::{validate, ValidationReport, Violation, ViolationCode};
