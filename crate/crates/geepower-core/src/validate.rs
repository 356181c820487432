//! Structural validation of a [`TrialSpec`].
//!
//! [`validate`] never stops at the first problem: it walks the whole
//! specification and returns every violation it can find, each tagged with a
//! stable code (`V1`..`V10`, plus `V0` for an unidentified intervention
//! effect) and, where it applies, the 1-based `(sequence, period)` cell.
//!
//! Checks that need derived quantities (marginal means, exposures) are
//! skipped when their prerequisites already failed — a wrong-length
//! coefficient vector, say, makes every mean meaningless, so only the
//! wrong-length violation is reported.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::corr::correlation_entry;
use crate::design::{exposure, parse_sequence};
use crate::model::{
    frechet_bounds, mean_and_derivative, CellState, CorrelationKind, Distribution, EffectModel,
    PeriodEffect, TrialSpec,
};

/// Stable identifier of one kind of specification problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationCode {
    /// The design never observes a control cell or never observes an
    /// intervention cell, so the intervention effect is not identified.
    UnidentifiedEffect,
    /// Design pattern, size matrix, and cluster counts do not line up:
    /// ragged or mismatched shapes, non-positive cluster counts, or a cell
    /// where `unobserved` and `size == 0` disagree.
    ShapeAlignment,
    /// Coefficient vector length does not match the period-effect shape.
    BetaLength,
    /// A marginal mean leaves the admissible range of the outcome family.
    MeanRange,
    /// A working correlation entry falls outside the Frechet-Hoeffding
    /// bounds implied by the binary marginal means it connects.
    CorrelationFeasibility,
    /// A correlation parameter the structure needs is missing or out of
    /// range.
    CorrelationParams,
    /// Some calendar period is observed by no sequence, so its categorical
    /// period effect is not identified.
    PeriodCoverage,
    /// An incremental effect model is combined with a sequence that returns
    /// to control, or the ramp length `q` is missing or below one.
    ExposurePattern,
    /// A capped incremental model never reaches full exposure in some
    /// sequence (no maintenance period).
    MaintenancePeriod,
    /// A closed-cohort correlation structure with unequal cluster-period
    /// sizes within a sequence.
    CohortSizes,
    /// Dispersion is non-positive, or differs from one for binary outcomes.
    Dispersion,
}

impl ViolationCode {
    /// Short stable label (`V0`..`V10`).
    pub fn label(self) -> &'static str {
        match self {
            ViolationCode::UnidentifiedEffect => "V0",
            ViolationCode::ShapeAlignment => "V1",
            ViolationCode::BetaLength => "V2",
            ViolationCode::MeanRange => "V3",
            ViolationCode::CorrelationFeasibility => "V4",
            ViolationCode::CorrelationParams => "V5",
            ViolationCode::PeriodCoverage => "V6",
            ViolationCode::ExposurePattern => "V7",
            ViolationCode::MaintenancePeriod => "V8",
            ViolationCode::CohortSizes => "V9",
            ViolationCode::Dispersion => "V10",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One concrete problem found in a specification.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    /// 1-based `(sequence, period)` when the problem points at a cell.
    pub location: Option<(usize, usize)>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((s, t)) => write!(f, "{} [sequence {s}, period {t}]: {}", self.code, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

/// Everything [`validate`] found, in deterministic order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// True when at least one violation carries the given code.
    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, location: Option<(usize, usize)>, message: String) {
        self.violations.push(Violation { code, location, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks a specification against every structural rule and returns the
/// full list of violations (empty means the spec is ready for
/// [`crate::evaluate`]).
pub fn validate(spec: &TrialSpec) -> ValidationReport {
    let mut report = ValidationReport::default();

    check_correlation_params(spec, &mut report);
    check_dispersion(spec, &mut report);

    let shape_ok = check_shape(spec, &mut report);
    let beta_ok = check_beta_length(spec, &mut report, shape_ok);
    if !shape_ok {
        // Cell-level checks would index out of bounds or chase shapes that
        // do not exist; the shape violations already say what to fix.
        return report;
    }

    check_zero_alignment(spec, &mut report);
    check_identifiability(spec, &mut report);
    let exposures_ok = check_exposure_pattern(spec, &mut report);
    check_period_coverage(spec, &mut report);
    check_cohort_sizes(spec, &mut report);
    if exposures_ok {
        check_maintenance(spec, &mut report);
        if beta_ok {
            check_means_and_feasibility(spec, &mut report);
        }
    }
    report
}

/// Rectangularity and cross-matrix alignment (code V1). Returns false when
/// later cell-level checks cannot run safely.
fn check_shape(spec: &TrialSpec, report: &mut ValidationReport) -> bool {
    let s = spec.num_sequences();
    let mut ok = true;
    if s == 0 {
        report.push(
            ViolationCode::ShapeAlignment,
            None,
            String::from("design pattern has no sequences"),
        );
        return false;
    }
    let j = spec.design_pattern[0].len();
    if j == 0 {
        report.push(
            ViolationCode::ShapeAlignment,
            None,
            String::from("design pattern has no periods"),
        );
        ok = false;
    }
    for (i, row) in spec.design_pattern.iter().enumerate() {
        if row.len() != j {
            report.push(
                ViolationCode::ShapeAlignment,
                None,
                format!("design pattern row {} has {} periods, expected {j}", i + 1, row.len()),
            );
            ok = false;
        }
    }
    if spec.cp_sizes.len() != s {
        report.push(
            ViolationCode::ShapeAlignment,
            None,
            format!("size matrix has {} rows, design pattern has {s}", spec.cp_sizes.len()),
        );
        ok = false;
    }
    for (i, row) in spec.cp_sizes.iter().enumerate() {
        if row.len() != j {
            report.push(
                ViolationCode::ShapeAlignment,
                None,
                format!("size matrix row {} has {} periods, expected {j}", i + 1, row.len()),
            );
            ok = false;
        }
    }
    if spec.clusters_per_sequence.len() != s {
        report.push(
            ViolationCode::ShapeAlignment,
            None,
            format!(
                "{} cluster counts for {s} sequences",
                spec.clusters_per_sequence.len()
            ),
        );
        ok = false;
    }
    for (i, &m) in spec.clusters_per_sequence.iter().enumerate() {
        if m == 0 {
            report.push(
                ViolationCode::ShapeAlignment,
                None,
                format!("sequence {} has zero clusters", i + 1),
            );
        }
    }
    ok
}

/// Unobserved cells and zero sizes must coincide (code V1).
fn check_zero_alignment(spec: &TrialSpec, report: &mut ValidationReport) {
    for (s, (states, sizes)) in spec.design_pattern.iter().zip(&spec.cp_sizes).enumerate() {
        for (t, (&state, &n)) in states.iter().zip(sizes).enumerate() {
            let unobserved = state == CellState::Unobserved;
            if unobserved && n != 0 {
                report.push(
                    ViolationCode::ShapeAlignment,
                    Some((s + 1, t + 1)),
                    format!("unobserved cell has size {n}; unobserved periods must have size 0"),
                );
            } else if !unobserved && n == 0 {
                report.push(
                    ViolationCode::ShapeAlignment,
                    Some((s + 1, t + 1)),
                    String::from("observed cell has size 0; zero-size cells must be marked unobserved"),
                );
            }
        }
    }
}

/// The design must observe both conditions somewhere (code V0).
fn check_identifiability(spec: &TrialSpec, report: &mut ValidationReport) {
    let mut any_control = false;
    let mut any_intervention = false;
    for (s, states) in spec.design_pattern.iter().enumerate() {
        if spec.clusters_per_sequence[s] == 0 {
            continue;
        }
        for (t, &state) in states.iter().enumerate() {
            if spec.cp_sizes[s][t] == 0 {
                continue;
            }
            match state {
                CellState::Control => any_control = true,
                CellState::Intervention => any_intervention = true,
                CellState::Unobserved => {}
            }
        }
    }
    if !any_control || !any_intervention {
        let missing = if any_control { "intervention" } else { "control" };
        report.push(
            ViolationCode::UnidentifiedEffect,
            None,
            format!("no observed {missing} cell: the intervention effect is not identified"),
        );
    }
}

/// Coefficient vector length against the period-effect shape (code V2).
fn check_beta_length(spec: &TrialSpec, report: &mut ValidationReport, shape_ok: bool) -> bool {
    let expected = match spec.period_effect {
        PeriodEffect::Categorical => {
            if !shape_ok {
                // Period count is not well defined on ragged input.
                return false;
            }
            spec.num_periods()
        }
        PeriodEffect::Linear => 2,
    };
    if spec.beta.len() != expected {
        report.push(
            ViolationCode::BetaLength,
            None,
            format!(
                "{} period-effect coefficients for {} ({expected} expected)",
                spec.beta.len(),
                spec.period_effect,
            ),
        );
        return false;
    }
    true
}

/// Correlation parameters: presence and admissible ranges (code V5).
fn check_correlation_params(spec: &TrialSpec, report: &mut ValidationReport) {
    let corr = &spec.correlation;
    let mut need = |name: &str, value: Option<f64>, lo_open: bool, hi_closed: bool| {
        let (lo, hi) = (0.0, 1.0);
        match value {
            None => report.push(
                ViolationCode::CorrelationParams,
                None,
                format!("{} requires parameter {name}", corr.kind),
            ),
            Some(v) => {
                let lo_ok = if lo_open { v > lo } else { v >= lo };
                let hi_ok = if hi_closed { v <= hi } else { v < hi };
                if !(lo_ok && hi_ok && v.is_finite()) {
                    let range = match (lo_open, hi_closed) {
                        (false, false) => "[0, 1)",
                        (false, true) => "[0, 1]",
                        (true, false) => "(0, 1)",
                        (true, true) => "(0, 1]",
                    };
                    report.push(
                        ViolationCode::CorrelationParams,
                        None,
                        format!("{} parameter {name} = {v} is outside {range}", corr.kind),
                    );
                }
            }
        }
    };
    match corr.kind {
        CorrelationKind::NestedExchangeable => {
            need("alpha1", corr.alpha1, false, false);
            need("alpha2", corr.alpha2, false, false);
        }
        CorrelationKind::ExponentialDecay => {
            need("alpha0", corr.alpha0, false, false);
            need("r0", corr.r0, false, true);
        }
        CorrelationKind::BlockExchangeable => {
            need("alpha1", corr.alpha1, false, false);
            need("alpha2", corr.alpha2, false, false);
            need("alpha3", corr.alpha3, false, false);
        }
        CorrelationKind::ProportionalDecay => {
            need("alpha0", corr.alpha0, false, false);
            need("r0", corr.r0, true, false);
        }
    }
}

/// Every calendar period needs data somewhere when each gets its own
/// intercept (code V6).
fn check_period_coverage(spec: &TrialSpec, report: &mut ValidationReport) {
    if spec.period_effect != PeriodEffect::Categorical {
        return;
    }
    for t in 0..spec.num_periods() {
        let covered = spec
            .design_pattern
            .iter()
            .zip(&spec.cp_sizes)
            .any(|(states, sizes)| states[t] != CellState::Unobserved && sizes[t] > 0);
        if !covered {
            report.push(
                ViolationCode::PeriodCoverage,
                None,
                format!(
                    "period {} is observed by no sequence; its categorical period effect is not identified",
                    t + 1
                ),
            );
        }
    }
}

/// Incremental effect models need a ramp length and monotone sequences
/// (code V7). Returns false when exposures cannot be computed.
fn check_exposure_pattern(spec: &TrialSpec, report: &mut ValidationReport) -> bool {
    if spec.effect_model == EffectModel::Average {
        return true;
    }
    let mut ok = true;
    match spec.max_intervention_period {
        None => {
            report.push(
                ViolationCode::ExposurePattern,
                None,
                format!(
                    "{} effect model requires max_intervention_period",
                    spec.effect_model
                ),
            );
            ok = false;
        }
        Some(q) if q < 1 => {
            report.push(
                ViolationCode::ExposurePattern,
                None,
                format!("max_intervention_period must be at least 1, got {q}"),
            );
            ok = false;
        }
        Some(_) => {}
    }
    for (s, row) in spec.design_pattern.iter().enumerate() {
        if parse_sequence(row, s + 1, spec.effect_model).is_err() {
            report.push(
                ViolationCode::ExposurePattern,
                None,
                format!(
                    "sequence {} returns to control; exposure is undefined under {}",
                    s + 1,
                    spec.effect_model
                ),
            );
            ok = false;
        }
    }
    ok
}

/// The capped incremental model must reach full exposure in every treated
/// sequence (code V8).
fn check_maintenance(spec: &TrialSpec, report: &mut ValidationReport) {
    if spec.effect_model != EffectModel::IncrementalCapped {
        return;
    }
    let q = match spec.max_intervention_period {
        Some(q) if q >= 1 => q,
        _ => return, // already reported by the exposure-pattern check
    };
    for (s, row) in spec.design_pattern.iter().enumerate() {
        let Ok(profile) = parse_sequence(row, s + 1, spec.effect_model) else {
            continue;
        };
        let Some((q0, q1)) = profile.intervention_span else {
            continue; // all-control sequence: nothing to maintain
        };
        // Full exposure is first reached q periods after crossover.
        if q1 - q0 + 1 < q {
            report.push(
                ViolationCode::MaintenancePeriod,
                Some((s + 1, q1)),
                format!(
                    "sequence {} never reaches full exposure: {} intervention periods observed, \
                     {q} needed",
                    s + 1,
                    q1 - q0 + 1
                ),
            );
        }
    }
}

/// Closed-cohort structures need the same individuals in every period, so
/// sizes must be constant within a sequence (code V9).
fn check_cohort_sizes(spec: &TrialSpec, report: &mut ValidationReport) {
    if !spec.correlation.is_cohort() {
        return;
    }
    for (s, (states, sizes)) in spec.design_pattern.iter().zip(&spec.cp_sizes).enumerate() {
        let observed: Vec<u32> = states
            .iter()
            .zip(sizes)
            .filter(|(&st, _)| st != CellState::Unobserved)
            .map(|(_, &n)| n)
            .collect();
        if let Some(&first) = observed.first() {
            if observed.iter().any(|&n| n != first) {
                report.push(
                    ViolationCode::CohortSizes,
                    None,
                    format!(
                        "sequence {} has varying cluster-period sizes under {}; a closed cohort \
                         keeps the same individuals in every period",
                        s + 1,
                        spec.correlation.kind
                    ),
                );
            }
        }
    }
}

/// Dispersion rules (code V10).
fn check_dispersion(spec: &TrialSpec, report: &mut ValidationReport) {
    let phi = spec.outcome.phi;
    if !(phi > 0.0 && phi.is_finite()) {
        report.push(
            ViolationCode::Dispersion,
            None,
            format!("dispersion must be positive and finite, got {phi}"),
        );
    } else if spec.outcome.distribution == Distribution::Binary && (phi - 1.0).abs() > 1e-12 {
        report.push(
            ViolationCode::Dispersion,
            None,
            format!("binary outcomes fix the dispersion at 1, got {phi}"),
        );
    }
}

/// Marginal mean ranges (code V3) and, for binary outcomes, the
/// Frechet-Hoeffding feasibility of every correlation the structure assigns
/// (code V4).
fn check_means_and_feasibility(spec: &TrialSpec, report: &mut ValidationReport) {
    let link = spec.outcome.effective_link();
    // Realized mean of every observed cell, by (sequence, period position).
    let mut means: Vec<Vec<Option<(usize, f64)>>> = Vec::with_capacity(spec.num_sequences());
    for (s, row) in spec.design_pattern.iter().enumerate() {
        let mut row_means = Vec::new();
        let Ok(profile) = parse_sequence(row, s + 1, spec.effect_model) else {
            means.push(row_means);
            continue; // flagged as V7 already
        };
        for &t in &profile.periods {
            let Ok(u) = exposure(&profile, t, spec.effect_model, spec.max_intervention_period)
            else {
                continue;
            };
            let base = match spec.period_effect {
                PeriodEffect::Categorical => spec.beta[t - 1],
                PeriodEffect::Linear => spec.beta[0] + spec.beta[1] * (t - 1) as f64,
            };
            let mut cell_ok = true;
            // The mean must be admissible both with and without the
            // intervention contribution.
            for (eta, label) in [(base, "u = 0"), (base + u * spec.delta, "realized u")] {
                if u == 0.0 && label == "realized u" {
                    continue;
                }
                let (mu, _) = mean_and_derivative(eta, link);
                if let Some(requirement) = mean_violation(mu, spec.outcome.distribution) {
                    report.push(
                        ViolationCode::MeanRange,
                        Some((s + 1, t)),
                        format!("mean {mu} at {label} violates '{requirement}'"),
                    );
                    cell_ok = false;
                }
            }
            let (mu, _) = mean_and_derivative(base + u * spec.delta, link);
            if cell_ok && spec.cp_sizes[s][t - 1] > 0 {
                row_means.push(Some((t, mu)));
            } else {
                row_means.push(None);
            }
        }
        means.push(row_means);
    }

    if spec.outcome.distribution != Distribution::Binary {
        return;
    }

    // Binary correlation feasibility, pairwise over the observed periods of
    // each sequence (clusters never span sequences).
    for (s, row_means) in means.iter().enumerate() {
        let cells: Vec<(usize, f64)> = row_means.iter().flatten().copied().collect();
        for (i, &(ta, mu_a)) in cells.iter().enumerate() {
            for &(tb, mu_b) in &cells[i..] {
                let Ok((lo, hi)) = frechet_bounds(mu_a, mu_b) else {
                    continue;
                };
                for (rho, path) in assigned_correlations(spec, s, ta, tb) {
                    if rho < lo - 1e-12 || rho > hi + 1e-12 {
                        report.push(
                            ViolationCode::CorrelationFeasibility,
                            Some((s + 1, ta)),
                            format!(
                                "{path} correlation {rho} between periods {ta} and {tb} is \
                                 outside the feasible range [{lo:.6}, {hi:.6}] implied by \
                                 means {mu_a:.6} and {mu_b:.6}"
                            ),
                        );
                    }
                }
            }
        }
    }
}

fn mean_violation(mu: f64, dist: Distribution) -> Option<&'static str> {
    match dist {
        Distribution::Binary if !(mu > 0.0 && mu < 1.0) => Some("binary mean in (0, 1)"),
        Distribution::Poisson if mu.is_nan() || mu <= 0.0 => Some("count mean > 0"),
        _ => None,
    }
}

/// The distinct correlation values the structure actually assigns between
/// observations in periods `ta` and `tb` of sequence `s` (0-based), given
/// the cell sizes. Empty when no such pair of distinct observations exists.
fn assigned_correlations(
    spec: &TrialSpec,
    s: usize,
    ta: usize,
    tb: usize,
) -> Vec<(f64, &'static str)> {
    let corr = &spec.correlation;
    let na = spec.cp_sizes[s][ta - 1];
    let nb = spec.cp_sizes[s][tb - 1];
    let mut out = Vec::new();
    if ta == tb {
        if na >= 2 {
            out.push((correlation_entry(corr, ta, 0, ta, 1), "within-period"));
        }
    } else if corr.is_cohort() {
        if na.min(nb) >= 1 {
            out.push((correlation_entry(corr, ta, 0, tb, 0), "within-individual"));
        }
        if na.max(nb) >= 2 && na.min(nb) >= 1 {
            out.push((correlation_entry(corr, ta, 0, tb, 1), "between-individual"));
        }
    } else if na >= 1 && nb >= 1 {
        // Cross-sectional sampling: every cross-period pair is two distinct
        // individuals regardless of slot labels.
        out.push((correlation_entry(corr, ta, 0, tb, 1), "between-period"));
    }
    out
}
