//! From the design pattern to per-sequence regression structure: which
//! periods a sequence observes, when it crosses over, how much intervention
//! exposure each period carries, and the design-matrix rows this induces.

use alloc::vec::Vec;

use crate::error::Error;
use crate::linalg::Mat;
use crate::model::{CellState, EffectModel, PeriodEffect, TrialSpec};

/// Treatment timing of one sequence, read off its design-pattern row.
///
/// Periods are 1-based calendar indices. The control span is `(b0, b1)` =
/// first and last control period, the intervention span is `(q0, q1)` =
/// first and last intervention period, and `gap` counts the calendar periods
/// strictly between `b1` and `q0` (the implementation window, typically
/// unobserved).
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceProfile {
    /// 1-based sequence index.
    pub sequence: usize,
    /// Observed calendar periods, ascending.
    pub periods: Vec<usize>,
    /// Treatment state of each observed period, aligned with `periods`.
    pub states: Vec<CellState>,
    /// First and last control period, if any period is control.
    pub control_span: Option<(usize, usize)>,
    /// First and last intervention period, if any period is intervention.
    /// Unset for non-monotone sequences (only representable under AVE).
    pub intervention_span: Option<(usize, usize)>,
    /// Calendar periods strictly between the control and intervention spans.
    pub gap: usize,
    /// True when no control period follows an intervention period.
    pub monotone: bool,
}

/// Reads the treatment timing out of one design-pattern row.
///
/// A row that returns to control after intervening has no crossover time, so
/// it is only accepted under [`EffectModel::Average`], where exposure does
/// not depend on time since crossover; the incremental models reject it with
/// [`Error::NonMonotoneSequence`].
pub fn parse_sequence(
    row: &[CellState],
    sequence: usize,
    effect: EffectModel,
) -> Result<SequenceProfile, Error> {
    let mut periods = Vec::new();
    let mut states = Vec::new();
    let mut control: Option<(usize, usize)> = None;
    let mut intervention: Option<(usize, usize)> = None;
    for (idx, &cell) in row.iter().enumerate() {
        let period = idx + 1;
        match cell {
            CellState::Unobserved => continue,
            CellState::Control => {
                let (b0, _) = control.unwrap_or((period, period));
                control = Some((b0, period));
            }
            CellState::Intervention => {
                let (q0, _) = intervention.unwrap_or((period, period));
                intervention = Some((q0, period));
            }
        }
        periods.push(period);
        states.push(cell);
    }

    let monotone = match (control, intervention) {
        (Some((_, b1)), Some((q0, _))) => b1 < q0,
        _ => true,
    };
    if !monotone && effect != EffectModel::Average {
        return Err(Error::NonMonotoneSequence { sequence });
    }

    let (intervention_span, gap) = if monotone {
        let gap = match (control, intervention) {
            (Some((_, b1)), Some((q0, _))) => q0 - b1 - 1,
            _ => 0,
        };
        (intervention, gap)
    } else {
        // Interleaved treatment has no single crossover; AVE does not need
        // one.
        (None, 0)
    };

    Ok(SequenceProfile {
        sequence,
        periods,
        states,
        control_span: control,
        intervention_span,
        gap,
        monotone,
    })
}

/// Intervention exposure `u` of one observed period.
///
/// Control periods have exposure 0. Intervention periods have exposure 1
/// under [`EffectModel::Average`]; under the incremental models the exposure
/// in calendar period `t` is `e / q` with `e = t - q0 + 1` periods elapsed
/// since crossover, capped at 1 by [`EffectModel::IncrementalCapped`].
/// Periods spent in the implementation gap accrue no exposure.
pub fn exposure(
    profile: &SequenceProfile,
    period: usize,
    effect: EffectModel,
    q: Option<usize>,
) -> Result<f64, Error> {
    let pos = profile
        .periods
        .binary_search(&period)
        .map_err(|_| Error::PeriodNotObserved { sequence: profile.sequence, period })?;
    if profile.states[pos] == CellState::Control {
        return Ok(0.0);
    }
    match effect {
        EffectModel::Average => Ok(1.0),
        EffectModel::Incremental | EffectModel::IncrementalCapped => {
            let q0 = profile
                .intervention_span
                .ok_or(Error::NonMonotoneSequence { sequence: profile.sequence })?
                .0;
            let q = match q {
                Some(q) if q >= 1 => q,
                _ => {
                    return Err(Error::Domain(alloc::format!(
                        "incremental effect models need max_intervention_period >= 1, got {q:?}"
                    )))
                }
            };
            let elapsed = period - q0 + 1;
            let capped = if effect == EffectModel::IncrementalCapped {
                elapsed.min(q)
            } else {
                elapsed
            };
            Ok(capped as f64 / q as f64)
        }
    }
}

/// Everything the power engine needs about one sequence: the profile, the
/// observed cluster-period sizes and exposures, and the design rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDesign {
    pub profile: SequenceProfile,
    /// Cluster-period size of each observed period, aligned with
    /// `profile.periods`.
    pub sizes: Vec<u32>,
    /// Intervention exposure of each observed period.
    pub exposures: Vec<f64>,
    /// Design-matrix rows, one per observed period:
    /// period indicators plus exposure under CAT, `[1, t - 1, u]` under LIN.
    pub x: Mat,
    /// Number of clusters following this sequence.
    pub clusters: u32,
}

impl SequenceDesign {
    /// Observations contributed by one cluster of this sequence.
    pub fn cluster_size(&self) -> usize {
        self.sizes.iter().map(|&n| n as usize).sum()
    }
}

/// Expands every sequence of a specification into its regression structure.
///
/// Expects a specification that already passed [`crate::validate`]; on
/// malformed input the individual parse errors surface here one at a time.
pub fn build_design(spec: &TrialSpec) -> Result<Vec<SequenceDesign>, Error> {
    let p = spec.num_params();
    let num_periods = spec.num_periods();
    let mut designs = Vec::with_capacity(spec.num_sequences());
    for (s, row) in spec.design_pattern.iter().enumerate() {
        let profile = parse_sequence(row, s + 1, spec.effect_model)?;
        let mut sizes = Vec::with_capacity(profile.periods.len());
        let mut exposures = Vec::with_capacity(profile.periods.len());
        let mut x = Mat::zeros(profile.periods.len(), p);
        for (i, &period) in profile.periods.iter().enumerate() {
            let u = exposure(&profile, period, spec.effect_model, spec.max_intervention_period)?;
            sizes.push(spec.cp_sizes[s][period - 1]);
            exposures.push(u);
            let row = x.row_mut(i);
            match spec.period_effect {
                PeriodEffect::Categorical => {
                    row[period - 1] = 1.0;
                    row[num_periods] = u;
                }
                PeriodEffect::Linear => {
                    row[0] = 1.0;
                    row[1] = (period - 1) as f64;
                    row[2] = u;
                }
            }
        }
        designs.push(SequenceDesign {
            profile,
            sizes,
            exposures,
            x,
            clusters: spec.clusters_per_sequence[s],
        });
    }
    Ok(designs)
}
