//! Grid evaluation: one scenario, one varied parameter, many values.
//!
//! A sweep clones the base specification once per grid value, revalidates
//! each clone, and evaluates the valid ones. Invalid points are kept in
//! the output with the validation message instead of being dropped, so a
//! sweep that walks a correlation parameter off a feasibility cliff shows
//! exactly where the cliff is.
//!
//! Sweeps over `delta` or `cluster_multiplier` leave every design matrix
//! and correlation factorization unchanged, so those grids share a single
//! [`PreparedDesign`] across worker threads; the other parameters refactor
//! per point. Results always come back in input order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::thread;

use clap::ValueEnum;
use geepower_core::{CorrelationKind, PowerResult, PreparedDesign, TrialSpec};

use crate::report::fmt4;

/// The scenario quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SweepParam {
    /// Intervention effect on the link scale.
    Delta,
    /// Baseline correlation of the decay structures.
    Alpha0,
    /// Within-period correlation.
    Alpha1,
    /// Between-period correlation.
    Alpha2,
    /// Within-individual correlation of the block exchangeable structure.
    Alpha3,
    /// Decay rate per period of distance.
    R0,
    /// Multiplies every sequence's cluster count.
    ClusterMultiplier,
    /// Multiplies every cluster-period size.
    CpSizeMultiplier,
}

impl SweepParam {
    /// The token used in scenario files, CSV output, and `--param`.
    pub fn token(self) -> &'static str {
        match self {
            SweepParam::Delta => "delta",
            SweepParam::Alpha0 => "alpha0",
            SweepParam::Alpha1 => "alpha1",
            SweepParam::Alpha2 => "alpha2",
            SweepParam::Alpha3 => "alpha3",
            SweepParam::R0 => "r0",
            SweepParam::ClusterMultiplier => "cluster_multiplier",
            SweepParam::CpSizeMultiplier => "cp_size_multiplier",
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// One grid value and what became of it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    /// The evaluation, or the reason this point could not be evaluated.
    pub outcome: Result<PowerResult, String>,
}

fn positive_integer(param: SweepParam, value: f64) -> Result<u32, String> {
    if value.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&value) {
        return Err(format!("{param} must be a positive integer, got {value}"));
    }
    Ok(value as u32)
}

/// Returns a copy of `base` with one parameter replaced.
///
/// Setting a correlation parameter the structure does not read would
/// silently produce a flat line, so that combination is an error here.
pub fn apply(base: &TrialSpec, param: SweepParam, value: f64) -> Result<TrialSpec, String> {
    let mut spec = base.clone();
    let kind = spec.correlation.kind;
    let unused = |name: &str| Err(format!("{name} is not a parameter of the {kind} structure"));
    match param {
        SweepParam::Delta => spec.delta = value,
        SweepParam::Alpha0 => match kind {
            CorrelationKind::ExponentialDecay | CorrelationKind::ProportionalDecay => {
                spec.correlation.alpha0 = Some(value);
            }
            _ => return unused("alpha0"),
        },
        SweepParam::Alpha1 => match kind {
            CorrelationKind::NestedExchangeable | CorrelationKind::BlockExchangeable => {
                spec.correlation.alpha1 = Some(value);
            }
            _ => return unused("alpha1"),
        },
        SweepParam::Alpha2 => match kind {
            CorrelationKind::NestedExchangeable | CorrelationKind::BlockExchangeable => {
                spec.correlation.alpha2 = Some(value);
            }
            _ => return unused("alpha2"),
        },
        SweepParam::Alpha3 => match kind {
            CorrelationKind::BlockExchangeable => spec.correlation.alpha3 = Some(value),
            _ => return unused("alpha3"),
        },
        SweepParam::R0 => match kind {
            CorrelationKind::ExponentialDecay | CorrelationKind::ProportionalDecay => {
                spec.correlation.r0 = Some(value);
            }
            _ => return unused("r0"),
        },
        SweepParam::ClusterMultiplier => {
            let k = positive_integer(param, value)?;
            for m in &mut spec.clusters_per_sequence {
                *m = m
                    .checked_mul(k)
                    .ok_or_else(|| format!("cluster count overflows at multiplier {value}"))?;
            }
        }
        SweepParam::CpSizeMultiplier => {
            let k = positive_integer(param, value)?;
            for row in &mut spec.cp_sizes {
                for n in row.iter_mut() {
                    *n = n.checked_mul(k).ok_or_else(|| {
                        format!("cluster-period size overflows at multiplier {value}")
                    })?;
                }
            }
        }
    }
    Ok(spec)
}

fn eval_point(
    base: &TrialSpec,
    param: SweepParam,
    value: f64,
    shared: Option<&PreparedDesign>,
) -> SweepPoint {
    let outcome = apply(base, param, value).and_then(|spec| {
        let report = geepower_core::validate(&spec);
        if !report.is_empty() {
            let joined: Vec<String> =
                report.violations().iter().map(|v| v.to_string()).collect();
            return Err(joined.join("; "));
        }
        match shared {
            Some(prepared) => prepared.evaluate(&spec),
            None => PreparedDesign::new(&spec).and_then(|p| p.evaluate(&spec)),
        }
        .map_err(|e| e.to_string())
    });
    SweepPoint { value, outcome }
}

/// Evaluates the grid on up to `threads` worker threads.
pub fn run_sweep(
    base: &TrialSpec,
    param: SweepParam,
    values: &[f64],
    threads: usize,
) -> Vec<SweepPoint> {
    // Only these sweeps reuse factorizations; if the base itself cannot be
    // prepared the per-point path reports the same failure per value.
    let shared = match param {
        SweepParam::Delta | SweepParam::ClusterMultiplier => PreparedDesign::new(base).ok(),
        _ => None,
    };

    let n = values.len();
    let workers = threads.max(1).min(n.max(1));
    if workers <= 1 {
        return values.iter().map(|&v| eval_point(base, param, v, shared.as_ref())).collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<OnceLock<SweepPoint>> = (0..n).map(|_| OnceLock::new()).collect();
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let point = eval_point(base, param, values[i], shared.as_ref());
                slots[i].set(point).expect("each slot is claimed once");
            });
        }
    });
    slots.into_iter().map(|slot| slot.into_inner().expect("all slots filled")).collect()
}

/// Quotes a CSV field when it carries separators or quotes.
fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// Renders the grid as CSV: full-precision (round-trip exact) power
/// columns, their four-decimal display forms, and an `error` column.
/// Failed points keep their row with the numeric fields empty and the
/// validation message in `error`, so no grid value disappears silently.
pub fn csv(param: SweepParam, points: &[SweepPoint]) -> String {
    let mut out = String::from(
        "param,value,stddel,zpower,tpower,df,totaln,stddel_4dp,zpower_4dp,tpower_4dp,error\n",
    );
    for point in points {
        match &point.outcome {
            Ok(r) => out.push_str(&format!(
                "{param},{},{},{},{},{},{},{},{},{},\n",
                point.value,
                r.stddel,
                r.zpower,
                r.tpower,
                r.df,
                r.totaln,
                fmt4(r.stddel),
                fmt4(r.zpower),
                fmt4(r.tpower),
            )),
            Err(message) => out.push_str(&format!(
                "{param},{},,,,,,,,,{}\n",
                point.value,
                csv_field(message)
            )),
        }
    }
    out
}

/// Renders a quick terminal power curve (t-test power per grid value).
pub fn curve(param: SweepParam, points: &[SweepPoint]) -> String {
    const BAR: usize = 40;
    let width = points.iter().map(|p| format!("{}", p.value).len()).max().unwrap_or(1);
    let mut out = format!("t-test power by {param}:\n");
    for point in points {
        let value = format!("{:>width$}", point.value);
        match &point.outcome {
            Ok(r) => {
                let filled = (r.tpower.clamp(0.0, 1.0) * BAR as f64).round() as usize;
                out.push_str(&format!(
                    "  {value}  {} |{}{}|\n",
                    fmt4(r.tpower),
                    "#".repeat(filled),
                    " ".repeat(BAR - filled),
                ));
            }
            Err(message) => out.push_str(&format!("  {value}  invalid: {message}\n")),
        }
    }
    out
}
