//! Text rendering for evaluation results.
//!
//! [`run_report`] produces the classic one-block power table:
//!
//! ```text
//! The fast GEE power of binary outcomes with nested exchangeable correlation structure and (alpha1,alpha2):(0.02, 0.01) under average intervention effects model and delta = -0.357
//!
//!  T  S  clusters  df  theta   totaln  Dist    Link   stddel  zpower  tpower
//!  3  2        40  36  0.405     3600  BINARY  LOGIT  3.2624  0.9036  0.8875
//!                      -0.01
//!                      -0.357
//! ```
//!
//! The coefficient vector is stacked vertically under `theta`, powers are
//! rounded half away from zero to four decimals, and everything else is
//! printed exactly (shortest round-trip formatting), so a table diff means
//! a real numeric difference.
//!
//! [`explain_report`] is the debugging view: how each sequence was read,
//! the exposures it produces, and the full-precision covariance of the
//! coefficient estimates.

use geepower_core::linalg::Mat;
use geepower_core::{
    CellState, CorrelationKind, CorrelationSpec, Distribution, EffectModel, Link, PowerResult,
    PreparedDesign, TrialSpec,
};

/// Rounds to four decimals with ties away from zero, the usual
/// fixed-decimal convention of statistical report writers.
pub fn round4(x: f64) -> f64 {
    let scaled = (x.abs() * 1e4 + 0.5).floor() / 1e4;
    if x < 0.0 {
        -scaled
    } else {
        scaled
    }
}

/// Formats with exactly four decimals after [`round4`].
pub fn fmt4(x: f64) -> String {
    format!("{:.4}", round4(x))
}

fn distribution_noun(d: Distribution) -> &'static str {
    match d {
        Distribution::Binary => "binary",
        Distribution::Poisson => "poisson",
        Distribution::Normal => "normal",
    }
}

fn structure_noun(kind: CorrelationKind) -> &'static str {
    match kind {
        CorrelationKind::NestedExchangeable => "nested exchangeable",
        CorrelationKind::ExponentialDecay => "exponential decay",
        CorrelationKind::BlockExchangeable => "block exchangeable",
        CorrelationKind::ProportionalDecay => "proportional decay",
    }
}

fn effect_noun(effect: EffectModel) -> &'static str {
    match effect {
        EffectModel::Average => "average",
        EffectModel::Incremental => "incremental",
        EffectModel::IncrementalCapped => "extended incremental",
    }
}

fn link_name(link: Link) -> &'static str {
    match link {
        Link::Logit => "LOGIT",
        Link::Log => "LOG",
        Link::Identity => "IDENTITY",
    }
}

/// The correlation parameters that belong to a structure, in display order.
fn correlation_params(corr: &CorrelationSpec) -> Vec<(&'static str, f64)> {
    let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
    match corr.kind {
        CorrelationKind::NestedExchangeable => {
            vec![("alpha1", v(corr.alpha1)), ("alpha2", v(corr.alpha2))]
        }
        CorrelationKind::ExponentialDecay => {
            vec![("alpha0", v(corr.alpha0)), ("r0", v(corr.r0))]
        }
        CorrelationKind::BlockExchangeable => vec![
            ("alpha1", v(corr.alpha1)),
            ("alpha2", v(corr.alpha2)),
            ("alpha3", v(corr.alpha3)),
        ],
        CorrelationKind::ProportionalDecay => {
            vec![("alpha0", v(corr.alpha0)), ("r0", v(corr.r0))]
        }
    }
}

/// The one-sentence run header naming every model choice.
fn header_sentence(spec: &TrialSpec) -> String {
    let params = correlation_params(&spec.correlation);
    let names: Vec<&str> = params.iter().map(|(n, _)| *n).collect();
    let values: Vec<String> = params.iter().map(|(_, v)| format!("{v}")).collect();
    format!(
        "The fast GEE power of {} outcomes with {} correlation structure and ({}):({}) \
         under {} intervention effects model and delta = {}",
        distribution_noun(spec.outcome.distribution),
        structure_noun(spec.correlation.kind),
        names.join(","),
        values.join(", "),
        effect_noun(spec.effect_model),
        spec.delta,
    )
}

/// Lays out rows under headers, right-aligning all-numeric columns and
/// padding with two spaces between columns.
fn render_table(headers: &[&str], rows: &[Vec<String>], left_align: &[usize]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (width, cell) in widths.iter_mut().zip(row) {
            *width = (*width).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut emit = |cells: &[String]| {
        let mut line = String::new();
        for (c, &width) in widths.iter().enumerate().take(cols) {
            if c > 0 {
                line.push_str("  ");
            }
            let cell = cells.get(c).map(String::as_str).unwrap_or("");
            if left_align.contains(&c) {
                line.push_str(&format!("{cell:<width$}"));
            } else {
                line.push_str(&format!("{cell:>width$}"));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    emit(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    for row in rows {
        emit(row);
    }
    out
}

/// Renders the power table for one evaluated scenario.
pub fn run_report(spec: &TrialSpec, result: &PowerResult) -> String {
    let headers = [
        "T", "S", "clusters", "df", "theta", "totaln", "Dist", "Link", "stddel", "zpower",
        "tpower",
    ];
    let mut rows = Vec::new();
    let theta: Vec<String> = result.theta.iter().map(|v| format!("{v}")).collect();
    rows.push(vec![
        spec.num_periods().to_string(),
        spec.num_sequences().to_string(),
        spec.total_clusters().to_string(),
        result.df.to_string(),
        theta.first().cloned().unwrap_or_default(),
        result.totaln.to_string(),
        spec.outcome.distribution.to_string(),
        link_name(spec.outcome.effective_link()).to_string(),
        fmt4(result.stddel),
        fmt4(result.zpower),
        fmt4(result.tpower),
    ]);
    // Remaining coefficients stack vertically under the theta column.
    for value in theta.iter().skip(1) {
        let mut row = vec![String::new(); headers.len()];
        row[4] = value.clone();
        rows.push(row);
    }

    // Dist and Link are the only truly textual columns.
    let table = render_table(&headers, &rows, &[6, 7]);
    format!("{}\n\n{}", header_sentence(spec), table)
}

fn state_noun(state: CellState) -> &'static str {
    match state {
        CellState::Control => "control",
        CellState::Intervention => "intervention",
        CellState::Unobserved => "unobserved",
    }
}

/// Renders a matrix at full precision, one row per line, for debugging.
fn render_matrix(m: &Mat, indent: &str) -> String {
    let mut widths = vec![0usize; m.cols()];
    let cells: Vec<Vec<String>> = (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .zip(&mut widths)
                .map(|(&v, width)| {
                    let text = format!("{v}");
                    *width = (*width).max(text.len());
                    text
                })
                .collect()
        })
        .collect();
    let mut out = String::new();
    for row in &cells {
        out.push_str(indent);
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                out.push_str("  ");
            }
            out.push_str(&format!("{cell:>width$}", width = widths[j]));
        }
        out.push('\n');
    }
    out
}

/// Renders the expanded view of a valid scenario: per-sequence timing,
/// exposures, and the model-based covariance of the coefficient estimates.
pub fn explain_report(
    spec: &TrialSpec,
    prepared: &PreparedDesign,
    covariance: &Mat,
    result: &PowerResult,
) -> String {
    let mut out = String::new();
    let p = spec.num_params();
    out.push_str(&format!(
        "{} sequences over {} periods; {} with {} link; {} effect on a {} period scale\n",
        spec.num_sequences(),
        spec.num_periods(),
        spec.outcome.distribution,
        link_name(spec.outcome.effective_link()),
        spec.effect_model,
        spec.period_effect,
    ));
    out.push_str(&format!(
        "{} model parameters; theta = ({})\n",
        p,
        result.theta.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(", "),
    ));
    if let Some(q) = spec.max_intervention_period {
        out.push_str(&format!("exposure ramp length q = {q}\n"));
    }
    out.push('\n');

    for (design, corr) in prepared.designs().iter().zip(prepared.correlations()) {
        let profile = &design.profile;
        out.push_str(&format!(
            "sequence {} ({} clusters, {} observations per cluster)\n",
            profile.sequence,
            design.clusters,
            design.cluster_size(),
        ));
        let span =
            |name: &str, s: Option<(usize, usize)>| s.map(|(a, b)| format!("{name} {a}..{b}"));
        let mut notes: Vec<String> = [
            span("control", profile.control_span),
            span("intervention", profile.intervention_span),
        ]
        .into_iter()
        .flatten()
        .collect();
        if let (Some((b0, b1)), Some((q0, q1))) =
            (profile.control_span, profile.intervention_span)
        {
            notes.push(format!("(b0,b1,q0,q1,c) = ({b0},{b1},{q0},{q1},{})", profile.gap));
        }
        if profile.gap > 0 {
            notes.push(format!("{} unobserved periods between spans", profile.gap));
        }
        if !profile.monotone {
            notes.push("non-monotone (treatment switches off)".into());
        }
        out.push_str(&format!("  periods: {}\n", notes.join(", ")));

        let headers = ["period", "state", "size", "exposure"];
        let rows: Vec<Vec<String>> = profile
            .periods
            .iter()
            .zip(&profile.states)
            .zip(&design.sizes)
            .zip(&design.exposures)
            .map(|(((t, &state), n), u)| {
                vec![t.to_string(), state_noun(state).into(), n.to_string(), format!("{u}")]
            })
            .collect();
        for line in render_table(&headers, &rows, &[1]).lines() {
            out.push_str("  ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&format!("  working correlation is {} x {}\n\n", corr.dim(), corr.dim()));
    }

    out.push_str("model-based covariance of theta-hat:\n");
    out.push_str(&render_matrix(covariance, "  "));
    out.push_str(&format!(
        "\nvar(delta-hat) = {}\nstddel = {}  zpower = {}  tpower = {}  (df = {})\n",
        result.var_delta, result.stddel, result.zpower, result.tpower, result.df,
    ));
    out
}
