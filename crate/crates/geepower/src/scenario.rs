//! Scenario files: the on-disk description of a trial.
//!
//! A scenario is a flat set of keyed values. Two encodings are accepted:
//!
//! * a plain text format, one `key = value` pair per line, with `#`
//!   starting a comment anywhere and matrices written as brace blocks:
//!
//!   ```text
//!   dist = binary          # distribution family
//!   designpattern = {
//!       0 1 1
//!       0 0 0
//!   }
//!   ```
//!
//! * a JSON object with the same keys, where scalars are numbers,
//!   vectors are arrays of numbers and matrices are arrays of arrays.
//!
//! Keys and textual enum values (`dist = Binary`, `corr_type = ne`) are
//! case-insensitive. Vector elements may be separated by whitespace,
//! commas, or both, so rows copied out of other tools parse unchanged.
//!
//! [`Scenario::build`] turns the raw values into a
//! [`TrialSpec`](geepower_core::TrialSpec). Problems with the file text
//! itself are reported as [`ScenarioError::Parse`] with a line number;
//! problems with the *content* (missing keys, values of the wrong shape
//! or range) are reported as [`ScenarioError::Config`] naming the key.

use std::collections::BTreeMap;
use std::fmt;

use geepower_core::{
    CellState, CorrelationKind, CorrelationSpec, DfChoice, Distribution, EffectModel, Link,
    OutcomeModel, PeriodEffect, TrialSpec,
};

/// Why a scenario file could not be turned into a trial specification.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    /// The file text could not be parsed at all.
    Parse {
        /// 1-based line number of the offending input line.
        line: usize,
        message: String,
    },
    /// The file parsed, but a value is missing, malformed, or out of range.
    Config { key: String, message: String },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ScenarioError::Config { key, message } => write!(f, "{key}: {message}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

fn config_err(key: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Config { key: key.to_string(), message: message.into() }
}

/// One raw value from a scenario file, before interpretation.
#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(f64),
    Text(String),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

impl Value {
    fn shape_name(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "a number",
            Value::Text(_) => "a word",
            Value::Vector(_) => "a vector",
            Value::Matrix(_) => "a matrix",
        }
    }
}

/// A parsed scenario: raw keyed values, not yet checked for meaning.
#[derive(Debug, Clone)]
pub struct Scenario {
    values: BTreeMap<String, Value>,
}

/// Splits a row of numbers on whitespace and commas; empty tokens (from
/// trailing commas and the like) are skipped.
fn parse_row(text: &str, line: usize) -> Result<Vec<f64>, ScenarioError> {
    let mut row = Vec::new();
    for token in text.split(|c: char| c.is_whitespace() || c == ',') {
        if token.is_empty() {
            continue;
        }
        let value = token.parse::<f64>().map_err(|_| ScenarioError::Parse {
            line,
            message: format!("expected a number, found `{token}`"),
        })?;
        row.push(value);
    }
    Ok(row)
}

/// Parses the right-hand side of a `key = value` line: a single word, a
/// single number, or a row of numbers.
fn parse_value(text: &str, line: usize) -> Result<Value, ScenarioError> {
    let tokens: Vec<&str> = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect();
    match tokens.as_slice() {
        [] => Err(ScenarioError::Parse { line, message: "missing value after `=`".into() }),
        [one] => match one.parse::<f64>() {
            Ok(v) => Ok(Value::Scalar(v)),
            Err(_) => Ok(Value::Text(one.to_string())),
        },
        many => {
            let row = many
                .iter()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| ScenarioError::Parse {
                        line,
                        message: format!("expected a number, found `{t}`"),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            Ok(Value::Vector(row))
        }
    }
}

impl Scenario {
    /// Parses the plain text scenario format.
    pub fn from_text(src: &str) -> Result<Self, ScenarioError> {
        let mut values = BTreeMap::new();
        // While inside a `key = { ... }` block this holds the key, the
        // line the block started on, and the rows collected so far.
        let mut block: Option<(String, usize, Vec<Vec<f64>>)> = None;

        for (index, raw) in src.lines().enumerate() {
            let line = index + 1;
            let text = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let text = text.trim();
            if text.is_empty() {
                continue;
            }

            if let Some((key, start, mut rows)) = block.take() {
                if text == "}" {
                    if rows.is_empty() {
                        return Err(ScenarioError::Parse {
                            line,
                            message: format!("matrix `{key}` has no rows"),
                        });
                    }
                    values.insert(key, Value::Matrix(rows));
                } else {
                    let row = parse_row(text, line).map_err(|e| match e {
                        ScenarioError::Parse { line, message } => ScenarioError::Parse {
                            line,
                            message: format!("in row {} of `{key}`: {message}", rows.len() + 1),
                        },
                        other => other,
                    })?;
                    if !row.is_empty() {
                        rows.push(row);
                    }
                    block = Some((key, start, rows));
                }
                continue;
            }

            let Some((lhs, rhs)) = text.split_once('=') else {
                return Err(ScenarioError::Parse {
                    line,
                    message: format!("expected `key = value`, found `{text}`"),
                });
            };
            let key = lhs.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(ScenarioError::Parse { line, message: "missing key before `=`".into() });
            }
            if values.contains_key(&key) {
                return Err(ScenarioError::Parse {
                    line,
                    message: format!("key `{key}` appears more than once"),
                });
            }
            let rhs = rhs.trim();
            if rhs == "{" {
                block = Some((key, line, Vec::new()));
            } else {
                values.insert(key, parse_value(rhs, line)?);
            }
        }

        if let Some((key, start, _)) = block {
            return Err(ScenarioError::Parse {
                line: start,
                message: format!("matrix `{key}` is never closed with `}}`"),
            });
        }
        Ok(Scenario { values })
    }

    /// Parses the JSON scenario encoding.
    pub fn from_json(src: &str) -> Result<Self, ScenarioError> {
        let root: serde_json::Value =
            serde_json::from_str(src).map_err(|e| ScenarioError::Parse {
                line: e.line(),
                message: e.to_string(),
            })?;
        let serde_json::Value::Object(entries) = root else {
            return Err(ScenarioError::Parse {
                line: 1,
                message: "top level of a JSON scenario must be an object".into(),
            });
        };

        let mut values = BTreeMap::new();
        for (name, entry) in entries {
            let key = name.to_ascii_lowercase();
            if values.contains_key(&key) {
                return Err(config_err(&key, "key appears more than once"));
            }
            let value = json_value(&key, entry)?;
            values.insert(key, value);
        }
        Ok(Scenario { values })
    }

    /// Reads either encoding, chosen by the caller.
    pub fn from_str(src: &str, json: bool) -> Result<Self, ScenarioError> {
        if json {
            Self::from_json(src)
        } else {
            Self::from_text(src)
        }
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.values.remove(key)
    }

    fn take_text(&mut self, key: &str) -> Result<Option<String>, ScenarioError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Text(word)) => Ok(Some(word.to_ascii_lowercase())),
            Some(other) => {
                Err(config_err(key, format!("expected a word, found {}", other.shape_name())))
            }
        }
    }

    fn take_scalar(&mut self, key: &str) -> Result<Option<f64>, ScenarioError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Scalar(v)) => Ok(Some(v)),
            Some(other) => {
                Err(config_err(key, format!("expected a number, found {}", other.shape_name())))
            }
        }
    }

    /// Consumes the raw values and assembles a [`TrialSpec`].
    ///
    /// Everything checked here is about the *file*: required keys,
    /// shapes, and values that have no possible meaning (a cell that is
    /// not 0/1/2, a negative cluster count). Statistical coherence is
    /// left to [`geepower_core::validate`], which sees the finished
    /// specification.
    pub fn build(mut self) -> Result<TrialSpec, ScenarioError> {
        let design_pattern = self.design_pattern()?;
        let sequences = design_pattern.len();
        let cp_sizes = self.cp_sizes(&design_pattern)?;
        let clusters_per_sequence = self.cluster_counts(sequences)?;

        let distribution = self.distribution()?;
        let link = self.link()?;
        let phi = self.required_scalar("phi")?;
        let outcome = OutcomeModel::new(distribution, link, phi);

        let effect_model = self.effect_model()?;
        let period_effect = self.period_effect()?;
        let delta = self.required_scalar("delta")?;
        let beta = self.beta()?;
        let correlation = self.correlation()?;
        let max_intervention_period = self.max_intervention_period()?;

        let alpha = self.take_scalar("alpha")?.unwrap_or(0.05);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(config_err("alpha", format!("test size must be in (0, 1), got {alpha}")));
        }
        let df_choice = self.df_choice()?;

        if let Some(key) = self.values.keys().next() {
            return Err(config_err(key, "unknown key"));
        }

        Ok(TrialSpec {
            design_pattern,
            cp_sizes,
            clusters_per_sequence,
            outcome,
            effect_model,
            period_effect,
            delta,
            beta,
            correlation,
            max_intervention_period,
            alpha,
            df_choice,
        })
    }

    fn design_pattern(&mut self) -> Result<Vec<Vec<CellState>>, ScenarioError> {
        const KEY: &str = "designpattern";
        let rows = match self.take(KEY) {
            None => return Err(config_err(KEY, "required key is missing")),
            Some(Value::Matrix(rows)) => rows,
            // A single row without braces arrives as a vector.
            Some(Value::Vector(row)) => vec![row],
            Some(other) => {
                return Err(config_err(
                    KEY,
                    format!("expected a matrix, found {}", other.shape_name()),
                ));
            }
        };
        let mut pattern = Vec::with_capacity(rows.len());
        for (s, row) in rows.iter().enumerate() {
            let mut states = Vec::with_capacity(row.len());
            for (j, &cell) in row.iter().enumerate() {
                let state = match cell {
                    0.0 => CellState::Control,
                    1.0 => CellState::Intervention,
                    2.0 => CellState::Unobserved,
                    other => {
                        return Err(config_err(
                            KEY,
                            format!(
                                "cell ({}, {}) must be 0, 1, or 2, got {other}",
                                s + 1,
                                j + 1
                            ),
                        ));
                    }
                };
                states.push(state);
            }
            pattern.push(states);
        }
        Ok(pattern)
    }

    fn cp_sizes(
        &mut self,
        design_pattern: &[Vec<CellState>],
    ) -> Result<Vec<Vec<u32>>, ScenarioError> {
        const KEY: &str = "cp_size_matrix";
        let rows = match self.take(KEY) {
            None => return Err(config_err(KEY, "required key is missing")),
            // A scalar broadcasts to every observed cell; unobserved cells
            // collect no data, so they get 0, as the validator requires.
            Some(Value::Scalar(v)) => design_pattern
                .iter()
                .map(|states| {
                    states
                        .iter()
                        .map(|&s| if s == CellState::Unobserved { 0.0 } else { v })
                        .collect()
                })
                .collect(),
            Some(Value::Vector(row)) => vec![row],
            Some(Value::Matrix(rows)) => rows,
            Some(other) => {
                return Err(config_err(
                    KEY,
                    format!("expected a matrix, found {}", other.shape_name()),
                ));
            }
        };
        let mut sizes = Vec::with_capacity(rows.len());
        for (s, row) in rows.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (j, &cell) in row.iter().enumerate() {
                out.push(counting_number(KEY, cell, || {
                    format!("cell ({}, {})", s + 1, j + 1)
                })?);
            }
            sizes.push(out);
        }
        Ok(sizes)
    }

    fn cluster_counts(&mut self, sequences: usize) -> Result<Vec<u32>, ScenarioError> {
        const KEY: &str = "m";
        let row = match self.take(KEY) {
            None => return Err(config_err(KEY, "required key is missing")),
            // A scalar gives every sequence the same number of clusters.
            Some(Value::Scalar(v)) => vec![v; sequences],
            Some(Value::Vector(row)) => row,
            Some(other) => {
                return Err(config_err(
                    KEY,
                    format!("expected a vector, found {}", other.shape_name()),
                ));
            }
        };
        row.iter()
            .enumerate()
            .map(|(s, &v)| counting_number(KEY, v, || format!("entry {}", s + 1)))
            .collect()
    }

    fn distribution(&mut self) -> Result<Distribution, ScenarioError> {
        const KEY: &str = "dist";
        let Some(word) = self.take_text(KEY)? else {
            return Err(config_err(KEY, "required key is missing"));
        };
        match word.as_str() {
            "binary" => Ok(Distribution::Binary),
            "poisson" => Ok(Distribution::Poisson),
            "normal" => Ok(Distribution::Normal),
            other => Err(config_err(
                KEY,
                format!("expected binary, poisson, or normal, got `{other}`"),
            )),
        }
    }

    fn link(&mut self) -> Result<Option<Link>, ScenarioError> {
        const KEY: &str = "link";
        match self.take_text(KEY)? {
            None => Ok(None),
            Some(word) => match word.as_str() {
                "logit" => Ok(Some(Link::Logit)),
                "log" => Ok(Some(Link::Log)),
                "identity" => Ok(Some(Link::Identity)),
                other => Err(config_err(
                    KEY,
                    format!("expected logit, log, or identity, got `{other}`"),
                )),
            },
        }
    }

    fn effect_model(&mut self) -> Result<EffectModel, ScenarioError> {
        const KEY: &str = "intervention_effect_type";
        let Some(word) = self.take_text(KEY)? else {
            return Err(config_err(KEY, "required key is missing"));
        };
        match word.as_str() {
            "ave" => Ok(EffectModel::Average),
            "inc" => Ok(EffectModel::Incremental),
            "inc_ex" => Ok(EffectModel::IncrementalCapped),
            other => Err(config_err(KEY, format!("expected AVE, INC, or INC_EX, got `{other}`"))),
        }
    }

    fn period_effect(&mut self) -> Result<PeriodEffect, ScenarioError> {
        const KEY: &str = "period_effect_type";
        let Some(word) = self.take_text(KEY)? else {
            return Err(config_err(KEY, "required key is missing"));
        };
        match word.as_str() {
            "cat" => Ok(PeriodEffect::Categorical),
            "lin" => Ok(PeriodEffect::Linear),
            other => Err(config_err(KEY, format!("expected CAT or LIN, got `{other}`"))),
        }
    }

    fn beta(&mut self) -> Result<Vec<f64>, ScenarioError> {
        const KEY: &str = "beta_period_effects";
        match self.take(KEY) {
            None => Err(config_err(KEY, "required key is missing")),
            Some(Value::Scalar(v)) => Ok(vec![v]),
            Some(Value::Vector(row)) => Ok(row),
            Some(other) => {
                Err(config_err(KEY, format!("expected a vector, found {}", other.shape_name())))
            }
        }
    }

    fn correlation(&mut self) -> Result<CorrelationSpec, ScenarioError> {
        const KEY: &str = "corr_type";
        let Some(word) = self.take_text(KEY)? else {
            return Err(config_err(KEY, "required key is missing"));
        };
        let kind = match word.as_str() {
            "ne" => CorrelationKind::NestedExchangeable,
            "ed" => CorrelationKind::ExponentialDecay,
            "be" => CorrelationKind::BlockExchangeable,
            "pd" => CorrelationKind::ProportionalDecay,
            other => {
                return Err(config_err(
                    KEY,
                    format!("expected NE, ED, BE, or PD, got `{other}`"),
                ));
            }
        };
        // Every correlation key is consumed here no matter the kind, but
        // the keys the chosen structure relies on become required: a file
        // that names a structure without its parameters is incomplete, not
        // merely infeasible. Ranges stay the validator's call so the
        // report can list all out-of-range values at once.
        let corr = CorrelationSpec {
            kind,
            alpha0: self.take_scalar("alpha0")?,
            alpha1: self.take_scalar("alpha1")?,
            alpha2: self.take_scalar("alpha2")?,
            alpha3: self.take_scalar("alpha3")?,
            r0: self.take_scalar("r0")?,
        };
        let demanded: &[(&str, Option<f64>)] = match kind {
            CorrelationKind::NestedExchangeable => {
                &[("alpha1", corr.alpha1), ("alpha2", corr.alpha2)]
            }
            CorrelationKind::BlockExchangeable => {
                &[("alpha1", corr.alpha1), ("alpha2", corr.alpha2), ("alpha3", corr.alpha3)]
            }
            CorrelationKind::ExponentialDecay | CorrelationKind::ProportionalDecay => {
                &[("alpha0", corr.alpha0), ("r0", corr.r0)]
            }
        };
        for (name, value) in demanded {
            if value.is_none() {
                return Err(config_err(
                    name,
                    format!("required key is missing ({} needs it)", word.to_uppercase()),
                ));
            }
        }
        Ok(corr)
    }

    fn max_intervention_period(&mut self) -> Result<Option<usize>, ScenarioError> {
        const KEY: &str = "max_intervention_period";
        match self.take_scalar(KEY)? {
            None => Ok(None),
            Some(v) => {
                if v.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&v) {
                    return Err(config_err(KEY, format!("must be a positive integer, got {v}")));
                }
                Ok(Some(v as usize))
            }
        }
    }

    fn df_choice(&mut self) -> Result<DfChoice, ScenarioError> {
        const KEY: &str = "df_choice";
        match self.take_scalar(KEY)? {
            None | Some(1.0) => Ok(DfChoice::ClustersMinusParams),
            Some(2.0) => Ok(DfChoice::ClustersMinusTwo),
            Some(v) => Err(config_err(KEY, format!("must be 1 or 2, got {v}"))),
        }
    }

    fn required_scalar(&mut self, key: &str) -> Result<f64, ScenarioError> {
        self.take_scalar(key)?.ok_or_else(|| config_err(key, "required key is missing"))
    }
}

/// Checks that a value meant to count things is a non-negative integer
/// small enough for `u32`.
fn counting_number(
    key: &str,
    value: f64,
    place: impl Fn() -> String,
) -> Result<u32, ScenarioError> {
    if value.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&value) {
        return Err(config_err(
            key,
            format!("{} must be a non-negative integer, got {value}", place()),
        ));
    }
    Ok(value as u32)
}

fn json_value(key: &str, entry: serde_json::Value) -> Result<Value, ScenarioError> {
    use serde_json::Value as Json;
    let number = |v: &Json| -> Option<f64> { v.as_f64() };
    match entry {
        Json::Number(ref n) => n
            .as_f64()
            .map(Value::Scalar)
            .ok_or_else(|| config_err(key, "number does not fit in an f64")),
        Json::String(word) => Ok(Value::Text(word)),
        Json::Array(items) => {
            if items.is_empty() {
                return Err(config_err(key, "array must not be empty"));
            }
            if items.iter().all(|v| v.is_number()) {
                let row = items.iter().filter_map(number).collect();
                return Ok(Value::Vector(row));
            }
            if items.iter().all(|v| v.is_array()) {
                let mut rows = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    let cells = item.as_array().expect("checked above");
                    if cells.is_empty() {
                        return Err(config_err(key, format!("row {} must not be empty", i + 1)));
                    }
                    if !cells.iter().all(|v| v.is_number()) {
                        return Err(config_err(
                            key,
                            format!("row {} must contain only numbers", i + 1),
                        ));
                    }
                    rows.push(cells.iter().filter_map(number).collect());
                }
                return Ok(Value::Matrix(rows));
            }
            Err(config_err(key, "array must hold numbers or rows of numbers"))
        }
        other => Err(config_err(
            key,
            format!("unsupported JSON value `{other}`; use numbers, strings, or arrays"),
        )),
    }
}
