//! Trial specification types and the outcome-family primitives (link
//! functions, variance functions, correlation feasibility bounds).

use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;

use libm::{exp, sqrt};

/// State of one sequence-by-period cell in the design pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    /// Observed under the control condition.
    Control,
    /// Observed under the intervention condition.
    Intervention,
    /// No data collected in this period.
    Unobserved,
}

impl CellState {
    /// Decodes the conventional `0 / 1 / 2` cell coding.
    pub fn from_code(code: u8) -> Option<CellState> {
        match code {
            0 => Some(CellState::Control),
            1 => Some(CellState::Intervention),
            2 => Some(CellState::Unobserved),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            CellState::Control => 0,
            CellState::Intervention => 1,
            CellState::Unobserved => 2,
        }
    }
}

/// Outcome family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    Binary,
    Poisson,
    Normal,
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Binary => "BINARY",
            Distribution::Poisson => "POISSON",
            Distribution::Normal => "NORMAL",
        })
    }
}

/// Link function connecting the linear predictor to the marginal mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Logit,
    Log,
    Identity,
}

impl Link {
    /// The canonical link of each family, used when none is given.
    pub fn canonical(dist: Distribution) -> Link {
        match dist {
            Distribution::Binary => Link::Logit,
            Distribution::Poisson => Link::Log,
            Distribution::Normal => Link::Identity,
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Link::Logit => "LOGIT",
            Link::Log => "LOG",
            Link::Identity => "IDENTITY",
        })
    }
}

/// Outcome family, link, and dispersion, bundled as they always travel
/// together.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    pub distribution: Distribution,
    /// `None` selects the canonical link of the family.
    pub link: Option<Link>,
    /// Dispersion parameter; must be 1 for binary outcomes.
    pub phi: f64,
}

impl OutcomeModel {
    pub fn new(distribution: Distribution, link: Option<Link>, phi: f64) -> Self {
        OutcomeModel { distribution, link, phi }
    }

    /// The link in effect (explicit or canonical).
    pub fn effective_link(&self) -> Link {
        self.link.unwrap_or_else(|| Link::canonical(self.distribution))
    }
}

/// How the intervention effect enters the marginal mean after crossover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectModel {
    /// Full strength from the first intervention period onward (exposure 1).
    Average,
    /// Exposure grows by 1/q per intervention period without bound.
    Incremental,
    /// Exposure grows by 1/q per intervention period and is capped at 1.
    IncrementalCapped,
}

impl fmt::Display for EffectModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffectModel::Average => "AVE",
            EffectModel::Incremental => "INC",
            EffectModel::IncrementalCapped => "INC_EX",
        })
    }
}

/// Shape of the underlying secular trend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodEffect {
    /// One free intercept per calendar period.
    Categorical,
    /// Intercept plus linear drift in the period index.
    Linear,
}

impl fmt::Display for PeriodEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeriodEffect::Categorical => "CAT",
            PeriodEffect::Linear => "LIN",
        })
    }
}

/// Working correlation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKind {
    /// Nested exchangeable: one within-period and one between-period
    /// correlation (cross-sectional sampling).
    NestedExchangeable,
    /// Exponential decay: between-period correlation decays as
    /// `alpha0 * r0^d` in the period distance `d` (cross-sectional).
    ExponentialDecay,
    /// Block exchangeable: closed cohort, adds a within-individual
    /// autocorrelation on top of nested exchangeable.
    BlockExchangeable,
    /// Proportional decay: closed cohort with `r0^d` within individuals and
    /// `alpha0 * r0^d` between individuals.
    ProportionalDecay,
}

impl fmt::Display for CorrelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationKind::NestedExchangeable => "NE",
            CorrelationKind::ExponentialDecay => "ED",
            CorrelationKind::BlockExchangeable => "BE",
            CorrelationKind::ProportionalDecay => "PD",
        })
    }
}

/// Correlation structure with whichever parameters its kind requires.
///
/// Unused parameters are simply `None`; [`crate::validate`] checks presence
/// and ranges against the kind.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSpec {
    pub kind: CorrelationKind,
    /// Within-period correlation for the decay families (ED, PD).
    pub alpha0: Option<f64>,
    /// Within-period correlation for the exchangeable families (NE, BE).
    pub alpha1: Option<f64>,
    /// Between-period, between-individual correlation (NE, BE).
    pub alpha2: Option<f64>,
    /// Between-period, same-individual correlation (BE).
    pub alpha3: Option<f64>,
    /// Decay rate per period of separation (ED, PD).
    pub r0: Option<f64>,
}

impl CorrelationSpec {
    pub fn nested_exchangeable(alpha1: f64, alpha2: f64) -> Self {
        CorrelationSpec {
            kind: CorrelationKind::NestedExchangeable,
            alpha0: None,
            alpha1: Some(alpha1),
            alpha2: Some(alpha2),
            alpha3: None,
            r0: None,
        }
    }

    pub fn exponential_decay(alpha0: f64, r0: f64) -> Self {
        CorrelationSpec {
            kind: CorrelationKind::ExponentialDecay,
            alpha0: Some(alpha0),
            alpha1: None,
            alpha2: None,
            alpha3: None,
            r0: Some(r0),
        }
    }

    pub fn block_exchangeable(alpha1: f64, alpha2: f64, alpha3: f64) -> Self {
        CorrelationSpec {
            kind: CorrelationKind::BlockExchangeable,
            alpha0: None,
            alpha1: Some(alpha1),
            alpha2: Some(alpha2),
            alpha3: Some(alpha3),
            r0: None,
        }
    }

    pub fn proportional_decay(alpha0: f64, r0: f64) -> Self {
        CorrelationSpec {
            kind: CorrelationKind::ProportionalDecay,
            alpha0: Some(alpha0),
            alpha1: None,
            alpha2: None,
            alpha3: None,
            r0: Some(r0),
        }
    }

    /// True for the closed-cohort families, where the same individuals are
    /// measured in every observed period.
    pub fn is_cohort(&self) -> bool {
        matches!(
            self.kind,
            CorrelationKind::BlockExchangeable | CorrelationKind::ProportionalDecay
        )
    }
}

/// Degrees of freedom used for the t-based power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DfChoice {
    /// Clusters minus regression parameters, `I - p`.
    #[default]
    ClustersMinusParams,
    /// Clusters minus two, `I - 2`.
    ClustersMinusTwo,
}

/// Complete description of one power scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    /// `S x J` treatment pattern: one row per sequence, one column per
    /// calendar period.
    pub design_pattern: Vec<Vec<CellState>>,
    /// Cluster-period sizes, aligned with `design_pattern`; a cell is
    /// unobserved exactly when its size is zero.
    pub cp_sizes: Vec<Vec<u32>>,
    /// Number of clusters following each sequence.
    pub clusters_per_sequence: Vec<u32>,
    pub outcome: OutcomeModel,
    pub effect_model: EffectModel,
    pub period_effect: PeriodEffect,
    /// Intervention effect on the linear predictor scale.
    pub delta: f64,
    /// Period-effect coefficients: length `J` under CAT (one intercept per
    /// period), length 2 under LIN (intercept and slope).
    pub beta: Vec<f64>,
    pub correlation: CorrelationSpec,
    /// Number of periods to reach full exposure (`q`), required by the
    /// incremental effect models.
    pub max_intervention_period: Option<usize>,
    /// Two-sided test size.
    pub alpha: f64,
    pub df_choice: DfChoice,
}

impl TrialSpec {
    /// Number of sequences `S`.
    pub fn num_sequences(&self) -> usize {
        self.design_pattern.len()
    }

    /// Number of calendar periods `J` (taken from the first row; rows are
    /// rectangular in a valid spec).
    pub fn num_periods(&self) -> usize {
        self.design_pattern.first().map_or(0, Vec::len)
    }

    /// Number of regression parameters `p` including the intervention
    /// effect.
    pub fn num_params(&self) -> usize {
        match self.period_effect {
            PeriodEffect::Categorical => self.num_periods() + 1,
            PeriodEffect::Linear => 3,
        }
    }

    /// The full coefficient vector `(beta..., delta)` in design-column
    /// order.
    pub fn theta(&self) -> Vec<f64> {
        let mut t = self.beta.clone();
        t.push(self.delta);
        t
    }

    /// Total number of clusters `I`.
    pub fn total_clusters(&self) -> u64 {
        self.clusters_per_sequence.iter().map(|&m| m as u64).sum()
    }

    /// Total number of observations across all clusters and periods.
    pub fn total_sample_size(&self) -> u64 {
        self.cp_sizes
            .iter()
            .zip(&self.clusters_per_sequence)
            .map(|(row, &m)| m as u64 * row.iter().map(|&n| n as u64).sum::<u64>())
            .sum()
    }

    /// Degrees of freedom for the t-based power under the configured rule.
    pub fn degrees_of_freedom(&self) -> i64 {
        let clusters = self.total_clusters() as i64;
        match self.df_choice {
            DfChoice::ClustersMinusParams => clusters - self.num_params() as i64,
            DfChoice::ClustersMinusTwo => clusters - 2,
        }
    }
}

/// Marginal mean and its derivative `d mu / d eta` at a linear predictor
/// value.
pub fn mean_and_derivative(eta: f64, link: Link) -> (f64, f64) {
    match link {
        Link::Logit => {
            // Evaluated via the negative exponential on the positive branch
            // so neither direction overflows.
            let mu = if eta >= 0.0 {
                1.0 / (1.0 + exp(-eta))
            } else {
                let e = exp(eta);
                e / (1.0 + e)
            };
            (mu, mu * (1.0 - mu))
        }
        Link::Log => {
            let mu = exp(eta);
            (mu, mu)
        }
        Link::Identity => (eta, 1.0),
    }
}

/// Variance of one observation: the family variance function scaled by the
/// dispersion where the family carries one.
///
/// Binary outcomes use `mu (1 - mu)` unscaled (their dispersion is fixed at
/// one), count outcomes use `phi * mu`, continuous outcomes use `phi`.
pub fn variance_function(mu: f64, outcome: &OutcomeModel) -> Result<f64, Error> {
    match outcome.distribution {
        Distribution::Binary => {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::MeanRange { mu, requirement: "binary mean in (0, 1)" });
            }
            Ok(mu * (1.0 - mu))
        }
        Distribution::Poisson => {
            if mu.is_nan() || mu <= 0.0 {
                return Err(Error::MeanRange { mu, requirement: "count mean > 0" });
            }
            Ok(outcome.phi * mu)
        }
        Distribution::Normal => Ok(outcome.phi),
    }
}

/// Frechet-Hoeffding feasibility bounds for the correlation of two binary
/// variables with means `mu1` and `mu2`.
///
/// With `psi_j = mu_j / (1 - mu_j)`, the correlation must lie in
/// `[max(-sqrt(psi1 psi2), -1/sqrt(psi1 psi2)),
///   min(sqrt(psi1/psi2), sqrt(psi2/psi1))]`.
pub fn frechet_bounds(mu1: f64, mu2: f64) -> Result<(f64, f64), Error> {
    for mu in [mu1, mu2] {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::MeanRange { mu, requirement: "binary mean in (0, 1)" });
        }
    }
    let psi1 = mu1 / (1.0 - mu1);
    let psi2 = mu2 / (1.0 - mu2);
    // Evaluated in forms that are exactly symmetric in (mu1, mu2).
    let s = sqrt(psi1 * psi2);
    let lower = -s.min(1.0 / s);
    let upper = sqrt(psi1.min(psi2) / psi1.max(psi2));
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logit_mean_is_symmetric_and_bounded() {
        for i in -60..=60 {
            let eta = i as f64 * 0.5;
            let (mu, dmu) = mean_and_derivative(eta, Link::Logit);
            let (mu_neg, _) = mean_and_derivative(-eta, Link::Logit);
            assert!((mu + mu_neg - 1.0).abs() < 1e-12);
            assert!(mu > 0.0 && mu < 1.0);
            assert!((dmu - mu * (1.0 - mu)).abs() < 1e-15);
        }
        // Extreme linear predictors saturate instead of overflowing.
        let (mu, _) = mean_and_derivative(800.0, Link::Logit);
        assert_eq!(mu, 1.0);
        let (mu, _) = mean_and_derivative(-800.0, Link::Logit);
        assert_eq!(mu, 0.0);
    }

    #[test]
    fn variance_functions_follow_the_family() {
        let binary = OutcomeModel::new(Distribution::Binary, None, 1.0);
        assert!((variance_function(0.3, &binary).unwrap() - 0.21).abs() < 1e-15);
        assert!(variance_function(0.0, &binary).is_err());
        assert!(variance_function(1.0, &binary).is_err());

        let poisson = OutcomeModel::new(Distribution::Poisson, None, 1.2);
        assert!((variance_function(2.5, &poisson).unwrap() - 3.0).abs() < 1e-15);
        assert!(variance_function(0.0, &poisson).is_err());

        let normal = OutcomeModel::new(Distribution::Normal, None, 64.0);
        assert_eq!(variance_function(-17.0, &normal).unwrap(), 64.0);
    }

    #[test]
    fn frechet_bounds_are_symmetric_and_contain_zero() {
        let (lo, hi) = frechet_bounds(0.22, 0.5).unwrap();
        let (lo2, hi2) = frechet_bounds(0.5, 0.22).unwrap();
        assert_eq!((lo, hi), (lo2, hi2));
        assert!(lo < 0.0 && hi > 0.0);
        assert!(hi <= 1.0 && lo >= -1.0);
    }

    #[test]
    fn equal_means_allow_perfect_positive_correlation() {
        let (_, hi) = frechet_bounds(0.22, 0.22).unwrap();
        assert!((hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_links_match_families() {
        assert_eq!(Link::canonical(Distribution::Binary), Link::Logit);
        assert_eq!(Link::canonical(Distribution::Poisson), Link::Log);
        assert_eq!(Link::canonical(Distribution::Normal), Link::Identity);
        let m = OutcomeModel::new(Distribution::Binary, Some(Link::Log), 1.0);
        assert_eq!(m.effective_link(), Link::Log);
    }

    #[test]
    fn df_rules() {
        let mut spec = tiny_spec();
        assert_eq!(spec.degrees_of_freedom(), 8 - 4); // CAT: p = J + 1 = 4
        spec.df_choice = DfChoice::ClustersMinusTwo;
        assert_eq!(spec.degrees_of_freedom(), 8 - 2);
    }

    #[test]
    fn totals_count_every_cluster() {
        let spec = tiny_spec();
        assert_eq!(spec.total_clusters(), 8);
        assert_eq!(spec.total_sample_size(), 8 * 30);
    }

    fn tiny_spec() -> TrialSpec {
        use CellState::{Control as C, Intervention as T};
        TrialSpec {
            design_pattern: alloc::vec![
                alloc::vec![C, T, T],
                alloc::vec![C, C, T],
            ],
            cp_sizes: alloc::vec![alloc::vec![10, 10, 10], alloc::vec![10, 10, 10]],
            clusters_per_sequence: alloc::vec![4, 4],
            outcome: OutcomeModel::new(Distribution::Binary, None, 1.0),
            effect_model: EffectModel::Average,
            period_effect: PeriodEffect::Categorical,
            delta: -0.5,
            beta: alloc::vec![0.405, -0.01, -0.01],
            correlation: CorrelationSpec::nested_exchangeable(0.02, 0.01),
            max_intervention_period: None,
            alpha: 0.05,
            df_choice: DfChoice::default(),
        }
    }
}
