//! The GEE power engine: per-sequence information, model-based covariance,
//! and the Wald test power it implies.
//!
//! For one cluster in sequence `s` the marginal model contributes
//! `D' V^-1 D` with `V = A^(1/2) R A^(1/2)`. Writing `G = A^(-1/2) D`
//! row-wise (each observation's design row scaled by `(d mu / d eta) /
//! sqrt(var)`), the contribution becomes `G' R^-1 G = (L^-1 G)' (L^-1 G)`
//! for the Cholesky factor `L` of `R`. Since `R` does not depend on the
//! regression coefficients, its factorization is computed once per sequence
//! and reused across every evaluation of the same design — the expensive
//! `O(n^3)` step drops out of effect-size sweeps entirely, for every outcome
//! family.

use alloc::format;
use alloc::vec::Vec;

use crate::corr::{build_correlation, CorrelationMatrix};
use crate::design::{build_design, SequenceDesign};
use crate::distributions::{normal_cdf, normal_quantile, t_cdf, t_quantile};
use crate::error::Error;
use crate::linalg::{dot, gram, Cholesky, Mat};
use crate::model::{mean_and_derivative, variance_function, TrialSpec};
use crate::validate::validate;

use libm::{fabs, sqrt};

/// Output of one power evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult {
    /// Model-based variance of the intervention-effect estimate.
    pub var_delta: f64,
    /// Standardized effect `|delta| / sqrt(var_delta)`.
    pub stddel: f64,
    /// Two-sided Wald power under the normal reference.
    pub zpower: f64,
    /// Two-sided Wald power under the t reference with `df` degrees of
    /// freedom.
    pub tpower: f64,
    /// Degrees of freedom used for the t reference.
    pub df: u64,
    /// Total number of observations across all clusters and periods.
    pub totaln: u64,
    /// The coefficient vector `(beta..., delta)` the evaluation used.
    pub theta: Vec<f64>,
}

/// One cluster's information contribution `D' V^-1 D` for a sequence.
///
/// `corr` must be the factored working correlation of exactly this
/// sequence's observed periods and sizes. Mean-range failures surface as
/// [`Error::MeanRange`].
pub fn sequence_information(
    spec: &TrialSpec,
    design: &SequenceDesign,
    corr: &CorrelationMatrix,
) -> Result<Mat, Error> {
    let theta = spec.theta();
    let p = spec.num_params();
    let n = design.cluster_size();
    assert_eq!(
        corr.dim(),
        n,
        "correlation dimension must match the sequence's cluster size"
    );
    let mut g = Mat::zeros(n, p);
    let mut obs = 0;
    for (i, &size) in design.sizes.iter().enumerate() {
        let x = design.x.row(i);
        let eta = dot(x, &theta);
        let (mu, dmu) = mean_and_derivative(eta, spec.outcome.effective_link());
        let var = variance_function(mu, &spec.outcome)?;
        let w = dmu / sqrt(var);
        for _ in 0..size {
            let row = g.row_mut(obs);
            for (dst, &src) in row.iter_mut().zip(x) {
                *dst = w * src;
            }
            obs += 1;
        }
    }
    let y = corr.cholesky().solve_lower(&g);
    Ok(gram(&y))
}

/// A specification's design expanded once: per-sequence regression structure
/// plus factored working correlations.
///
/// Building this is the expensive part of an evaluation. The factors stay
/// valid as long as the design pattern, sizes, effect model, and correlation
/// parameters are unchanged, so repeated [`PreparedDesign::evaluate`] calls
/// with different `delta`, `beta`, `alpha`, cluster counts, or df rule (an
/// effect-size sweep) skip straight to the cheap triangular solves.
#[derive(Debug, Clone)]
pub struct PreparedDesign {
    designs: Vec<SequenceDesign>,
    correlations: Vec<CorrelationMatrix>,
}

impl PreparedDesign {
    /// Expands and factors the design of a specification that already passed
    /// [`validate`].
    pub fn new(spec: &TrialSpec) -> Result<Self, Error> {
        let designs = build_design(spec)?;
        let correlations = designs
            .iter()
            .map(|d| build_correlation(&spec.correlation, &d.profile.periods, &d.sizes))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PreparedDesign { designs, correlations })
    }

    pub fn designs(&self) -> &[SequenceDesign] {
        &self.designs
    }

    pub fn correlations(&self) -> &[CorrelationMatrix] {
        &self.correlations
    }

    /// The total information matrix `sum_s I_s D_s' V_s^-1 D_s`.
    ///
    /// `spec` may differ from the building spec in coefficients, test size,
    /// cluster counts, and df rule — not in design or correlation.
    pub fn information(&self, spec: &TrialSpec) -> Result<Mat, Error> {
        let p = spec.num_params();
        let mut info = Mat::zeros(p, p);
        for (design, corr) in self.designs.iter().zip(&self.correlations) {
            let contribution = sequence_information(spec, design, corr)?;
            // Cluster counts come from `spec`, not the snapshot in `design`,
            // so sweeps over cluster counts can reuse the factors.
            let clusters = spec.clusters_per_sequence[design.profile.sequence - 1];
            info.add_scaled(&contribution, clusters as f64);
        }
        Ok(info)
    }

    /// Model-based covariance of the GEE estimate, `information^-1`.
    pub fn covariance(&self, spec: &TrialSpec) -> Result<Mat, Error> {
        let info = self.information(spec)?;
        let factor = Cholesky::new(&info).map_err(|_| Error::SingularInformation)?;
        Ok(factor.inverse())
    }

    /// Power for the intervention effect of a specification sharing this
    /// design. Does not re-validate; use [`evaluate`] for one-shot use.
    pub fn evaluate(&self, spec: &TrialSpec) -> Result<PowerResult, Error> {
        let df = spec.degrees_of_freedom();
        if df < 1 {
            return Err(Error::Domain(format!(
                "t-based power needs at least 1 degree of freedom; {} clusters against \
                 the {:?} rule leave {df}",
                spec.total_clusters(),
                spec.df_choice,
            )));
        }
        let p = spec.num_params();
        let cov = self.covariance(spec)?;
        let var_delta = cov[(p - 1, p - 1)];
        let (stddel, zpower, tpower) = power(spec.delta, var_delta, spec.alpha, df as u64)?;
        Ok(PowerResult {
            var_delta,
            stddel,
            zpower,
            tpower,
            df: df as u64,
            totaln: spec.total_sample_size(),
            theta: spec.theta(),
        })
    }
}

/// Model-based covariance of a validated specification (one-shot; sweeps
/// should hold a [`PreparedDesign`] instead).
pub fn model_covariance(spec: &TrialSpec) -> Result<Mat, Error> {
    PreparedDesign::new(spec)?.covariance(spec)
}

/// Two-sided Wald power at effect `delta` with estimator variance
/// `var_delta`, test size `alpha`, and `df` degrees of freedom for the t
/// reference.
///
/// Returns `(stddel, zpower, tpower)` where `stddel` is the standardized
/// effect; power is evaluated as the rejection probability in the direction
/// of the effect, `F(crit_{alpha/2} + stddel)`.
pub fn power(delta: f64, var_delta: f64, alpha: f64, df: u64) -> Result<(f64, f64, f64), Error> {
    if !(var_delta > 0.0 && var_delta.is_finite()) {
        return Err(Error::Domain(format!(
            "effect variance must be positive and finite, got {var_delta}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "test size must lie strictly inside (0, 1), got {alpha}"
        )));
    }
    if df < 1 {
        return Err(Error::Domain(format!("degrees of freedom must be at least 1, got {df}")));
    }
    let stddel = fabs(delta) / sqrt(var_delta);
    let zcrit = normal_quantile(alpha / 2.0)?;
    let zpower = normal_cdf(zcrit + stddel);
    let tcrit = t_quantile(alpha / 2.0, df as f64)?;
    let tpower = t_cdf(tcrit + stddel, df as f64);
    Ok((stddel, zpower, tpower))
}

/// Validates a specification and computes the power of its intervention
/// effect test.
///
/// Any violation aborts the evaluation with [`Error::Invalid`] carrying the
/// full report.
pub fn evaluate(spec: &TrialSpec) -> Result<PowerResult, Error> {
    let report = validate(spec);
    if !report.is_empty() {
        return Err(Error::Invalid(report));
    }
    PreparedDesign::new(spec)?.evaluate(spec)
}
