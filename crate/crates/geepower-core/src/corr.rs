//! Working correlation structures for one cluster.
//!
//! Observations within a cluster are labeled `(t, k)`: calendar period `t`
//! and individual slot `k` within that period. Under the cross-sectional
//! families (NE, ED) different periods sample different individuals, so only
//! period distance matters. Under the closed-cohort families (BE, PD) slot
//! `k` identifies the same individual in every observed period, adding a
//! same-individual correlation path.
//!
//! Period distance `d = |t - t'|` is measured in calendar periods, so decay
//! continues across unobserved implementation periods.

use alloc::vec::Vec;

use crate::error::Error;
use crate::linalg::{Cholesky, Mat};
use crate::model::{CorrelationKind, CorrelationSpec};

/// `base^d` by repeated squaring; `d` is a small period distance.
fn powi(base: f64, mut d: usize) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    while d > 0 {
        if d & 1 == 1 {
            acc *= b;
        }
        b *= b;
        d >>= 1;
    }
    acc
}

/// Correlation between observations `(t, k)` and `(t2, k2)` of one cluster.
///
/// Missing parameters are read as zero; [`crate::validate`] rejects
/// specifications whose kind needs a parameter that is absent.
pub fn correlation_entry(
    corr: &CorrelationSpec,
    t: usize,
    k: usize,
    t2: usize,
    k2: usize,
) -> f64 {
    if t == t2 && k == k2 {
        return 1.0;
    }
    let d = t.abs_diff(t2);
    let alpha0 = corr.alpha0.unwrap_or(0.0);
    let alpha1 = corr.alpha1.unwrap_or(0.0);
    let alpha2 = corr.alpha2.unwrap_or(0.0);
    let alpha3 = corr.alpha3.unwrap_or(0.0);
    let r0 = corr.r0.unwrap_or(0.0);
    match corr.kind {
        CorrelationKind::NestedExchangeable => {
            if d == 0 {
                alpha1
            } else {
                alpha2
            }
        }
        CorrelationKind::ExponentialDecay => {
            if d == 0 {
                alpha0
            } else {
                alpha0 * powi(r0, d)
            }
        }
        CorrelationKind::BlockExchangeable => {
            if d == 0 {
                alpha1
            } else if k == k2 {
                alpha3
            } else {
                alpha2
            }
        }
        CorrelationKind::ProportionalDecay => {
            if d == 0 {
                alpha0
            } else if k == k2 {
                powi(r0, d)
            } else {
                alpha0 * powi(r0, d)
            }
        }
    }
}

/// Working correlation of one cluster, together with its Cholesky factor.
///
/// Rows and columns follow the expansion order used everywhere in the crate:
/// observed periods ascending, individuals ascending within each period
/// (period-major).
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    entries: Mat,
    factor: Cholesky,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    /// The full symmetric matrix.
    pub fn entries(&self) -> &Mat {
        &self.entries
    }

    /// The lower-triangular Cholesky factor, reusable across every
    /// evaluation that shares this design and correlation.
    pub fn cholesky(&self) -> &Cholesky {
        &self.factor
    }
}

/// Builds and factors the working correlation of one cluster observing the
/// given calendar periods with the given per-period sizes.
///
/// `periods` and `sizes` must be aligned (as in a
/// [`crate::design::SequenceDesign`]). Fails with
/// [`Error::NotPositiveDefinite`] when the parameters do not describe a
/// valid joint correlation at these dimensions.
pub fn build_correlation(
    corr: &CorrelationSpec,
    periods: &[usize],
    sizes: &[u32],
) -> Result<CorrelationMatrix, Error> {
    assert_eq!(periods.len(), sizes.len(), "periods and sizes must be aligned");
    let n: usize = sizes.iter().map(|&v| v as usize).sum();
    let mut labels = Vec::with_capacity(n);
    for (&t, &size) in periods.iter().zip(sizes) {
        for k in 0..size as usize {
            labels.push((t, k));
        }
    }
    let mut entries = Mat::zeros(n, n);
    for i in 0..n {
        let (t, k) = labels[i];
        entries[(i, i)] = 1.0;
        for j in 0..i {
            let (t2, k2) = labels[j];
            let v = correlation_entry(corr, t, k, t2, k2);
            // Mirrored assignment keeps the matrix symmetric bit for bit.
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    let factor = Cholesky::new(&entries)?;
    Ok(CorrelationMatrix { entries, factor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CorrelationSpec;

    #[test]
    fn nested_exchangeable_ignores_individual_labels() {
        let ne = CorrelationSpec::nested_exchangeable(0.03, 0.015);
        assert_eq!(correlation_entry(&ne, 2, 0, 2, 0), 1.0);
        assert_eq!(correlation_entry(&ne, 2, 0, 2, 5), 0.03);
        assert_eq!(correlation_entry(&ne, 2, 3, 7, 3), 0.015);
        assert_eq!(correlation_entry(&ne, 2, 3, 7, 4), 0.015);
    }

    #[test]
    fn exponential_decay_uses_calendar_distance() {
        let ed = CorrelationSpec::exponential_decay(0.03, 0.8);
        assert_eq!(correlation_entry(&ed, 3, 0, 3, 1), 0.03);
        assert!((correlation_entry(&ed, 1, 0, 4, 2) - 0.03 * 0.8f64.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn cohort_kinds_distinguish_same_individual() {
        let be = CorrelationSpec::block_exchangeable(0.1, 0.05, 0.4);
        assert_eq!(correlation_entry(&be, 1, 2, 1, 3), 0.1);
        assert_eq!(correlation_entry(&be, 1, 2, 3, 2), 0.4);
        assert_eq!(correlation_entry(&be, 1, 2, 3, 4), 0.05);

        let pd = CorrelationSpec::proportional_decay(0.1, 0.9);
        assert_eq!(correlation_entry(&pd, 2, 1, 2, 0), 0.1);
        assert!((correlation_entry(&pd, 2, 1, 4, 1) - 0.81).abs() < 1e-15);
        assert!((correlation_entry(&pd, 2, 1, 4, 0) - 0.081).abs() < 1e-15);
    }

    #[test]
    fn entry_is_symmetric_in_its_arguments() {
        let specs = [
            CorrelationSpec::nested_exchangeable(0.2, 0.1),
            CorrelationSpec::exponential_decay(0.2, 0.7),
            CorrelationSpec::block_exchangeable(0.2, 0.1, 0.5),
            CorrelationSpec::proportional_decay(0.2, 0.7),
        ];
        for corr in &specs {
            for (t, k, t2, k2) in [(1, 0, 3, 0), (1, 1, 3, 2), (2, 0, 2, 1), (1, 4, 5, 4)] {
                assert_eq!(
                    correlation_entry(corr, t, k, t2, k2),
                    correlation_entry(corr, t2, k2, t, k),
                    "{corr:?} at ({t},{k})x({t2},{k2})"
                );
            }
        }
    }

    #[test]
    fn built_matrix_is_symmetric_and_unit_diagonal() {
        let pd = CorrelationSpec::proportional_decay(0.05, 0.8);
        let m = build_correlation(&pd, &[1, 3, 4], &[3, 3, 3]).unwrap();
        let e = m.entries();
        assert_eq!(m.dim(), 9);
        for i in 0..9 {
            assert_eq!(e[(i, i)], 1.0);
            for j in 0..9 {
                assert_eq!(e[(i, j)].to_bits(), e[(j, i)].to_bits());
            }
        }
        // Same individual two calendar periods apart (1 -> 3), across the
        // unobserved period 2: r0^2.
        assert!((e[(0, 3)] - 0.64).abs() < 1e-15);
    }

    #[test]
    fn infeasible_parameters_fail_to_factor() {
        // Between-period correlation far above the within-period one is not
        // a valid joint correlation once each period holds two individuals.
        let ne = CorrelationSpec::nested_exchangeable(0.0, 0.9);
        match build_correlation(&ne, &[1, 2], &[2, 2]) {
            Err(Error::NotPositiveDefinite { .. }) => {}
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_decay_rates_are_valid_edge_cases() {
        // r0 = 0: independence across periods.
        let ed = CorrelationSpec::exponential_decay(0.2, 0.0);
        let m = build_correlation(&ed, &[1, 2], &[2, 2]).unwrap();
        assert_eq!(m.entries()[(0, 2)], 0.0);
        assert_eq!(m.entries()[(0, 1)], 0.2);
        // r0 = 1 under ED: no decay, same as NE with alpha1 = alpha2.
        let ed = CorrelationSpec::exponential_decay(0.2, 1.0);
        let m = build_correlation(&ed, &[1, 2, 5], &[2, 2, 2]).unwrap();
        assert_eq!(m.entries()[(0, 5)], 0.2);
    }
}
