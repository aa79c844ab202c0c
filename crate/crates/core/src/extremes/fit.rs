use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fields::{FieldKind, FieldSpec, ScaleWindow};
use crate::green::default_killing;

use super::maxima::{max_stats, Restriction};

/// `2 sqrt(2/π) log 2`.
pub const GFF_C1: f64 = 1.106_102_867_465_632_8;
/// `(3/4) sqrt(2/π)`.
pub const GFF_C2: f64 = 0.598_413_420_602_149_1;
/// `2 sqrt(log 2)`.
pub const BRW_C1: f64 = 1.665_109_222_315_395_5;
/// `3 / (4 sqrt(log 2))`.
pub const BRW_C2: f64 = 0.900_841_806_589_837_4;

/// Least-squares fit of `E max ≈ c1 n - c2 log n + c0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub ns: Vec<u32>,
    pub means: Vec<f64>,
    pub ses: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub c0: f64,
    pub residuals: Vec<f64>,
    /// 95% half-widths of `c1`, `c2` from propagating the Monte Carlo errors.
    pub c1_half_width: f64,
    pub c2_half_width: f64,
}

/// Fits the regressors `(n, log n, 1)` to the given means.
pub fn fit_from_means(ns: &[u32], means: &[f64], ses: &[f64]) -> Result<FitResult> {
    if ns.len() != means.len() || ns.len() != ses.len() {
        return Err(Error::IndexMismatch {
            left: ns.len(),
            right: means.len(),
        });
    }
    if ns.len() < 4 {
        return Err(Error::DegenerateDesign(format!(
            "need at least 4 values of n, got {}",
            ns.len()
        )));
    }
    if ns.contains(&0) {
        return Err(invalid("n must be positive for the log n regressor"));
    }
    let k = ns.len();
    let x = DMatrix::from_fn(k, 3, |i, j| {
        let n = ns[i] as f64;
        match j {
            0 => n,
            1 => n.ln(),
            _ => 1.0,
        }
    });
    let xtx = x.transpose() * &x;
    let svd = xtx.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin.is_nan() || smin <= smax * 1e-12 {
        return Err(Error::DegenerateDesign(format!(
            "design matrix is rank deficient for n = {ns:?}"
        )));
    }
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::DegenerateDesign("singular normal equations".into()))?;
    let y = DVector::from_column_slice(means);
    let beta = x.clone().svd(true, true).solve(&y, 1e-14).map_err(|e| Error::DegenerateDesign(e.to_string()))?;
    let fitted = &x * &beta;
    let residuals = (0..k).map(|i| means[i] - fitted[i]).collect();
    let w = DMatrix::from_diagonal(&DVector::from_iterator(k, ses.iter().map(|s| s * s)));
    let cov = &inv * x.transpose() * w * &x * &inv;
    Ok(FitResult {
        ns: ns.to_vec(),
        means: means.to_vec(),
        ses: ses.to_vec(),
        c1: beta[0],
        c2: -beta[1],
        c0: beta[2],
        residuals,
        c1_half_width: 1.96 * cov[(0, 0)].max(0.0).sqrt(),
        c2_half_width: 1.96 * cov[(1, 1)].max(0.0).sqrt(),
    })
}

/// Field spec with `N = 2^n` for a kind; MBRW uses the full window and TGFF
/// the default killing.
pub(crate) fn spec_for(kind: FieldKind, n: u32) -> FieldSpec {
    let side = 1usize << n;
    match kind {
        FieldKind::Gff => FieldSpec::Gff { side },
        FieldKind::Tgff => FieldSpec::Tgff {
            side,
            killing: default_killing(side),
        },
        FieldKind::Brw => FieldSpec::Brw { n },
        FieldKind::Mbrw => FieldSpec::Mbrw {
            n,
            window: ScaleWindow::full(n),
        },
    }
}

/// Monte Carlo `E max` over `V_N`, `N = 2^n`, for each `n`, then the fit.
/// Each `n` uses the stream family `seed + n`.
pub fn fit_expected_max(
    kind: FieldKind,
    ns: &[u32],
    reps: usize,
    seed: u64,
    max_side: usize,
) -> Result<FitResult> {
    if ns.len() < 4 {
        return Err(Error::DegenerateDesign(format!(
            "need at least 4 values of n, got {}",
            ns.len()
        )));
    }
    let mut means = Vec::with_capacity(ns.len());
    let mut ses = Vec::with_capacity(ns.len());
    for &n in ns {
        let s = max_stats(&spec_for(kind, n), Restriction::Full, reps, seed.wrapping_add(n as u64), max_side)?;
        means.push(s.mean);
        ses.push(s.mean_se);
    }
    fit_from_means(ns, &means, &ses)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let a = (2.0 / std::f64::consts::PI).sqrt();
        assert!((GFF_C1 - 2.0 * a * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((GFF_C2 - 0.75 * a).abs() < 1e-15);
        let l = std::f64::consts::LN_2.sqrt();
        assert!((BRW_C1 - 2.0 * l).abs() < 1e-15);
        assert!((BRW_C2 - 0.75 / l).abs() < 1e-15);
    }

    #[test]
    fn synthetic_linear() {
        let ns = [4, 5, 6, 7, 8, 9];
        let means: Vec<f64> = ns.iter().map(|&n| 3.0 * n as f64).collect();
        let f = fit_from_means(&ns, &means, &[0.0; 6]).unwrap();
        assert!((f.c1 - 3.0).abs() < 1e-10);
        assert!(f.c2.abs() < 1e-10);
        assert!(f.c0.abs() < 1e-10);
        assert_eq!(f.residuals.len(), 6);
        assert_eq!(f.c1_half_width, 0.0);
    }

    #[test]
    fn synthetic_full_model() {
        let ns = [3, 4, 6, 10, 12];
        let means: Vec<f64> = ns
            .iter()
            .map(|&n| 1.7 * n as f64 - 0.9 * (n as f64).ln() + 0.25)
            .collect();
        let f = fit_from_means(&ns, &means, &[0.1; 5]).unwrap();
        assert!((f.c1 - 1.7).abs() < 1e-10);
        assert!((f.c2 - 0.9).abs() < 1e-10);
        assert!(f.c1_half_width > 0.0);
    }

    #[test]
    fn degenerate_designs() {
        assert!(matches!(
            fit_from_means(&[4, 5, 6], &[1.0; 3], &[0.0; 3]),
            Err(Error::DegenerateDesign(_))
        ));
        assert!(matches!(
            fit_from_means(&[5, 5, 5, 5], &[1.0; 4], &[0.0; 4]),
            Err(Error::DegenerateDesign(_))
        ));
    }
}
