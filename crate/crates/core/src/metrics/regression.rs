//! Pearson correlation, OLS with intercept, and BIC best-subset selection.
//!
//! BIC uses the Gaussian-likelihood form `n ln(RSS/n) + (p + 2) ln n`, counting
//! the p slopes, the intercept and the noise variance. Constants that other
//! variants add cancel when comparing subsets of the same data.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_CANDIDATES: usize = 20;

/// Singular values below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-10;
/// BIC values closer than this are treated as tied.
const BIC_TIE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("{x} values but {y} responses")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("a variable has zero variance")]
    DegenerateVariance,
    #[error("design matrix is rank deficient (rank {rank} < {columns})")]
    RankDeficient { rank: usize, columns: usize },
    #[error("{0} candidate covariates exceeds the exhaustive-search limit")]
    TooManyCandidates(usize),
    #[error("non-finite value in column {0}")]
    NonFinite(String),
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, RegressionError> {
    if x.len() != y.len() {
        return Err(RegressionError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(RegressionError::TooFewRows {
            needed: 3,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(RegressionError::DegenerateVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Named covariate columns sharing one row count.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Design {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, column: Vec<f64>) -> Self {
        self.names.push(name.into());
        self.columns.push(column);
        self
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn select(&self, idx: &[usize]) -> Design {
        Design {
            names: idx.iter().map(|&i| self.names[i].clone()).collect(),
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub intercept: Coefficient,
    pub coefficients: Vec<Coefficient>,
    pub rss: f64,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub bic: f64,
    pub n: usize,
}

impl RegressionResult {
    pub fn covariates(&self) -> Vec<&str> {
        self.coefficients.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.estimate)
    }
}

fn rank(x: &DMatrix<f64>) -> usize {
    // scale columns first so units do not affect the tolerance
    let mut scaled = x.clone();
    for mut c in scaled.column_iter_mut() {
        let norm = c.norm();
        if norm > 0.0 {
            c /= norm;
        }
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    sv.iter().filter(|s| **s > max * RANK_TOLERANCE).count()
}

pub fn ols_fit(design: &Design, y: &[f64]) -> Result<RegressionResult, RegressionError> {
    let n = y.len();
    let p = design.width();
    for (name, col) in design.names.iter().zip(&design.columns) {
        if col.len() != n {
            return Err(RegressionError::LengthMismatch { x: col.len(), y: n });
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(RegressionError::NonFinite(name.clone()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(RegressionError::NonFinite("response".into()));
    }
    if n <= p + 1 {
        return Err(RegressionError::TooFewRows {
            needed: p + 2,
            got: n,
        });
    }
    let k = p + 1;
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { design.columns[j - 1][i] });
    let r = rank(&x);
    if r < k {
        return Err(RegressionError::RankDeficient { rank: r, columns: k });
    }
    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &yv;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or(RegressionError::RankDeficient { rank: r, columns: k })?;
    let beta = chol.solve(&xty);
    let inv = chol.inverse();
    let resid = &yv - &x * &beta;
    let rss = resid.norm_squared();
    let mean = yv.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let dof = (n - k) as f64;
    let sigma2 = rss / dof;
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let adjusted_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / dof;
    let nf = n as f64;
    let bic = nf * (rss / nf).ln() + (p as f64 + 2.0) * nf.ln();
    let coef = |j: usize, name: &str| Coefficient {
        name: name.to_string(),
        estimate: beta[j],
        std_error: (sigma2 * inv[(j, j)]).max(0.0).sqrt(),
    };
    Ok(RegressionResult {
        intercept: coef(0, "intercept"),
        coefficients: design
            .names
            .iter()
            .enumerate()
            .map(|(j, name)| coef(j + 1, name))
            .collect(),
        rss,
        r_squared,
        adjusted_r_squared,
        bic,
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSelection {
    pub chosen: Vec<String>,
    pub model: RegressionResult,
    /// Lowest-BIC model of each subset size that could be fitted.
    pub best_per_size: Vec<RegressionResult>,
    pub skipped: usize,
}

/// Fit every subset of the candidates and keep the lowest BIC. Ties go to the
/// smaller subset, then to the subset listed first in candidate order.
pub fn best_subset_bic(candidates: &Design, y: &[f64]) -> Result<SubsetSelection, RegressionError> {
    let p = candidates.width();
    if p > MAX_CANDIDATES {
        return Err(RegressionError::TooManyCandidates(p));
    }
    let mut per_size: Vec<Option<RegressionResult>> = vec![None; p + 1];
    let mut skipped = 0;
    // masks ordered by size, then by candidate order within a size
    let mut masks: Vec<u32> = (0..1u32 << p).collect();
    masks.sort_by_key(|m| {
        let bits: Vec<usize> = (0..p).filter(|i| m & (1 << i) != 0).collect();
        (bits.len(), bits)
    });
    for mask in masks {
        let idx: Vec<usize> = (0..p).filter(|i| mask & (1 << i) != 0).collect();
        match ols_fit(&candidates.select(&idx), y) {
            Ok(fit) => {
                let slot = &mut per_size[idx.len()];
                if slot.as_ref().is_none_or(|b| fit.bic < b.bic - BIC_TIE) {
                    *slot = Some(fit);
                }
            }
            Err(e @ RegressionError::RankDeficient { .. }) => {
                log::info!("skipping subset {:?}: {e}", candidates.select(&idx).names);
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    let best_per_size: Vec<RegressionResult> = per_size.into_iter().flatten().collect();
    let mut best: Option<&RegressionResult> = None;
    for m in &best_per_size {
        if best.is_none_or(|b| m.bic < b.bic - BIC_TIE) {
            best = Some(m);
        }
    }
    let model = best
        .cloned()
        .ok_or(RegressionError::RankDeficient { rank: 0, columns: 1 })?;
    Ok(SubsetSelection {
        chosen: model.covariates().into_iter().map(str::to_string).collect(),
        model,
        best_per_size,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{FromPrimitive, ToPrimitive, Zero};

    #[test]
    fn pearson_trivial() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&x, &[1.0; 5]), Err(RegressionError::DegenerateVariance));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(RegressionError::TooFewRows { .. })));
    }

    /// Exact r² over the rationals; the f64 inputs are converted losslessly.
    fn exact_r2(x: &[f64], y: &[f64]) -> (f64, bool) {
        let q = |v: f64| BigRational::from_f64(v).unwrap();
        let n = BigRational::from_integer(BigInt::from(x.len()));
        let mx = x.iter().map(|v| q(*v)).fold(BigRational::zero(), |a, b| a + b) / &n;
        let my = y.iter().map(|v| q(*v)).fold(BigRational::zero(), |a, b| a + b) / &n;
        let (mut sxy, mut sxx, mut syy) = (BigRational::zero(), BigRational::zero(), BigRational::zero());
        for (a, b) in x.iter().zip(y) {
            let dx = q(*a) - &mx;
            let dy = q(*b) - &my;
            sxy += &dx * &dy;
            sxx += &dx * &dx;
            syy += &dy * &dy;
        }
        let positive = sxy > BigRational::zero();
        ((&sxy * &sxy / (sxx * syy)).to_f64().unwrap(), positive)
    }

    #[test]
    fn pearson_matches_exact_oracle() {
        let x = [0.31, 1.7, -2.25, 3.125, 4.0, 5.5, -0.75, 7.3, 8.01, 9.9];
        let y = [1.2, 0.4, -1.9, 2.8, 3.3, 6.1, 0.2, 6.6, 9.4, 8.7];
        let r = pearson(&x, &y).unwrap();
        let (r2, positive) = exact_r2(&x, &y);
        assert!(positive);
        assert!((r - r2.sqrt()).abs() < 1e-12, "{r} vs {}", r2.sqrt());
    }

    #[test]
    fn exact_linear_fit() {
        let x1: Vec<f64> = (0..20).map(f64::from).collect();
        let x2: Vec<f64> = (0..20).map(|i| f64::from(i * i % 7)).collect();
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 3.0 - 2.0 * a + 0.5 * b).collect();
        let fit = ols_fit(&Design::new().with("a", x1).with("b", x2), &y).unwrap();
        assert!(fit.rss < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
        assert!((fit.intercept.estimate - 3.0).abs() < 1e-9);
        assert!((fit.estimate("a").unwrap() + 2.0).abs() < 1e-9);
        assert!((fit.estimate("b").unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn fit_errors() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = (0..10).map(|i| f64::from(i % 3)).collect();
        let dup = Design::new().with("a", x.clone()).with("b", x.iter().map(|v| 2.0 * v).collect());
        assert!(matches!(ols_fit(&dup, &y), Err(RegressionError::RankDeficient { .. })));
        let short = Design::new().with("a", vec![1.0, 2.0]);
        assert!(matches!(ols_fit(&short, &[1.0, 2.0]), Err(RegressionError::TooFewRows { .. })));
    }

    #[test]
    fn bic_formula() {
        let x: Vec<f64> = (0..12).map(f64::from).collect();
        let y: Vec<f64> = (0..12).map(|i| f64::from(i) + if i % 2 == 0 { 0.5 } else { -0.5 }).collect();
        let fit = ols_fit(&Design::new().with("x", x), &y).unwrap();
        let n = 12.0f64;
        assert!((fit.bic - (n * (fit.rss / n).ln() + 3.0 * n.ln())).abs() < 1e-12);
        let adj = 1.0 - (1.0 - fit.r_squared) * (n - 1.0) / (n - 2.0);
        assert!((fit.adjusted_r_squared - adj).abs() < 1e-12);
    }

    #[test]
    fn zero_candidates_is_intercept_only() {
        let y = [1.0, 2.0, 4.0, 3.0];
        let sel = best_subset_bic(&Design::new(), &y).unwrap();
        assert!(sel.chosen.is_empty());
        assert!((sel.model.intercept.estimate - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_subsets_are_skipped() {
        let x: Vec<f64> = (0..30).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 1.5 + (v * 7.0).sin()).collect();
        let d = Design::new().with("a", x.clone()).with("a2", x);
        let sel = best_subset_bic(&d, &y).unwrap();
        assert_eq!(sel.skipped, 1);
        assert_eq!(sel.chosen, ["a"]);
    }
}
