//! Evaluation: BLEU, Smatch, and the fidelity regression.

pub mod bleu;
pub mod covariates;
pub mod regression;
pub mod smatch;

pub use bleu::{corpus_bleu, sentence_bleu, BleuError, BleuReport};
pub use covariates::{filter_outliers, CovariateError, CovariateRecord, CovariateRow};
pub use regression::{best_subset_bic, ols_fit, pearson, Design, RegressionError, RegressionResult};
pub use smatch::{smatch, smatch_exact, SmatchError, SmatchResult};
