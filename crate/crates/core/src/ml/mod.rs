//! Tree-ensemble regression: CART trees, random forests, gradient boosting
//! and grid-searched k-fold cross-validation.

use alloc::string::String;
use core::fmt;

mod cv;
mod ensemble;
mod matrix;
mod tree;

pub use cv::{
    cross_validate, fold_assignment, grid_groups, permutation, permutation_baseline, permutation_run, permute, CvPlan, CvReport,
    Evaluation, FoldResult, GridGroup, GridRunner, GridScore, PermutationRun, Selection, Sequential,
    SIGNIFICANCE_ALPHA,
};
pub use ensemble::{fit, fit_gbm, fit_rfr, EnsembleConfig, Grid, Loss, ModelKind, TrainedEnsemble};
pub use matrix::Matrix;
pub use tree::{fit_tree, Criterion, MaxFeatures, NestedSplit, Node, RegressionTree, Split, TreeNode, TreeParams};

#[derive(Clone, Debug, PartialEq)]
pub enum MlError {
    TooFewRows { rows: usize, needed: usize },
    ShapeMismatch { expected: usize, found: usize },
    NoFeatures,
    NonFinite,
    InvalidConfig(String),
    EmptyGrid,
    SchemaMismatch { expected: usize, found: usize },
}

impl fmt::Display for MlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MlError::TooFewRows { rows, needed } => write!(f, "{rows} rows, at least {needed} needed"),
            MlError::ShapeMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            MlError::NoFeatures => f.write_str("no predictor columns"),
            MlError::NonFinite => f.write_str("non-finite value in training data"),
            MlError::InvalidConfig(m) => write!(f, "invalid model configuration: {m}"),
            MlError::EmptyGrid => f.write_str("empty hyperparameter grid"),
            MlError::SchemaMismatch { expected, found } => {
                write!(f, "model expects {expected} features, input has {found}")
            }
        }
    }
}

impl core::error::Error for MlError {}
