//! From-scratch machine-learning kernels used by the p6 pipeline engine.
//!
//! Every stochastic routine takes an explicit seed, and every data-parallel
//! loop produces schedule-independent results. With the `parallel` feature
//! (on by default) the inner loops run on rayon; without it they run
//! sequentially and return bit-identical output.

pub mod agglomerative;
pub mod changepoint;
mod error;
pub mod grid;
pub mod kmeans;
pub mod linalg;
pub mod linear;
pub mod matrix;
pub mod metrics;
pub mod model;
mod par;
pub mod pca;
pub mod scaling;
pub mod tree;

pub use agglomerative::{fit_agglomerative, AgglomerativeFit, Linkage};
pub use changepoint::{detect_changepoints, ChangePointResult};
pub use error::{AnalyticsError, Result};
pub use grid::{grid_search, kfold_indices, Candidate, GridSearchConfig, GridSearchResult};
pub use kmeans::{fit_kmeans, KMeansFit, KMeansParams};
pub use linear::fit_linear_regression;
pub use matrix::{FeatureMatrix, Matrix};
pub use metrics::{score, Metric};
pub use model::{
    fit_model, load_model, predict, rank_model_attributes, save_model, AttributeOrder,
    FittedState, Method, Model, Params, MODEL_FORMAT_VERSION,
};
pub use pca::{fit_pca, PcaFit};
pub use scaling::{scale_features, Scaling};
pub use tree::{fit_random_forest, DecisionTree, ForestParams, TreeNode};
