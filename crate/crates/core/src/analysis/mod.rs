//! Diagnostics over embedding bundles, plus the synthetic fixtures used to
//! exercise them.

pub mod fixtures;
pub mod pca2d;
pub mod similarity;
pub mod trajectory;

pub use fixtures::{make_fixture_by_name, make_synthetic_fixture, Recipe, FIXTURE_VERSION};
pub use pca2d::{pca2d, Pca2d, Point2d};
pub use similarity::{group_heatmap, similarity_matrix, HeatMap, SimilarityMatrix};
pub use trajectory::{
    trajectory_similarity, Reference, SeriesReference, SeriesSpace, TrajectorySeries,
};
