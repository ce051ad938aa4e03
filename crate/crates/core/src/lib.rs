//! Projection-augmentation embeddings (PAE) for joint image/text embedding
//! spaces.
//!
//! An image embedding `e_I` is split into its projection `w` onto a subspace
//! spanned by attribute prompts and the residual `r = e_I - w`. The
//! projection is edited toward a text embedding `e_T` by an augmentation
//! rule, and the residual is added back unchanged:
//!
//! ```text
//! PAE(e_I, e_T) = Aug(Proj(e_I), e_T, alpha) + (e_I - Proj(e_I))
//! ```
//!
//! ```
//! use std::sync::Arc;
//! use pae_core::{
//!     build_gs, compute_pae, AugKind, AugmentationKind, Embedding, PaeConfig, Space,
//! };
//!
//! let basis = [
//!     Embedding::text("b1", vec![1.0, 0.0, 0.0]),
//!     Embedding::text("b2", vec![0.0, 1.0, 0.0]),
//! ];
//! let space = Arc::new(Space::from(build_gs(&basis)?));
//! let cfg = PaeConfig::new(space, AugKind::new(AugmentationKind::Plus, 1.0)?)?;
//! let image = Embedding::image("i", vec![0.6, 0.0, 0.8]);
//! let text = Embedding::text("t", vec![0.0, 1.0, 0.0]);
//! let pae = compute_pae(&cfg, &image, &text)?;
//! assert!(pae.iter().zip([0.0, 0.6, 0.8]).all(|(a, b)| (a - b).abs() < 1e-12));
//! # Ok::<(), pae_core::Error>(())
//! ```

pub mod analysis;
pub mod augmentation;
pub mod bundle;
pub mod error;
pub mod optimizer;
pub mod pae;
pub mod pca;
pub mod subspace;
pub mod vector;

pub use augmentation::{
    aug_exchange, aug_exchange_distinct, aug_plus, aug_simple, AugKind, AugmentationKind,
};
pub use bundle::{
    load_bundle, save_bundle, Embedding, EmbeddingBundle, EmbeddingKind, FORMAT_VERSION,
};
pub use error::{Error, ErrorClass, Result};
pub use optimizer::{
    finite_diff_check, make_generator, optimize, DescentSettings, Generator, GeneratorKind,
    LossSpec, OptimizationTrace, TargetKind,
};
pub use pae::{
    alpha_sweep, compute_dpe_targets, compute_pae, compute_pae_parts, evaluate_criteria,
    load_config, triples_from_tags, CriteriaReport, PaeConfig, PaeConfigFile, PaeParts,
    PaeTemplate, SweepRow, SweepTable, Triple,
};
pub use pca::{principal_components, PrincipalComponents};
pub use subspace::{
    build_gs, build_pca, build_raw, build_sample_set, load_space, save_space, BasisMethod,
    CorpusSubspace, ManifoldSet, ProjectionKind, Space,
};
pub use vector::{cosine_similarity, euclidean_distance, normalize};
