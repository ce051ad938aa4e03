//! Deterministic inputs shared by the benchmarks.

use pae_core::optimizer::seeded_latent;
use pae_core::{build_gs, normalize, CorpusSubspace, Embedding, EmbeddingKind};

/// Unit vector of length `dim`, fixed by `seed`.
pub fn unit_vector(seed: u64, dim: usize) -> Vec<f64> {
    normalize(&seeded_latent(seed, dim)).expect("uniform draws are nonzero")
}

/// `n` unit embeddings of the given kind, seeds `base..base + n`.
pub fn embeddings(kind: EmbeddingKind, base: u64, n: usize, dim: usize) -> Vec<Embedding> {
    (0..n)
        .map(|i| {
            let seed = base + i as u64;
            Embedding::new(
                format!("e{seed}"),
                kind,
                format!("item {seed}"),
                unit_vector(seed, dim),
            )
        })
        .collect()
}

/// Gram-Schmidt subspace over `n` random prompts.
pub fn subspace(n: usize, dim: usize) -> CorpusSubspace {
    build_gs(&embeddings(EmbeddingKind::Text, 10_000, n, dim))
        .expect("random prompts are independent")
}
