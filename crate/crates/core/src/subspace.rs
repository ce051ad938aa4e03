//! Corpus subspaces and manifold sample sets built from text prompts, and
//! projection onto them.
//!
//! A [`CorpusSubspace`] is a linear span given by an ordered basis. The basis
//! is orthonormal for Gram-Schmidt and PCA builds and merely unit-length for
//! `raw` builds; [`CorpusSubspace::project`] applies the same dot-product
//! formula in every case. A [`ManifoldSet`] keeps the corpus points
//! themselves and projects by nearest neighbour in cosine similarity.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bundle::{write_json, Embedding, EmbeddingKind};
use crate::error::{Error, Result};
use crate::pca::principal_components;
use crate::vector::{self, check_dims};

/// Gram-Schmidt residuals below this norm mark a prompt as dependent.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// Tolerance for orthonormality and span-membership checks.
pub const SPAN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMethod {
    GramSchmidt,
    Raw,
    Pca,
}

/// How an image embedding is projected: onto one of the three linear
/// subspace kinds, or onto the nearest point of a sample set (`all`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionKind {
    Gs,
    Raw,
    Pca,
    All,
}

impl ProjectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProjectionKind::Gs => "gs",
            ProjectionKind::Raw => "raw",
            ProjectionKind::Pca => "pca",
            ProjectionKind::All => "all",
        }
    }
}

impl fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProjectionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gs" => Ok(ProjectionKind::Gs),
            "raw" => Ok(ProjectionKind::Raw),
            "pca" => Ok(ProjectionKind::Pca),
            "all" => Ok(ProjectionKind::All),
            other => Err(Error::InvalidParameter {
                name: "method",
                reason: format!("unknown projection '{other}' (expected gs|raw|pca|all)"),
            }),
        }
    }
}

impl From<BasisMethod> for ProjectionKind {
    fn from(m: BasisMethod) -> Self {
        match m {
            BasisMethod::GramSchmidt => ProjectionKind::Gs,
            BasisMethod::Raw => ProjectionKind::Raw,
            BasisMethod::Pca => ProjectionKind::Pca,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSubspace {
    dim: usize,
    basis: Vec<Vec<f64>>,
    orthonormal: bool,
    method: BasisMethod,
    source_labels: Vec<String>,
    explained_variance: Option<Vec<f64>>,
}

impl CorpusSubspace {
    /// Assemble a subspace from stored parts, checking every invariant.
    pub fn from_parts(
        dim: usize,
        method: BasisMethod,
        basis: Vec<Vec<f64>>,
        source_labels: Vec<String>,
        explained_variance: Option<Vec<f64>>,
    ) -> std::result::Result<Self, String> {
        let n = basis.len();
        if n == 0 || n > dim {
            return Err(format!("basis size {n} outside 1..={dim}"));
        }
        for b in &basis {
            if b.len() != dim {
                return Err(format!("basis vector of length {} in dim {dim}", b.len()));
            }
            if !vector::all_finite(b) {
                return Err("non-finite basis component".into());
            }
        }
        if source_labels.len() != n && source_labels.len() != 1 {
            return Err(format!(
                "{} source labels for {n} basis vectors",
                source_labels.len()
            ));
        }
        let orthonormal = method != BasisMethod::Raw;
        if orthonormal {
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    let g = vector::dot(&basis[i], &basis[j]);
                    if (g - target).abs() >= SPAN_TOL {
                        return Err(format!("basis not orthonormal: <b{i},b{j}> = {g}"));
                    }
                }
            }
        } else if basis.iter().any(|b| vector::norm(b) < vector::ZERO_NORM) {
            return Err("zero basis vector".into());
        }
        match (&explained_variance, method) {
            (Some(ev), BasisMethod::Pca) => {
                if ev.len() != n {
                    return Err(format!(
                        "{} explained variances for {n} components",
                        ev.len()
                    ));
                }
                if ev.windows(2).any(|w| w[1] > w[0]) {
                    return Err("explained_variance must be non-increasing".into());
                }
            }
            (Some(_), _) => return Err("explained_variance is only valid for pca".into()),
            (None, _) => {}
        }
        Ok(CorpusSubspace {
            dim,
            basis,
            orthonormal,
            method,
            source_labels,
            explained_variance,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis vectors `N`.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn method(&self) -> BasisMethod {
        self.method
    }

    pub fn source_labels(&self) -> &[String] {
        &self.source_labels
    }

    pub fn explained_variance(&self) -> Option<&[f64]> {
        self.explained_variance.as_deref()
    }

    /// `Σ_k ⟨b_k, v⟩ b_k` over the stored basis.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.dim, v.len())?;
        let mut out = vec![0.0; self.dim];
        for b in &self.basis {
            vector::axpy(vector::dot(b, v), b, &mut out);
        }
        Ok(out)
    }

    /// `⟨v, b_k⟩` for every basis vector, in basis order.
    pub fn coefficients(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.dim, v.len())?;
        Ok(self.basis.iter().map(|b| vector::dot(v, b)).collect())
    }

    /// Euclidean distance from `v` to the span of the basis.
    ///
    /// For raw bases the span is orthonormalized on the fly; dependent basis
    /// vectors are skipped rather than reported.
    pub fn distance_to_span(&self, v: &[f64]) -> Result<f64> {
        check_dims(self.dim, v.len())?;
        let mut residual = v.to_vec();
        if self.orthonormal {
            for b in &self.basis {
                vector::axpy(-vector::dot(b, v), b, &mut residual);
            }
        } else {
            for q in orthonormal_span(&self.basis) {
                let c = vector::dot(&q, &residual);
                vector::axpy(-c, &q, &mut residual);
            }
        }
        Ok(vector::norm(&residual))
    }
}

/// Orthonormal basis for the span of `vectors`, dropping dependent ones.
fn orthonormal_span(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let Ok(unit) = vector::normalize(v) else {
            continue;
        };
        let r = gs_residual(&unit, &out);
        if let Ok(q) = vector::normalize(&r) {
            if vector::norm(&r) >= DEGENERACY_TOL {
                out.push(q);
            }
        }
    }
    out
}

/// Residual of `v` against an orthonormal set, with one reorthogonalization
/// pass.
fn gs_residual(v: &[f64], ortho: &[Vec<f64>]) -> Vec<f64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for q in ortho {
            let c = vector::dot(q, &r);
            vector::axpy(-c, q, &mut r);
        }
    }
    r
}

fn check_prompts(prompts: &[Embedding]) -> Result<usize> {
    let first = prompts
        .first()
        .ok_or(Error::EmptyInput("prompt embeddings"))?;
    let dim = first.dim();
    for p in prompts {
        p.expect_kind(EmbeddingKind::Text)?;
        check_dims(dim, p.dim())?;
    }
    Ok(dim)
}

fn labels(prompts: &[Embedding]) -> Vec<String> {
    prompts.iter().map(|p| p.label.clone()).collect()
}

/// Orthonormalize prompt embeddings in order.
///
/// Each prompt is scaled to unit length before its residual against the
/// earlier basis vectors is taken, so the degeneracy threshold does not
/// depend on the prompts' raw scale.
pub fn build_gs(prompts: &[Embedding]) -> Result<CorpusSubspace> {
    let dim = check_prompts(prompts)?;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(prompts.len());
    for p in prompts {
        let unit = vector::normalize(&p.vector)?;
        let r = gs_residual(&unit, &basis);
        let residual = vector::norm(&r);
        if residual < DEGENERACY_TOL {
            return Err(Error::DegenerateBasis {
                label: p.label.clone(),
                residual,
            });
        }
        basis.push(vector::scale(&r, 1.0 / residual));
    }
    Ok(CorpusSubspace {
        dim,
        basis,
        orthonormal: true,
        method: BasisMethod::GramSchmidt,
        source_labels: labels(prompts),
        explained_variance: None,
    })
}

/// Unit-normalized prompts used as a (non-orthogonal) basis.
pub fn build_raw(prompts: &[Embedding]) -> Result<CorpusSubspace> {
    let dim = check_prompts(prompts)?;
    if prompts.len() > dim {
        return Err(Error::InvalidParameter {
            name: "prompts",
            reason: format!("{} prompts exceed dimension {dim}", prompts.len()),
        });
    }
    let basis = prompts
        .iter()
        .map(|p| vector::normalize(&p.vector))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorpusSubspace {
        dim,
        basis,
        orthonormal: false,
        method: BasisMethod::Raw,
        source_labels: labels(prompts),
        explained_variance: None,
    })
}

/// Top-`n_components` principal directions of a corpus, used as a linear
/// basis through the origin.
///
/// The corpus is mean-centered to find the directions; the mean itself is
/// not kept.
pub fn build_pca(corpus: &[Embedding], n_components: usize) -> Result<CorpusSubspace> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("PCA corpus"));
    }
    let points: Vec<&[f64]> = corpus.iter().map(|e| e.vector.as_slice()).collect();
    let pc = principal_components(&points, n_components)?;
    let description = format!(
        "pca({} of {} embeddings: {}{})",
        n_components,
        corpus.len(),
        corpus
            .iter()
            .take(3)
            .map(|e| e.label.as_str())
            .collect::<Vec<_>>()
            .join(", "),
        if corpus.len() > 3 { ", ..." } else { "" }
    );
    Ok(CorpusSubspace {
        dim: points[0].len(),
        basis: pc.components,
        orthonormal: true,
        method: BasisMethod::Pca,
        source_labels: vec![description; n_components],
        explained_variance: Some(pc.explained_variance),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub label: String,
    pub vector: Vec<f64>,
}

/// Stored corpus points standing in for the manifold of related texts.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSet {
    dim: usize,
    members: Vec<Member>,
}

impl ManifoldSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member most cosine-similar to `v`; the first one wins ties.
    pub fn project_all(&self, v: &[f64]) -> Result<&Member> {
        Ok(&self.members[self.ranked(v, 1)?[0]])
    }

    /// Indices of the `k` members most cosine-similar to `v`, best first.
    /// Equal similarities keep member order.
    pub fn ranked(&self, v: &[f64], k: usize) -> Result<Vec<usize>> {
        check_dims(self.dim, v.len())?;
        let nv = vector::norm(v);
        if nv < vector::ZERO_NORM {
            return Err(Error::ZeroVector);
        }
        // members are unit length
        let sims: Vec<f64> = self
            .members
            .iter()
            .map(|m| vector::dot(&m.vector, v) / nv)
            .collect();
        let mut order: Vec<usize> = (0..sims.len()).collect();
        order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]));
        order.truncate(k);
        Ok(order)
    }
}

/// Keep every corpus embedding, unit-normalized, as a manifold sample.
pub fn build_sample_set(corpus: &[Embedding]) -> Result<ManifoldSet> {
    let first = corpus
        .first()
        .ok_or(Error::EmptyInput("sample-set corpus"))?;
    let dim = first.dim();
    let members = corpus
        .iter()
        .map(|e| {
            check_dims(dim, e.dim())?;
            Ok(Member {
                label: e.label.clone(),
                vector: vector::normalize(&e.vector)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ManifoldSet { dim, members })
}

/// Either kind of projection target, as stored in a space file.
#[derive(Debug, Clone, PartialEq)]
pub enum Space {
    Subspace(CorpusSubspace),
    Manifold(ManifoldSet),
}

impl Space {
    pub fn kind(&self) -> ProjectionKind {
        match self {
            Space::Subspace(s) => s.method().into(),
            Space::Manifold(_) => ProjectionKind::All,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::Subspace(s) => s.dim(),
            Space::Manifold(m) => m.dim(),
        }
    }

    pub fn as_subspace(&self) -> Option<&CorpusSubspace> {
        match self {
            Space::Subspace(s) => Some(s),
            Space::Manifold(_) => None,
        }
    }
}

impl From<CorpusSubspace> for Space {
    fn from(s: CorpusSubspace) -> Self {
        Space::Subspace(s)
    }
}

impl From<ManifoldSet> for Space {
    fn from(m: ManifoldSet) -> Self {
        Space::Manifold(m)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceRecord {
    dim: usize,
    method: StoredMethod,
    orthonormal: bool,
    basis: Vec<Vec<f64>>,
    source_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    explained_variance: Option<Vec<f64>>,
}

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StoredMethod {
    GramSchmidt,
    Raw,
    Pca,
    All,
}

/// Write a subspace or sample set as JSON.
///
/// Sample sets share the subspace layout with `"method":"all"`, members as
/// `basis` rows and their labels as `source_labels`.
pub fn save_space(space: &Space, path: impl AsRef<Path>) -> Result<()> {
    let record = match space {
        Space::Subspace(s) => SpaceRecord {
            dim: s.dim,
            method: match s.method {
                BasisMethod::GramSchmidt => StoredMethod::GramSchmidt,
                BasisMethod::Raw => StoredMethod::Raw,
                BasisMethod::Pca => StoredMethod::Pca,
            },
            orthonormal: s.orthonormal,
            basis: s.basis.clone(),
            source_labels: s.source_labels.clone(),
            explained_variance: s.explained_variance.clone(),
        },
        Space::Manifold(m) => SpaceRecord {
            dim: m.dim,
            method: StoredMethod::All,
            orthonormal: false,
            basis: m.members.iter().map(|x| x.vector.clone()).collect(),
            source_labels: m.members.iter().map(|x| x.label.clone()).collect(),
            explained_variance: None,
        },
    };
    write_json(&record, path.as_ref())
}

pub fn load_space(path: impl AsRef<Path>) -> Result<Space> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let record: SpaceRecord = serde_json::from_str(&text).map_err(|e| {
        if e.is_data() {
            Error::Schema {
                path: path.into(),
                message: e.to_string(),
            }
        } else {
            Error::Parse {
                path: path.into(),
                message: e.to_string(),
            }
        }
    })?;
    let schema = |message: String| Error::Schema {
        path: path.into(),
        message,
    };
    let method = match record.method {
        StoredMethod::All => {
            if record.basis.is_empty() || record.source_labels.len() != record.basis.len() {
                return Err(schema("sample set needs one label per member".into()));
            }
            let mut members = Vec::with_capacity(record.basis.len());
            for (label, v) in record.source_labels.into_iter().zip(record.basis) {
                if v.len() != record.dim {
                    return Err(schema(format!("member '{label}' has wrong length")));
                }
                if (vector::norm(&v) - 1.0).abs() >= SPAN_TOL {
                    return Err(schema(format!("member '{label}' is not unit length")));
                }
                members.push(Member { label, vector: v });
            }
            return Ok(Space::Manifold(ManifoldSet {
                dim: record.dim,
                members,
            }));
        }
        StoredMethod::GramSchmidt => BasisMethod::GramSchmidt,
        StoredMethod::Raw => BasisMethod::Raw,
        StoredMethod::Pca => BasisMethod::Pca,
    };
    if record.orthonormal != (method != BasisMethod::Raw) {
        return Err(schema("orthonormal flag contradicts method".into()));
    }
    CorpusSubspace::from_parts(
        record.dim,
        method,
        record.basis,
        record.source_labels,
        record.explained_variance,
    )
    .map(Space::Subspace)
    .map_err(schema)
}
