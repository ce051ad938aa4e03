//! The projection-augmentation embedding (PAE) operator, the double-projected
//! ablation (DPE), and target-selection criteria with α sweeps.
//!
//! For an image embedding `e_I` and a text embedding `e_T`:
//!
//! ```text
//! w   = Proj(e_I)
//! r   = e_I − w
//! PAE = Aug(w, α) + r
//! ```
//!
//! `r` carries everything outside the corpus subspace and is kept verbatim;
//! only `w` is moved toward the text.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augmentation::{
    aug_exchange, aug_exchange_distinct, aug_plus, aug_simple, AugKind, AugmentationKind,
};
use crate::bundle::{write_json, Embedding, EmbeddingBundle, EmbeddingKind};
use crate::error::{Error, Result};
use crate::subspace::{load_space, CorpusSubspace, ProjectionKind, Space};
use crate::vector::{self, check_dims, cosine_similarity};

/// A complete PAE recipe: where to project, how to augment.
#[derive(Debug, Clone)]
pub struct PaeConfig {
    space: Arc<Space>,
    augmentation: AugKind,
    normalize_inputs: bool,
}

fn check_compatible(projection: ProjectionKind, aug: AugmentationKind) -> Result<()> {
    use AugmentationKind::*;
    let ok = match projection {
        ProjectionKind::All => matches!(aug, Exchange | ExchangeDistinct),
        _ => matches!(aug, Simple | Plus),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::IncompatibleConfig(format!(
            "augmentation '{aug}' cannot follow projection '{projection}'"
        )))
    }
}

impl PaeConfig {
    pub fn new(space: impl Into<Arc<Space>>, augmentation: AugKind) -> Result<Self> {
        let space = space.into();
        check_compatible(space.kind(), augmentation.kind)?;
        augmentation.validate()?;
        Ok(PaeConfig {
            space,
            augmentation,
            normalize_inputs: true,
        })
    }

    pub fn with_normalize_inputs(mut self, normalize: bool) -> Self {
        self.normalize_inputs = normalize;
        self
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let augmentation = AugKind::new(self.augmentation.kind, alpha)?;
        Ok(PaeConfig {
            augmentation,
            ..self.clone()
        })
    }

    pub fn projection(&self) -> ProjectionKind {
        self.space.kind()
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn augmentation(&self) -> AugKind {
        self.augmentation
    }

    pub fn normalize_inputs(&self) -> bool {
        self.normalize_inputs
    }

    /// Short identifier such as `gs+plus`.
    pub fn id(&self) -> String {
        format!("{}+{}", self.projection(), self.augmentation.kind)
    }

    fn prepare(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.space.dim(), v.len())?;
        if self.normalize_inputs {
            vector::normalize(v)
        } else {
            Ok(v.to_vec())
        }
    }
}

/// The intermediate vectors of one PAE evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PaeParts {
    /// Image embedding as used (normalized if the config asks for it).
    pub image: Vec<f64>,
    pub text: Vec<f64>,
    /// `w = Proj(e_I)`
    pub projected: Vec<f64>,
    /// `r = e_I − w`
    pub residual: Vec<f64>,
    /// `Aug(w, α)`
    pub augmented: Vec<f64>,
    /// `Aug(w, α) + r`, not renormalized.
    pub pae: Vec<f64>,
}

/// Evaluate every stage of the PAE operator.
pub fn compute_pae_parts(cfg: &PaeConfig, e_i: &Embedding, e_t: &Embedding) -> Result<PaeParts> {
    e_i.expect_kind(EmbeddingKind::Image)?;
    e_t.expect_kind(EmbeddingKind::Text)?;
    let image = cfg.prepare(&e_i.vector)?;
    let text = cfg.prepare(&e_t.vector)?;
    let alpha = cfg.augmentation.alpha;

    let (projected, augmented) = match (&*cfg.space, cfg.augmentation.kind) {
        (Space::Subspace(s), AugmentationKind::Simple) => {
            let w = s.project(&image)?;
            let aug = aug_simple(&w, &text, alpha)?;
            (w, aug)
        }
        (Space::Subspace(s), AugmentationKind::Plus) => {
            let w = s.project(&image)?;
            let aug = aug_plus(s, &w, &text, alpha)?;
            (w, aug)
        }
        (Space::Manifold(m), AugmentationKind::Exchange) => {
            let nearest = m.project_all(&image)?.vector.clone();
            let aug = aug_exchange(&nearest, &text, &nearest, alpha)?;
            (nearest, aug)
        }
        (Space::Manifold(m), AugmentationKind::ExchangeDistinct) => {
            let nearest = m.project_all(&image)?.vector.clone();
            let aug = aug_exchange_distinct(m, &nearest, &image, &text, alpha)?;
            (nearest, aug)
        }
        (space, kind) => {
            check_compatible(space.kind(), kind)?;
            unreachable!("compatible pairs are matched above")
        }
    };

    let residual = vector::sub(&image, &projected);
    // e_I + (Aug(w) − w) is Aug(w) + r, and is exactly e_I when Aug(w) = w.
    let shift = vector::sub(&augmented, &projected);
    let pae = vector::add(&image, &shift);
    Ok(PaeParts {
        image,
        text,
        projected,
        residual,
        augmented,
        pae,
    })
}

pub fn compute_pae(cfg: &PaeConfig, e_i: &Embedding, e_t: &Embedding) -> Result<Vec<f64>> {
    compute_pae_parts(cfg, e_i, e_t).map(|p| p.pae)
}

/// Project both the image and the text onto the subspace (the DPE ablation).
///
/// Inputs are unit-normalized first. A text orthogonal to the subspace gives
/// a zero `proj_text`; callers building a cosine loss must reject it.
pub fn compute_dpe_targets(
    s: &CorpusSubspace,
    e_i: &[f64],
    e_t: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(s.dim(), e_i.len())?;
    check_dims(s.dim(), e_t.len())?;
    let proj_image = s.project(&vector::normalize(e_i)?)?;
    let proj_text = s.project(&vector::normalize(e_t)?)?;
    Ok((proj_image, proj_text))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriteriaReport {
    /// cos(PAE, e_It)
    pub sim_pae_target: f64,
    /// cos(e_T, e_It)
    pub sim_text_target: f64,
    /// cos(PAE, e_I)
    pub sim_pae_original: f64,
    pub criterion1_pass: bool,
    pub criterion2_pass: bool,
}

impl CriteriaReport {
    fn from_sims(sim_pae_target: f64, sim_text_target: f64, sim_pae_original: f64) -> Self {
        CriteriaReport {
            sim_pae_target,
            sim_text_target,
            sim_pae_original,
            criterion1_pass: sim_pae_target > sim_text_target,
            criterion2_pass: sim_pae_target > sim_pae_original,
        }
    }
}

/// Score a PAE against the ideal target embedding `e_It`.
///
/// Criterion 1: PAE is closer to the target than the bare text is.
/// Criterion 2: PAE is closer to the target than to the original image.
/// Both comparisons are strict.
pub fn evaluate_criteria(
    cfg: &PaeConfig,
    e_i: &Embedding,
    e_t: &Embedding,
    e_it: &Embedding,
) -> Result<CriteriaReport> {
    e_it.expect_kind(EmbeddingKind::Image)?;
    let parts = compute_pae_parts(cfg, e_i, e_t)?;
    let target = vector::normalize(&e_it.vector)?;
    check_dims(parts.image.len(), target.len())?;
    let pae_dir = vector::normalize(&parts.pae).map_err(|_| Error::DegenerateDirection {
        what: "PAE vector",
        step: None,
    })?;
    Ok(CriteriaReport::from_sims(
        cosine_similarity(&pae_dir, &target)?,
        cosine_similarity(&parts.text, &target)?,
        cosine_similarity(&pae_dir, &parts.image)?,
    ))
}

/// An `(e_I, e_T, e_It)` evaluation triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub image: Embedding,
    pub text: Embedding,
    pub target: Embedding,
}

/// Collect triples from `triple:<n>` tags, using `role:source`,
/// `role:prompt` and `role:target` to tell the members apart. Triples are
/// returned in increasing `n`.
pub fn triples_from_tags(bundle: &EmbeddingBundle) -> Result<Vec<Triple>> {
    let mut slots: std::collections::BTreeMap<u64, [Option<&Embedding>; 3]> = Default::default();
    for item in &bundle.items {
        let Some(n) = item.tag_value("triple") else {
            continue;
        };
        let n: u64 = n.parse().map_err(|_| Error::Schema {
            path: "<bundle>".into(),
            message: format!("item '{}' has non-numeric triple tag '{n}'", item.id),
        })?;
        let slot = match item.tag_value("role") {
            Some("source") => 0,
            Some("prompt") => 1,
            Some("target") => 2,
            _ => {
                return Err(Error::MissingTag {
                    id: item.id.clone(),
                    key: "role".into(),
                })
            }
        };
        slots.entry(n).or_default()[slot] = Some(item);
    }
    slots
        .into_iter()
        .map(|(n, [image, text, target])| match (image, text, target) {
            (Some(i), Some(t), Some(g)) => Ok(Triple {
                image: i.clone(),
                text: t.clone(),
                target: g.clone(),
            }),
            _ => Err(Error::Schema {
                path: "<bundle>".into(),
                message: format!("triple {n} is missing a source, prompt or target"),
            }),
        })
        .collect()
}

/// A configuration without its augmenting power, swept over α.
#[derive(Debug, Clone)]
pub struct PaeTemplate {
    pub id: String,
    pub space: Arc<Space>,
    pub kind: AugmentationKind,
    pub normalize_inputs: bool,
}

impl PaeTemplate {
    pub fn new(
        id: impl Into<String>,
        space: impl Into<Arc<Space>>,
        kind: AugmentationKind,
    ) -> Result<Self> {
        let space = space.into();
        check_compatible(space.kind(), kind)?;
        Ok(PaeTemplate {
            id: id.into(),
            space,
            kind,
            normalize_inputs: true,
        })
    }

    pub fn instantiate(&self, alpha: f64) -> Result<PaeConfig> {
        Ok(
            PaeConfig::new(self.space.clone(), AugKind::new(self.kind, alpha)?)?
                .with_normalize_inputs(self.normalize_inputs),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub config_id: String,
    pub alpha: f64,
    pub mean_sim_pae_target: f64,
    pub mean_sim_text_target: f64,
    pub mean_sim_pae_original: f64,
    pub criterion1: bool,
    pub criterion2: bool,
    /// Triples that contributed to the means.
    pub evaluated: usize,
}

/// A triple that could not be scored for one `(config, α)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedTriple {
    pub config_id: String,
    pub alpha: f64,
    pub triple_index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedTriple>,
}

pub const SWEEP_CSV_HEADER: &str =
    "config_id,alpha,mean_sim_pae_target,mean_sim_text_target,mean_sim_pae_original,criterion1,criterion2";

impl SweepTable {
    /// Maximal runs of consecutive swept α values (in ascending order) at
    /// which both criteria hold on average, as inclusive `(lo, hi)` pairs.
    pub fn passing_ranges(&self, config_id: &str) -> Vec<(f64, f64)> {
        let mut ranges = Vec::new();
        let mut current: Option<(f64, f64)> = None;
        for row in self.rows.iter().filter(|r| r.config_id == config_id) {
            if row.criterion1 && row.criterion2 {
                current = Some(match current {
                    Some((lo, _)) => (lo, row.alpha),
                    None => (row.alpha, row.alpha),
                });
            } else if let Some(r) = current.take() {
                ranges.push(r);
            }
        }
        ranges.extend(current);
        ranges
    }

    pub fn config_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.rows.iter().map(|r| r.config_id.as_str()).collect();
        ids.dedup();
        ids
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.config_id,
                r.alpha,
                r.mean_sim_pae_target,
                r.mean_sim_text_target,
                r.mean_sim_pae_original,
                r.criterion1,
                r.criterion2
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Mean criteria over `triples` for every `(template, α)` cell.
///
/// Cells run in parallel; rows come back sorted by config id, then α.
/// Triples that fail for a cell are listed in `skipped` and left out of that
/// cell's means. A cell with no scorable triple reports NaN means and fails
/// both criteria.
pub fn alpha_sweep(
    templates: &[PaeTemplate],
    alphas: &[f64],
    triples: &[Triple],
) -> Result<SweepTable> {
    if templates.is_empty() {
        return Err(Error::EmptyInput("sweep configurations"));
    }
    if alphas.is_empty() {
        return Err(Error::EmptyInput("sweep alphas"));
    }
    if triples.is_empty() {
        return Err(Error::EmptyInput("sweep triples"));
    }
    if let Some(bad) = alphas.iter().find(|a| !a.is_finite()) {
        return Err(Error::InvalidAlpha {
            alpha: *bad,
            reason: "must be finite",
        });
    }

    let mut order: Vec<usize> = (0..templates.len()).collect();
    order.sort_by(|&a, &b| templates[a].id.cmp(&templates[b].id));
    let mut sorted_alphas = alphas.to_vec();
    sorted_alphas.sort_by(f64::total_cmp);
    let cells: Vec<(usize, f64)> = order
        .iter()
        .flat_map(|&t| sorted_alphas.iter().map(move |&a| (t, a)))
        .collect();

    let results: Vec<(SweepRow, Vec<SkippedTriple>)> = cells
        .par_iter()
        .map(|&(t, alpha)| sweep_cell(&templates[t], alpha, triples))
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (row, skips) in results {
        rows.push(row);
        skipped.extend(skips);
    }
    Ok(SweepTable { rows, skipped })
}

fn sweep_cell(
    template: &PaeTemplate,
    alpha: f64,
    triples: &[Triple],
) -> (SweepRow, Vec<SkippedTriple>) {
    let mut skipped = Vec::new();
    let mut sums = [0.0f64; 3];
    let mut evaluated = 0usize;
    let report = |triple: &Triple| -> Result<CriteriaReport> {
        let cfg = template.instantiate(alpha)?;
        evaluate_criteria(&cfg, &triple.image, &triple.text, &triple.target)
    };
    for (i, triple) in triples.iter().enumerate() {
        match report(triple) {
            Ok(r) => {
                sums[0] += r.sim_pae_target;
                sums[1] += r.sim_text_target;
                sums[2] += r.sim_pae_original;
                evaluated += 1;
            }
            Err(e) => skipped.push(SkippedTriple {
                config_id: template.id.clone(),
                alpha,
                triple_index: i,
                error: format!("{}: {e}", e.name()),
            }),
        }
    }
    let mean = |s: f64| {
        if evaluated == 0 {
            f64::NAN
        } else {
            s / evaluated as f64
        }
    };
    let (pt, tt, po) = (mean(sums[0]), mean(sums[1]), mean(sums[2]));
    let row = SweepRow {
        config_id: template.id.clone(),
        alpha,
        mean_sim_pae_target: pt,
        mean_sim_text_target: tt,
        mean_sim_pae_original: po,
        criterion1: pt > tt,
        criterion2: pt > po,
        evaluated,
    };
    (row, skipped)
}

/// On-disk form of a [`PaeConfig`]; `space` is a path, resolved relative to
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaeConfigFile {
    pub projection: ProjectionKind,
    pub space: PathBuf,
    pub augmentation: AugKind,
    #[serde(default = "default_true")]
    pub normalize_inputs: bool,
}

fn default_true() -> bool {
    true
}

impl PaeConfigFile {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(self, path.as_ref())
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<PaeConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: PaeConfigFile = serde_json::from_str(&text).map_err(|e| {
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
    let space_path = match path.parent() {
        Some(dir) if file.space.is_relative() => dir.join(&file.space),
        _ => file.space.clone(),
    };
    let space = load_space(&space_path)?;
    if space.kind() != file.projection {
        return Err(Error::Schema {
            path: path.into(),
            message: format!(
                "config says projection '{}' but {} holds '{}'",
                file.projection,
                space_path.display(),
                space.kind()
            ),
        });
    }
    Ok(PaeConfig::new(space, file.augmentation)?.with_normalize_inputs(file.normalize_inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::{build_gs, build_pca, build_raw, build_sample_set};
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    fn xy_space() -> Space {
        build_gs(&[
            Embedding::text("x", vec![1.0, 0.0, 0.0]),
            Embedding::text("y", vec![0.0, 1.0, 0.0]),
        ])
        .unwrap()
        .into()
    }

    fn plus(alpha: f64) -> AugKind {
        AugKind::new(AugmentationKind::Plus, alpha).unwrap()
    }

    #[test]
    fn r3_fixture_hand_chain() {
        let cfg = PaeConfig::new(xy_space(), plus(1.0)).unwrap();
        let e_i = Embedding::image("i", vec![0.6, 0.0, 0.8]);
        let e_t = Embedding::text("t", vec![0.0, 1.0, 0.0]);
        let parts = compute_pae_parts(&cfg, &e_i, &e_t).unwrap();
        assert!(close(&parts.projected, &[0.6, 0.0, 0.0], 1e-12));
        assert!(close(&parts.residual, &[0.0, 0.0, 0.8], 1e-12));
        assert!(close(&parts.augmented, &[0.0, 0.6, 0.0], 1e-12));
        assert!(close(&parts.pae, &[0.0, 0.6, 0.8], 1e-9));
        assert_eq!(cfg.id(), "gs+plus");
    }

    #[test]
    fn plus_alpha_zero_returns_image_exactly() {
        let cfg = PaeConfig::new(xy_space(), plus(0.0)).unwrap();
        let e_i = Embedding::image("i", vec![0.6, 0.0, 0.8]);
        let e_t = Embedding::text("t", vec![0.3, 1.0, 0.0]);
        assert_eq!(compute_pae(&cfg, &e_i, &e_t).unwrap(), e_i.vector);
    }

    #[test]
    fn incompatible_pairs_rejected() {
        assert!(matches!(
            PaeConfig::new(
                xy_space(),
                AugKind::new(AugmentationKind::Exchange, 1.0).unwrap()
            ),
            Err(Error::IncompatibleConfig(_))
        ));
        let m: Space = build_sample_set(&[Embedding::text("a", vec![1.0, 0.0])])
            .unwrap()
            .into();
        assert!(matches!(
            PaeConfig::new(m, plus(1.0)),
            Err(Error::IncompatibleConfig(_))
        ));
    }

    #[test]
    fn kinds_are_checked() {
        let cfg = PaeConfig::new(xy_space(), plus(1.0)).unwrap();
        let a = Embedding::text("a", vec![0.6, 0.0, 0.8]);
        let b = Embedding::text("b", vec![0.0, 1.0, 0.0]);
        assert!(matches!(
            compute_pae(&cfg, &a, &b),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn exchange_pae_is_image_plus_alpha_difference() {
        let m: Space = build_sample_set(&[
            Embedding::text("a", vec![1.0, 0.0, 0.0]),
            Embedding::text("b", vec![0.0, 1.0, 0.0]),
        ])
        .unwrap()
        .into();
        let cfg =
            PaeConfig::new(m, AugKind::new(AugmentationKind::Exchange, 2.0).unwrap()).unwrap();
        let e_i = Embedding::image("i", vec![0.8, 0.6, 0.0]);
        let e_t = Embedding::text("t", vec![0.0, 0.0, 1.0]);
        let parts = compute_pae_parts(&cfg, &e_i, &e_t).unwrap();
        assert_eq!(parts.projected, vec![1.0, 0.0, 0.0]);
        assert!(close(&parts.pae, &[0.8 - 2.0, 0.6, 2.0], 1e-12));
    }

    #[test]
    fn dpe_examples() {
        let Space::Subspace(s) = xy_space() else {
            unreachable!()
        };
        let (pi, pt) = compute_dpe_targets(&s, &[0.6, 0.0, 0.8], &[0.0, 0.8, 0.6]).unwrap();
        assert!(close(&pi, &[0.6, 0.0, 0.0], 1e-12));
        assert!(close(&pt, &[0.0, 0.8, 0.0], 1e-12));
        assert!(close(&s.project(&pi).unwrap(), &pi, 1e-6));
        let (_, zero) = compute_dpe_targets(&s, &[0.6, 0.0, 0.8], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(zero, vec![0.0; 3]);
    }

    #[test]
    fn criteria_on_r3_fixture() {
        let e_i = Embedding::image("i", vec![0.6, 0.0, 0.8]);
        let e_t = Embedding::text("t", vec![0.0, 1.0, 0.0]);
        let e_it = Embedding::image("it", vec![0.0, 0.6, 0.8]);
        let cfg = PaeConfig::new(xy_space(), plus(1.0)).unwrap();
        let r = evaluate_criteria(&cfg, &e_i, &e_t, &e_it).unwrap();
        assert!((r.sim_pae_target - 1.0).abs() < 1e-12);
        assert!(r.criterion1_pass && r.criterion2_pass);

        let r0 = evaluate_criteria(&cfg.with_alpha(0.0).unwrap(), &e_i, &e_t, &e_it).unwrap();
        assert!((r0.sim_pae_original - 1.0).abs() < 1e-12);
        assert!(!r0.criterion2_pass);
    }

    #[test]
    fn simple_with_large_alpha_approaches_text() {
        let e_i = Embedding::image("i", vec![0.6, 0.0, 0.8]);
        let e_t = Embedding::text("t", vec![0.0, 1.0, 0.0]);
        let e_it = Embedding::image("it", vec![0.0, 1.0, 0.0]);
        let cfg = PaeConfig::new(
            xy_space(),
            AugKind::new(AugmentationKind::Simple, 100.0).unwrap(),
        )
        .unwrap();
        let r = evaluate_criteria(&cfg, &e_i, &e_t, &e_it).unwrap();
        // cos((0.6,100,0.8), e2) = 100 / sqrt(10001)
        assert!((r.sim_pae_target - 100.0 / 10001f64.sqrt()).abs() < 1e-12);
        assert!(r.sim_pae_target > 0.9999);
    }

    #[test]
    fn sweep_rows_sorted_and_ranges() {
        let e_i = Embedding::image("i", vec![0.6, 0.0, 0.8]);
        let e_t = Embedding::text("t", vec![0.0, 1.0, 0.0]);
        let e_it = Embedding::image("it", vec![0.0, 0.6, 0.8]);
        let triples = vec![Triple {
            image: e_i,
            text: e_t,
            target: e_it,
        }];
        let space = Arc::new(xy_space());
        let templates = vec![
            PaeTemplate::new("z", space.clone(), AugmentationKind::Simple).unwrap(),
            PaeTemplate::new("a", space, AugmentationKind::Plus).unwrap(),
        ];
        let table = alpha_sweep(&templates, &[2.0, 0.5, 1.0, 0.0], &triples).unwrap();
        assert_eq!(table.rows.len(), 8);
        assert_eq!(table.rows[0].config_id, "a");
        assert_eq!(table.rows[0].alpha, 0.0);
        assert!(!table.rows[0].criterion2);
        let a1 = table
            .rows
            .iter()
            .find(|r| r.config_id == "a" && r.alpha == 1.0)
            .unwrap();
        assert!(a1.criterion1 && a1.criterion2);
        assert!(table
            .passing_ranges("a")
            .iter()
            .any(|&(lo, hi)| lo <= 1.0 && 1.0 <= hi));
        let csv = table.to_csv();
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with(SWEEP_CSV_HEADER));
    }

    #[test]
    fn sweep_reports_skipped_triples() {
        let triples = vec![
            Triple {
                image: Embedding::image("i", vec![0.6, 0.0, 0.8]),
                text: Embedding::text("t", vec![0.0, 0.0, 1.0]),
                target: Embedding::image("g", vec![0.0, 0.6, 0.8]),
            },
            Triple {
                image: Embedding::image("i", vec![0.6, 0.0, 0.8]),
                text: Embedding::text("t", vec![0.0, 1.0, 0.0]),
                target: Embedding::image("g", vec![0.0, 0.6, 0.8]),
            },
        ];
        let t = PaeTemplate::new("gs+plus", xy_space(), AugmentationKind::Plus).unwrap();
        let table = alpha_sweep(&[t], &[1.0], &triples).unwrap();
        assert_eq!(table.rows[0].evaluated, 1);
        assert_eq!(table.skipped.len(), 1);
        assert_eq!(table.skipped[0].triple_index, 0);
        assert!(table.skipped[0].error.starts_with("NullTextProjection"));
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        crate::subspace::save_space(&xy_space(), dir.path().join("emo.json")).unwrap();
        let file = PaeConfigFile {
            projection: ProjectionKind::Gs,
            space: "emo.json".into(),
            augmentation: plus(7.0),
            normalize_inputs: true,
        };
        file.save(dir.path().join("cfg.json")).unwrap();
        let cfg = load_config(dir.path().join("cfg.json")).unwrap();
        assert_eq!(cfg.augmentation().alpha, 7.0);
        assert_eq!(cfg.projection(), ProjectionKind::Gs);

        let wrong = PaeConfigFile {
            projection: ProjectionKind::Pca,
            ..file
        };
        wrong.save(dir.path().join("wrong.json")).unwrap();
        assert!(matches!(
            load_config(dir.path().join("wrong.json")),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn triples_from_tagged_bundle() {
        let items = vec![
            Embedding::image("s1", vec![1.0, 0.0]).with_tags(["triple:1", "role:source"]),
            Embedding::text("p1", vec![0.0, 1.0]).with_tags(["triple:1", "role:prompt"]),
            Embedding::image("t1", vec![1.0, 1.0]).with_tags(["triple:1", "role:target"]),
            Embedding::image("s0", vec![1.0, 0.5]).with_tags(["triple:0", "role:source"]),
            Embedding::text("p0", vec![0.5, 1.0]).with_tags(["triple:0", "role:prompt"]),
            Embedding::image("t0", vec![1.0, 2.0]).with_tags(["triple:0", "role:target"]),
            Embedding::text("other", vec![1.0, 2.0]),
        ];
        let b = EmbeddingBundle::new(2, items).unwrap();
        let t = triples_from_tags(&b).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].image.id, "s0");
        assert_eq!(t[1].target.id, "t1");
    }

    fn unit(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, d)
            .prop_filter("nonzero", |v| vector::norm(v) > 0.1)
            .prop_map(|v| vector::normalize(&v).unwrap())
    }

    fn any_subspace(d: usize) -> impl Strategy<Value = Space> {
        (prop::collection::vec(unit(d), 3), 0..3usize).prop_filter_map(
            "buildable",
            |(vs, which)| {
                let prompts: Vec<Embedding> = vs
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| Embedding::text(format!("p{i}"), v))
                    .collect();
                let s = match which {
                    0 => build_gs(&prompts),
                    1 => build_raw(&prompts),
                    _ => build_pca(&prompts, 2),
                };
                s.ok().map(Space::from)
            },
        )
    }

    proptest! {
        #[test]
        fn residual_split(space in any_subspace(6), e_i in unit(6), e_t in unit(6), alpha in 0.0f64..10.0) {
            let cfg = PaeConfig::new(space, AugKind::new(AugmentationKind::Simple, alpha).unwrap()).unwrap();
            let i = Embedding::image("i", e_i);
            let t = Embedding::text("t", e_t.clone());
            let p = compute_pae_parts(&cfg, &i, &t).unwrap();
            for k in 0..6 {
                let bound = f64::EPSILON * (p.projected[k].abs() + p.residual[k].abs());
                prop_assert!((p.projected[k] + p.residual[k] - p.image[k]).abs() <= bound);
            }
            // simple augmentation collapses to e_I + α e_T
            let expected: Vec<f64> = p.image.iter().zip(&e_t).map(|(x, y)| x + alpha * y).collect();
            prop_assert!(close(&p.pae, &expected, 1e-9));
            if let Some(s) = cfg.space().as_subspace().filter(|s| s.is_orthonormal()) {
                for b in s.basis() {
                    prop_assert!(vector::dot(&p.residual, b).abs() < 1e-6);
                }
                let pyth = vector::dot(&p.projected, &p.projected) + vector::dot(&p.residual, &p.residual);
                prop_assert!((pyth - vector::dot(&p.image, &p.image)).abs() < 1e-6);
            }
        }

        #[test]
        fn plus_edit_stays_in_subspace(space in any_subspace(6), e_i in unit(6), e_t in unit(6), alpha in 0.0f64..15.0) {
            let Some(s) = space.as_subspace().filter(|s| s.is_orthonormal()).cloned() else { return Ok(()); };
            let cfg = PaeConfig::new(space, plus(alpha)).unwrap();
            match compute_pae(&cfg, &Embedding::image("i", e_i.clone()), &Embedding::text("t", e_t)) {
                Ok(pae) => {
                    let edit = vector::sub(&pae, &e_i);
                    prop_assert!(close(&s.project(&edit).unwrap(), &edit, 1e-6));
                }
                Err(Error::NullTextProjection { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }

        #[test]
        fn criteria_booleans_match_cosines(space in any_subspace(5), a in unit(5), b in unit(5), c in unit(5), alpha in 0.0f64..10.0) {
            let cfg = PaeConfig::new(space, plus(alpha)).unwrap();
            let (i, t, g) = (Embedding::image("i", a), Embedding::text("t", b), Embedding::image("g", c));
            if let Ok(r) = evaluate_criteria(&cfg, &i, &t, &g) {
                let pae = compute_pae(&cfg, &i, &t).unwrap();
                let pt = cosine_similarity(&pae, &g.vector).unwrap();
                let tt = cosine_similarity(&t.vector, &g.vector).unwrap();
                let po = cosine_similarity(&pae, &i.vector).unwrap();
                prop_assert!((r.sim_pae_target - pt).abs() < 1e-12);
                prop_assert_eq!(r.criterion1_pass, r.sim_pae_target > r.sim_text_target);
                prop_assert_eq!(r.criterion2_pass, r.sim_pae_target > r.sim_pae_original);
                prop_assert!((r.sim_text_target - tt).abs() < 1e-12);
                prop_assert!((r.sim_pae_original - po).abs() < 1e-12);
            }
        }

        #[test]
        fn simple_pull_toward_text_is_monotone(e_i in unit(5), e_t in unit(5)) {
            prop_assume!(vector::dot(&e_i, &e_t) > -0.999);
            let mut last = -2.0;
            for step in 0..40 {
                let alpha = step as f64 * 0.25;
                let pae = aug_simple(&e_i, &e_t, alpha).unwrap();
                let c = cosine_similarity(&pae, &e_t).unwrap();
                prop_assert!(c >= last - 1e-12);
                last = c;
            }
        }
    }
}
