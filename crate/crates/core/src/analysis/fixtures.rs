//! Seeded synthetic embedding bundles.
//!
//! Every recipe starts from an orthonormal frame `q_0, q_1, …` drawn with
//! ChaCha8 (Gaussian vectors, Gram-Schmidt) and gives each frame vector a
//! role. "Noise" vectors are fresh Gaussian draws with the whole frame
//! projected out, then unit-normalized, so they never leak into the roles.
//! All item vectors are unit length.
//!
//! Recipes are frozen at [`FIXTURE_VERSION`]: tests assert properties of the
//! exact bundles produced here, so any change to a construction below is a
//! breaking change.
//!
//! ### `two_modality_clusters` (D = 32)
//! Image center `q_0`, text center `normalize(0.35 q_0 + q_1)`, concepts
//! `dog, cat, car` along `q_2, q_3, q_4`. For each concept, 6 images
//! `normalize(q_0 + 0.5 q_concept + 0.35 n)` and 6 texts
//! `normalize(c_text + 0.5 q_concept + 0.35 n)`. Tags: `modality:*`,
//! `concept:*`.
//!
//! ### `attribute_trajectory` (D = 32)
//! Attribute prompts `attr_0..attr_3` = `q_0..q_3` (`role:basis`). Edit
//! direction `v = normalize(q_0 + 0.5 q_1)`, start `a = normalize(q_4 +
//! 0.2 q_2)`. Frames `frame_00..frame_11` are `normalize(a + 0.1 t v + 0.01
//! n_t)` (`role:frame`, `frame:t`). Reference text `txt_target =
//! normalize(v + 0.8 q_5)` (`role:target`).
//!
//! ### `grouped_attributes` (D = 32)
//! Groups `joy, sorrow, anger` along `q_0, q_1, q_2`, each with a prototype
//! text `proto_<group>` equal to its direction (`role:basis`). Shared style
//! `q_3`. Four texts per group, `normalize(0.6 q_group + 0.15 s + 0.7 q_3 +
//! 0.35 n)` with `s` a random unit vector in `span(q_0, q_1, q_2)`
//! (`role:item`, `group:*`). Plus `img_source = normalize(0.5 q_0 + 0.8 q_4
//! + 0.3 q_3)` (`role:source`) and `txt_target = normalize(0.6 q_1 + 0.7 q_3
//! + 0.3 q_5)` (`role:prompt`).
//!
//! ### `pae_triples` (D = 24)
//! Emotion prompts `happy, sad, angry, fearful, surprised, disgusted` along
//! `q_0..q_5` (`role:basis`). Image offset `q_6`, text offset `q_7`. Five
//! triples `i = 0..4` with identity `id_i` (noise), in-span jitter `j_i`,
//! source emotion `i mod 6` and target emotion `(i + 2) mod 6`:
//!
//! ```text
//! source  normalize(0.7 id_i + 0.45 q_6 + 0.4 q_src + 0.05 j_i)
//! prompt  normalize(0.55 q_tgt + 0.8 q_7 + 0.2 n_i)
//! target  normalize(0.7 id_i + 0.45 q_6 + 0.4 q_tgt + 0.05 j_i)
//! ```
//!
//! tagged `triple:i` and `role:source|prompt|target`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bundle::{Embedding, EmbeddingBundle, EmbeddingKind};
use crate::error::{Error, Result};
use crate::vector;

pub const FIXTURE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    TwoModalityClusters,
    AttributeTrajectory,
    GroupedAttributes,
    PaeTriples,
}

impl Recipe {
    pub const ALL: [Recipe; 4] = [
        Recipe::TwoModalityClusters,
        Recipe::AttributeTrajectory,
        Recipe::GroupedAttributes,
        Recipe::PaeTriples,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::TwoModalityClusters => "two_modality_clusters",
            Recipe::AttributeTrajectory => "attribute_trajectory",
            Recipe::GroupedAttributes => "grouped_attributes",
            Recipe::PaeTriples => "pae_triples",
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::UnknownRecipe(s.to_string()))
    }
}

pub const EMOTIONS: [&str; 6] = ["happy", "sad", "angry", "fearful", "surprised", "disgusted"];

struct Draw {
    rng: ChaCha8Rng,
    dim: usize,
    frame: Vec<Vec<f64>>,
}

impl Draw {
    fn new(seed: u64, dim: usize, frame_size: usize) -> Self {
        let mut d = Draw {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dim,
            frame: Vec::with_capacity(frame_size),
        };
        while d.frame.len() < frame_size {
            let q = d.orthogonal_to_frame();
            d.frame.push(q);
        }
        d
    }

    fn gaussian(&mut self) -> Vec<f64> {
        (0..self.dim)
            .map(|_| StandardNormal.sample(&mut self.rng))
            .collect()
    }

    /// Unit Gaussian direction with the frame removed (twice, for accuracy).
    fn orthogonal_to_frame(&mut self) -> Vec<f64> {
        loop {
            let mut v = self.gaussian();
            for _ in 0..2 {
                for q in &self.frame {
                    let c = vector::dot(q, &v);
                    vector::axpy(-c, q, &mut v);
                }
            }
            if let Ok(u) = vector::normalize(&v) {
                if vector::norm(&v) > 1e-3 {
                    return u;
                }
            }
        }
    }

    /// Unit vector in the span of the given frame vectors.
    fn in_span(&mut self, indices: &[usize]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &i in indices {
            let c: f64 = StandardNormal.sample(&mut self.rng);
            vector::axpy(c, &self.frame[i], &mut v);
        }
        vector::normalize(&v).expect("frame vectors are independent")
    }

    fn q(&self, i: usize) -> &[f64] {
        &self.frame[i]
    }
}

/// `normalize(Σ weight·vector)`
fn mix(dim: usize, parts: &[(f64, &[f64])]) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for (w, x) in parts {
        vector::axpy(*w, x, &mut v);
    }
    vector::normalize(&v).expect("fixture mixtures are nonzero")
}

fn item(
    id: String,
    kind: EmbeddingKind,
    label: String,
    vector: Vec<f64>,
    tags: &[String],
) -> Embedding {
    Embedding::new(id, kind, label, vector).with_tags(tags.iter().cloned())
}

/// Build the bundle for `recipe`; identical seeds give identical bundles.
pub fn make_synthetic_fixture(recipe: Recipe, seed: u64) -> EmbeddingBundle {
    let (dim, items) = match recipe {
        Recipe::TwoModalityClusters => two_modality_clusters(seed),
        Recipe::AttributeTrajectory => attribute_trajectory(seed),
        Recipe::GroupedAttributes => grouped_attributes(seed),
        Recipe::PaeTriples => pae_triples(seed),
    };
    EmbeddingBundle::new(dim, items).expect("fixture recipes produce valid bundles")
}

/// [`make_synthetic_fixture`] by recipe name.
pub fn make_fixture_by_name(name: &str, seed: u64) -> Result<EmbeddingBundle> {
    Ok(make_synthetic_fixture(name.parse()?, seed))
}

fn two_modality_clusters(seed: u64) -> (usize, Vec<Embedding>) {
    const D: usize = 32;
    let mut d = Draw::new(seed, D, 5);
    let text_center = mix(D, &[(0.35, d.q(0)), (1.0, d.q(1))]);
    let image_center = d.q(0).to_vec();
    let mut items = Vec::new();
    for (c, concept) in ["dog", "cat", "car"].iter().enumerate() {
        let concept_dir = d.q(2 + c).to_vec();
        for (kind, center) in [
            (EmbeddingKind::Image, &image_center),
            (EmbeddingKind::Text, &text_center),
        ] {
            for k in 0..6 {
                let n = d.orthogonal_to_frame();
                let v = mix(D, &[(1.0, center), (0.5, &concept_dir), (0.35, &n)]);
                let tags = [format!("modality:{kind}"), format!("concept:{concept}")];
                items.push(item(
                    format!(
                        "{}_{concept}_{k}",
                        if kind == EmbeddingKind::Image {
                            "img"
                        } else {
                            "txt"
                        }
                    ),
                    kind,
                    format!("{concept} {kind} {k}"),
                    v,
                    &tags,
                ));
            }
        }
    }
    (D, items)
}

fn attribute_trajectory(seed: u64) -> (usize, Vec<Embedding>) {
    const D: usize = 32;
    let mut d = Draw::new(seed, D, 6);
    let mut items = Vec::new();
    for k in 0..4 {
        items.push(item(
            format!("attr_{k}"),
            EmbeddingKind::Text,
            format!("attribute {k}"),
            d.q(k).to_vec(),
            &["role:basis".to_string()],
        ));
    }
    let v = mix(D, &[(1.0, d.q(0)), (0.5, d.q(1))]);
    let a = mix(D, &[(1.0, d.q(4)), (0.2, d.q(2))]);
    for t in 0..12 {
        let n = d.orthogonal_to_frame();
        let f = mix(D, &[(1.0, &a), (0.1 * t as f64, &v), (0.01, &n)]);
        items.push(item(
            format!("frame_{t:02}"),
            EmbeddingKind::Image,
            format!("frame {t}"),
            f,
            &["role:frame".to_string(), format!("frame:{t}")],
        ));
    }
    let target = mix(D, &[(1.0, &v), (0.8, d.q(5))]);
    items.push(item(
        "txt_target".into(),
        EmbeddingKind::Text,
        "target attribute".into(),
        target,
        &["role:target".to_string()],
    ));
    (D, items)
}

fn grouped_attributes(seed: u64) -> (usize, Vec<Embedding>) {
    const D: usize = 32;
    let mut d = Draw::new(seed, D, 6);
    let mut items = Vec::new();
    let groups = ["joy", "sorrow", "anger"];
    for (g, name) in groups.iter().enumerate() {
        items.push(item(
            format!("proto_{name}"),
            EmbeddingKind::Text,
            name.to_string(),
            d.q(g).to_vec(),
            &["role:basis".to_string()],
        ));
    }
    for (g, name) in groups.iter().enumerate() {
        for k in 0..4 {
            let s = d.in_span(&[0, 1, 2]);
            let n = d.orthogonal_to_frame();
            let v = mix(D, &[(0.6, d.q(g)), (0.15, &s), (0.7, d.q(3)), (0.35, &n)]);
            items.push(item(
                format!("{name}_{k}"),
                EmbeddingKind::Text,
                format!("{name} text {k}"),
                v,
                &["role:item".to_string(), format!("group:{name}")],
            ));
        }
    }
    let source = mix(D, &[(0.5, d.q(0)), (0.8, d.q(4)), (0.3, d.q(3))]);
    items.push(item(
        "img_source".into(),
        EmbeddingKind::Image,
        "source image".into(),
        source,
        &["role:source".to_string()],
    ));
    let prompt = mix(D, &[(0.6, d.q(1)), (0.7, d.q(3)), (0.3, d.q(5))]);
    items.push(item(
        "txt_target".into(),
        EmbeddingKind::Text,
        "sorrow prompt".into(),
        prompt,
        &["role:prompt".to_string()],
    ));
    (D, items)
}

fn pae_triples(seed: u64) -> (usize, Vec<Embedding>) {
    const D: usize = 24;
    let mut d = Draw::new(seed, D, 8);
    let mut items = Vec::new();
    for (k, name) in EMOTIONS.iter().enumerate() {
        items.push(item(
            format!("emo_{name}"),
            EmbeddingKind::Text,
            name.to_string(),
            d.q(k).to_vec(),
            &["role:basis".to_string()],
        ));
    }
    let emotion_span: Vec<usize> = (0..6).collect();
    for i in 0..5 {
        let identity = d.orthogonal_to_frame();
        let jitter = d.in_span(&emotion_span);
        let noise = d.orthogonal_to_frame();
        let (src, tgt) = (i % 6, (i + 2) % 6);
        let face = |emotion: usize| {
            mix(
                D,
                &[
                    (0.7, &identity),
                    (0.45, d.q(6)),
                    (0.4, d.q(emotion)),
                    (0.05, &jitter),
                ],
            )
        };
        let tag = format!("triple:{i}");
        items.push(item(
            format!("img_{i}_{}", EMOTIONS[src]),
            EmbeddingKind::Image,
            format!("face {i}, {}", EMOTIONS[src]),
            face(src),
            &[tag.clone(), "role:source".into()],
        ));
        items.push(item(
            format!("txt_{i}_{}", EMOTIONS[tgt]),
            EmbeddingKind::Text,
            format!("a {} face", EMOTIONS[tgt]),
            mix(D, &[(0.55, d.q(tgt)), (0.8, d.q(7)), (0.2, &noise)]),
            &[tag.clone(), "role:prompt".into()],
        ));
        items.push(item(
            format!("tgt_{i}_{}", EMOTIONS[tgt]),
            EmbeddingKind::Image,
            format!("face {i}, {}", EMOTIONS[tgt]),
            face(tgt),
            &[tag, "role:target".into()],
        ));
    }
    (D, items)
}
