//! Labeled embeddings and the JSON bundle format.
//!
//! ```json
//! {"format_version":1,"dim":3,"items":[
//!   {"id":"img_001","kind":"image","label":"face 1","tags":["emotion:happy"],"vector":[0.1,0.2,0.3]}]}
//! ```
//!
//! Vectors are stored as given. Nothing here normalizes them.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Image,
    Text,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Image => "image",
            EmbeddingKind::Text => "text",
        }
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub id: String,
    pub kind: EmbeddingKind,
    pub label: String,
    #[serde(default)]
    pub tags: Vec<String>,
    pub vector: Vec<f64>,
}

impl Embedding {
    pub fn new(
        id: impl Into<String>,
        kind: EmbeddingKind,
        label: impl Into<String>,
        vector: Vec<f64>,
    ) -> Self {
        Embedding {
            id: id.into(),
            kind,
            label: label.into(),
            tags: Vec::new(),
            vector,
        }
    }

    pub fn image(id: impl Into<String>, vector: Vec<f64>) -> Self {
        let id = id.into();
        Embedding::new(id.clone(), EmbeddingKind::Image, id, vector)
    }

    pub fn text(id: impl Into<String>, vector: Vec<f64>) -> Self {
        let id = id.into();
        Embedding::new(id.clone(), EmbeddingKind::Text, id, vector)
    }

    pub fn with_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.tags.extend(tags.into_iter().map(Into::into));
        self
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.iter().any(|t| t == tag)
    }

    /// Value of a `key:value` tag. The pseudo-key `kind` yields the modality.
    pub fn tag_value(&self, key: &str) -> Option<&str> {
        if key == "kind" {
            return Some(self.kind.as_str());
        }
        self.tags
            .iter()
            .find_map(|t| t.strip_prefix(key).and_then(|rest| rest.strip_prefix(':')))
    }

    pub fn expect_kind(&self, kind: EmbeddingKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::KindMismatch {
                id: self.id.clone(),
                expected: kind.as_str(),
                found: self.kind.as_str(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingBundle {
    pub format_version: u32,
    pub dim: usize,
    pub items: Vec<Embedding>,
}

impl EmbeddingBundle {
    pub fn new(dim: usize, items: Vec<Embedding>) -> Result<Self> {
        let bundle = EmbeddingBundle {
            format_version: FORMAT_VERSION,
            dim,
            items,
        };
        bundle.validate().map_err(|message| Error::Schema {
            path: "<memory>".into(),
            message,
        })?;
        Ok(bundle)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.dim == 0 {
            return Err("dim must be positive".into());
        }
        let mut seen = HashSet::with_capacity(self.items.len());
        for item in &self.items {
            if !seen.insert(item.id.as_str()) {
                return Err(format!("duplicate id '{}'", item.id));
            }
            if item.vector.len() != self.dim {
                return Err(format!(
                    "item '{}' has {} components, dim is {}",
                    item.id,
                    item.vector.len(),
                    self.dim
                ));
            }
            if !vector::all_finite(&item.vector) {
                return Err(format!("item '{}' has non-finite components", item.id));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&Embedding> {
        self.items
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn with_tag<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a Embedding> + 'a {
        self.items.iter().filter(move |e| e.has_tag(tag))
    }

    pub fn of_kind(&self, kind: EmbeddingKind) -> impl Iterator<Item = &Embedding> + '_ {
        self.items.iter().filter(move |e| e.kind == kind)
    }
}

/// Read and validate a bundle file.
pub fn load_bundle(path: impl AsRef<Path>) -> Result<EmbeddingBundle> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_bundle(&text, path)
}

pub(crate) fn parse_bundle(text: &str, path: &Path) -> Result<EmbeddingBundle> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })?;
    let schema = |message: String| Error::Schema {
        path: path.into(),
        message,
    };
    let version = value
        .as_object()
        .ok_or_else(|| schema("top level must be an object".into()))?
        .get("format_version")
        .ok_or_else(|| schema("missing field `format_version`".into()))?;
    let version = version
        .as_i64()
        .ok_or_else(|| schema("`format_version` must be an integer".into()))?;
    if version != i64::from(FORMAT_VERSION) {
        return Err(Error::Version {
            path: path.into(),
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let bundle: EmbeddingBundle =
        serde_json::from_value(value).map_err(|e| schema(e.to_string()))?;
    bundle.validate().map_err(schema)?;
    Ok(bundle)
}

/// Write a bundle as compact JSON followed by a newline.
pub fn save_bundle(bundle: &EmbeddingBundle, path: impl AsRef<Path>) -> Result<()> {
    write_json(bundle, path.as_ref())
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string(value).map_err(|e| Error::Schema {
        path: path.into(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
