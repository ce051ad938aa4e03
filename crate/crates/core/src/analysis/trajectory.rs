use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::subspace::CorpusSubspace;
use crate::vector::{self, check_dims, ZERO_NORM};

/// What each frame is compared against.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    FirstFrame,
    Text(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesSpace {
    Full,
    Subspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesReference {
    FirstFrame,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySeries {
    pub space: SeriesSpace,
    pub reference: SeriesReference,
    /// Cosine per frame index.
    pub values: Vec<f64>,
}

impl TrajectorySeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,cosine\n");
        for (t, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Cosine of every frame to a reference, either in the full space or after
/// projecting frames and reference onto `subspace`.
pub fn trajectory_similarity(
    frames: &[Vec<f64>],
    reference: &Reference,
    subspace: Option<&CorpusSubspace>,
) -> Result<TrajectorySeries> {
    if frames.len() < 2 {
        return Err(Error::EmptyInput("trajectory needs at least two frames"));
    }
    let dim = frames[0].len();
    let transform = |v: &[f64], what: &'static str| -> Result<Vec<f64>> {
        check_dims(dim, v.len())?;
        let out = match subspace {
            Some(s) => s.project(v)?,
            None => v.to_vec(),
        };
        if vector::norm(&out) < ZERO_NORM {
            return Err(Error::DegenerateDirection { what, step: None });
        }
        Ok(out)
    };
    let reference_vec = match reference {
        Reference::FirstFrame => transform(&frames[0], "reference frame")?,
        Reference::Text(t) => transform(t, "reference text")?,
    };
    let values = frames
        .iter()
        .map(|f| vector::cosine_similarity(&transform(f, "frame")?, &reference_vec))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectorySeries {
        space: if subspace.is_some() {
            SeriesSpace::Subspace
        } else {
            SeriesSpace::Full
        },
        reference: match reference {
            Reference::FirstFrame => SeriesReference::FirstFrame,
            Reference::Text(_) => SeriesReference::Text,
        },
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::Embedding;
    use crate::subspace::build_gs;

    #[test]
    fn constant_frames_are_all_ones() {
        let frames = vec![vec![0.3, 0.4, 0.5]; 4];
        let s = build_gs(&[Embedding::text("x", vec![1.0, 0.0, 0.0])]).unwrap();
        for space in [None, Some(&s)] {
            let series = trajectory_similarity(&frames, &Reference::FirstFrame, space).unwrap();
            assert!(series.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn errors() {
        assert!(trajectory_similarity(&[vec![1.0]], &Reference::FirstFrame, None).is_err());
        let s = build_gs(&[Embedding::text("x", vec![1.0, 0.0])]).unwrap();
        let frames = vec![vec![0.0, 1.0], vec![1.0, 1.0]];
        assert!(matches!(
            trajectory_similarity(&frames, &Reference::FirstFrame, Some(&s)),
            Err(Error::DegenerateDirection { .. })
        ));
        let frames = vec![vec![1.0, 1.0], vec![1.0, 0.0]];
        assert!(matches!(
            trajectory_similarity(&frames, &Reference::Text(vec![1.0, 0.0, 0.0]), None),
            Err(Error::DimMismatch { .. })
        ));
    }
}
