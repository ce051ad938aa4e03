use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::bundle::Embedding;
use crate::error::{Error, Result};
use crate::pca::principal_components;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point2d {
    pub id: String,
    pub label: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pca2d {
    pub points: Vec<Point2d>,
    /// Sample variance along the two components.
    pub explained_variance: [f64; 2],
}

impl Pca2d {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,label,x,y\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.id, p.label, p.x, p.y);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Pool labeled sets of embeddings and place each on the top two principal
/// components of the pooled, mean-centered collection.
pub fn pca2d(sets: &[(&str, &[Embedding])]) -> Result<Pca2d> {
    let pooled: Vec<(&str, &Embedding)> = sets
        .iter()
        .flat_map(|(label, items)| items.iter().map(move |e| (*label, e)))
        .collect();
    if pooled.len() < 3 {
        return Err(Error::RankDeficient {
            rank: pooled.len().saturating_sub(1),
            requested: 2,
        });
    }
    let points: Vec<&[f64]> = pooled.iter().map(|(_, e)| e.vector.as_slice()).collect();
    let pc = principal_components(&points, 2)?;
    let points = pooled
        .iter()
        .map(|(label, e)| {
            let xy = pc.transform(&e.vector);
            Point2d {
                id: e.id.clone(),
                label: label.to_string(),
                x: xy[0],
                y: xy[1],
            }
        })
        .collect();
    Ok(Pca2d {
        points,
        explained_variance: [pc.explained_variance[0], pc.explained_variance[1]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_are_rank_deficient() {
        let items: Vec<Embedding> = (0..5)
            .map(|i| Embedding::image(format!("p{i}"), vec![i as f64, 2.0 * i as f64, 0.0]))
            .collect();
        assert!(matches!(
            pca2d(&[("all", &items)]),
            Err(Error::RankDeficient {
                rank: 1,
                requested: 2
            })
        ));
    }

    #[test]
    fn too_few_points() {
        let items = vec![
            Embedding::image("a", vec![1.0, 0.0]),
            Embedding::image("b", vec![0.0, 1.0]),
        ];
        assert!(pca2d(&[("x", &items)]).is_err());
    }
}
