use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::bundle::{Embedding, EmbeddingBundle};
use crate::error::{Error, Result};
use crate::subspace::CorpusSubspace;
use crate::vector::{self, ZERO_NORM};

/// Group-averaged cosine similarities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityMatrix {
    pub row_groups: Vec<String>,
    pub col_groups: Vec<String>,
    /// `values[i][j]`: mean cosine over pairs drawn from row group `i` and
    /// column group `j`.
    pub values: Vec<Vec<f64>>,
    /// Number of distinct pairs behind each cell.
    pub counts: Vec<Vec<usize>>,
}

impl SimilarityMatrix {
    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.row_groups.iter().position(|g| g == row)?;
        let j = self.col_groups.iter().position(|g| g == col)?;
        Some(self.values[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("row_group,col_group,mean,count\n");
        for (i, r) in self.row_groups.iter().enumerate() {
            for (j, c) in self.col_groups.iter().enumerate() {
                let _ = writeln!(out, "{r},{c},{},{}", self.values[i][j], self.counts[i][j]);
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Items grouped by `key`, groups in order of first appearance.
fn group_items<'a>(items: &'a [Embedding], key: &str) -> Result<Vec<(String, Vec<&'a Embedding>)>> {
    let mut groups: Vec<(String, Vec<&Embedding>)> = Vec::new();
    for item in items {
        let g = item.tag_value(key).ok_or_else(|| Error::MissingTag {
            id: item.id.clone(),
            key: key.to_string(),
        })?;
        match groups.iter_mut().find(|(name, _)| name == g) {
            Some((_, members)) => members.push(item),
            None => groups.push((g.to_string(), vec![item])),
        }
    }
    Ok(groups)
}

/// Mean pairwise cosine between every pair of groups, where an item's group
/// is the value of its `key:value` tag (`kind` groups by modality).
///
/// Diagonal cells leave out self-pairs, so a singleton group has nothing to
/// average and is reported as [`Error::EmptyGroup`].
pub fn similarity_matrix(bundle: &EmbeddingBundle, key: &str) -> Result<SimilarityMatrix> {
    if bundle.items.is_empty() {
        return Err(Error::EmptyGroup(key.to_string()));
    }
    let groups = group_items(&bundle.items, key)?;
    let units: Vec<(String, Vec<Vec<f64>>)> = groups
        .into_iter()
        .map(|(name, members)| {
            let vs = members
                .iter()
                .map(|e| vector::normalize(&e.vector))
                .collect::<Result<Vec<_>>>()?;
            Ok((name, vs))
        })
        .collect::<Result<_>>()?;

    let n = units.len();
    let mut values = vec![vec![0.0; n]; n];
    let mut counts = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in i..n {
            let (a, b) = (&units[i].1, &units[j].1);
            let mut sum = 0.0;
            let mut count = 0usize;
            if i == j {
                for p in 0..a.len() {
                    for q in p + 1..a.len() {
                        sum += vector::dot(&a[p], &a[q]);
                        count += 1;
                    }
                }
            } else {
                for x in a {
                    for y in b {
                        sum += vector::dot(x, y);
                        count += 1;
                    }
                }
            }
            if count == 0 {
                return Err(Error::EmptyGroup(units[i].0.clone()));
            }
            let mean = (sum / count as f64).clamp(-1.0, 1.0);
            values[i][j] = mean;
            values[j][i] = mean;
            counts[i][j] = count;
            counts[j][i] = count;
        }
    }
    let names: Vec<String> = units.into_iter().map(|(n, _)| n).collect();
    Ok(SimilarityMatrix {
        row_groups: names.clone(),
        col_groups: names,
        values,
        counts,
    })
}

/// Item-level cosine matrix ordered by group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatMap {
    pub ids: Vec<String>,
    pub groups: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl HeatMap {
    /// Mean over distinct same-group pairs (diagonal excluded).
    pub fn within_block_mean(&self) -> f64 {
        self.block_means().0
    }

    /// Mean over pairs from different groups.
    pub fn off_block_mean(&self) -> f64 {
        self.block_means().1
    }

    /// Within-block mean minus off-block mean.
    pub fn block_contrast(&self) -> f64 {
        let (within, off) = self.block_means();
        within - off
    }

    fn block_means(&self) -> (f64, f64) {
        let (mut ws, mut wn, mut os, mut on) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..self.ids.len() {
            for j in i + 1..self.ids.len() {
                if self.groups[i] == self.groups[j] {
                    ws += self.values[i][j];
                    wn += 1;
                } else {
                    os += self.values[i][j];
                    on += 1;
                }
            }
        }
        let mean = |s: f64, n: usize| if n == 0 { f64::NAN } else { s / n as f64 };
        (mean(ws, wn), mean(os, on))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("row_id,col_id,row_group,col_group,cosine\n");
        for i in 0..self.ids.len() {
            for j in 0..self.ids.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    self.ids[i], self.ids[j], self.groups[i], self.groups[j], self.values[i][j]
                );
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Full pairwise cosine matrix of the items tagged with `key`, ordered by
/// group. `groups` restricts and orders the groups (default: every group in
/// order of first appearance). With `subspace`, items are projected first.
pub fn group_heatmap(
    bundle: &EmbeddingBundle,
    key: &str,
    groups: Option<&[String]>,
    subspace: Option<&CorpusSubspace>,
) -> Result<HeatMap> {
    let tagged: Vec<Embedding> = bundle
        .items
        .iter()
        .filter(|e| e.tag_value(key).is_some())
        .cloned()
        .collect();
    let mut grouped = group_items(&tagged, key)?;
    if let Some(order) = groups {
        let mut picked = Vec::with_capacity(order.len());
        for name in order {
            let pos = grouped
                .iter()
                .position(|(g, _)| g == name)
                .ok_or_else(|| Error::EmptyGroup(name.clone()))?;
            picked.push(grouped.swap_remove(pos));
        }
        grouped = picked;
    }

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut vecs = Vec::new();
    for (g, members) in &grouped {
        for e in members {
            let v = match subspace {
                Some(s) => s.project(&e.vector)?,
                None => e.vector.clone(),
            };
            if vector::norm(&v) < ZERO_NORM {
                return Err(Error::DegenerateDirection {
                    what: "projected item",
                    step: None,
                });
            }
            ids.push(e.id.clone());
            labels.push(g.clone());
            vecs.push(vector::normalize(&v)?);
        }
    }
    if ids.len() < 2 {
        return Err(Error::EmptyInput("heat map needs at least two items"));
    }
    let n = ids.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in i + 1..n {
            let c = vector::dot(&vecs[i], &vecs[j]).clamp(-1.0, 1.0);
            values[i][j] = c;
            values[j][i] = c;
        }
    }
    Ok(HeatMap {
        ids,
        groups: labels,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::EmbeddingKind;

    fn item(id: &str, group: &str, v: Vec<f64>) -> Embedding {
        Embedding::new(id, EmbeddingKind::Text, id, v).with_tags([format!("g:{group}")])
    }

    #[test]
    fn orthogonal_groups() {
        let b = EmbeddingBundle::new(
            2,
            vec![
                item("a1", "A", vec![1.0, 0.0]),
                item("a2", "A", vec![2.0, 0.0]),
                item("b1", "B", vec![0.0, 1.0]),
                item("b2", "B", vec![0.0, 3.0]),
            ],
        )
        .unwrap();
        let m = similarity_matrix(&b, "g").unwrap();
        assert_eq!(m.get("A", "A"), Some(1.0));
        assert_eq!(m.get("B", "B"), Some(1.0));
        assert_eq!(m.get("A", "B"), Some(0.0));
        assert_eq!(m.counts, vec![vec![1, 4], vec![4, 1]]);
        assert!(m
            .to_csv()
            .starts_with("row_group,col_group,mean,count\nA,A,1,1\n"));
    }

    #[test]
    fn grouping_errors() {
        let missing = EmbeddingBundle::new(
            1,
            vec![item("a", "A", vec![1.0]), Embedding::text("x", vec![1.0])],
        )
        .unwrap();
        assert!(matches!(
            similarity_matrix(&missing, "g"),
            Err(Error::MissingTag { .. })
        ));
        let single = EmbeddingBundle::new(1, vec![item("a", "A", vec![1.0])]).unwrap();
        assert!(matches!(
            similarity_matrix(&single, "g"),
            Err(Error::EmptyGroup(_))
        ));
        let empty = EmbeddingBundle::new(1, vec![]).unwrap();
        assert!(matches!(
            similarity_matrix(&empty, "g"),
            Err(Error::EmptyGroup(_))
        ));
    }

    #[test]
    fn kind_pseudo_key() {
        let b = EmbeddingBundle::new(
            2,
            vec![
                Embedding::image("i1", vec![1.0, 0.1]),
                Embedding::image("i2", vec![1.0, -0.1]),
                Embedding::text("t1", vec![0.1, 1.0]),
                Embedding::text("t2", vec![-0.1, 1.0]),
            ],
        )
        .unwrap();
        let m = similarity_matrix(&b, "kind").unwrap();
        assert_eq!(m.row_groups, vec!["image", "text"]);
        assert!(m.get("image", "image").unwrap() > m.get("image", "text").unwrap());
    }

    #[test]
    fn heatmap_diagonal_and_order() {
        let b = EmbeddingBundle::new(
            2,
            vec![
                item("b1", "B", vec![0.0, 1.0]),
                item("a1", "A", vec![1.0, 0.0]),
                item("b2", "B", vec![0.3, 1.0]),
            ],
        )
        .unwrap();
        let order = vec!["A".to_string(), "B".to_string()];
        let h = group_heatmap(&b, "g", Some(&order), None).unwrap();
        assert_eq!(h.ids, vec!["a1", "b1", "b2"]);
        for i in 0..3 {
            assert_eq!(h.values[i][i], 1.0);
        }
        assert!(h.block_contrast() > 0.0);
    }

    #[test]
    fn heatmap_zero_projection() {
        let s = crate::subspace::build_gs(&[Embedding::text("x", vec![1.0, 0.0])]).unwrap();
        let b = EmbeddingBundle::new(
            2,
            vec![
                item("a", "A", vec![1.0, 0.0]),
                item("b", "A", vec![0.0, 1.0]),
            ],
        )
        .unwrap();
        assert!(matches!(
            group_heatmap(&b, "g", None, Some(&s)),
            Err(Error::DegenerateDirection { .. })
        ));
    }
}
