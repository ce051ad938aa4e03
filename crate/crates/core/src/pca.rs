//! Principal components by exact symmetric eigendecomposition.
//!
//! The smaller of the `D×D` covariance and the `n×n` Gram matrix of the
//! centered points is decomposed, so wide corpora (`n < D`) stay cheap.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::vector;

/// Eigenvalues at or below this fraction of the largest count as zero.
const RELATIVE_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PrincipalComponents {
    pub mean: Vec<f64>,
    /// Unit components, largest variance first.
    pub components: Vec<Vec<f64>>,
    /// Sample variance (denominator `n - 1`) along each component.
    pub explained_variance: Vec<f64>,
}

impl PrincipalComponents {
    /// Coordinates of `point` along each component, after centering.
    pub fn transform(&self, point: &[f64]) -> Vec<f64> {
        let centered = vector::sub(point, &self.mean);
        self.components
            .iter()
            .map(|c| vector::dot(c, &centered))
            .collect()
    }
}

/// Top-`n_components` principal directions of `points`.
///
/// Each component's largest-magnitude coordinate is made positive (first one
/// wins on ties) so results are reproducible.
pub fn principal_components(points: &[&[f64]], n_components: usize) -> Result<PrincipalComponents> {
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyInput("PCA corpus"));
    }
    if n_components == 0 {
        return Err(Error::InvalidParameter {
            name: "n_components",
            reason: "must be at least 1".into(),
        });
    }
    let dim = points[0].len();
    for p in points {
        vector::check_dims(dim, p.len())?;
    }
    if n_components > dim || n_components > n {
        return Err(Error::RankDeficient {
            rank: n.min(dim),
            requested: n_components,
        });
    }

    let mut mean = vec![0.0; dim];
    for p in points {
        vector::axpy(1.0 / n as f64, p, &mut mean);
    }
    let centered = DMatrix::from_fn(n, dim, |i, j| points[i][j] - mean[j]);
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };

    // (eigenvalue, direction in feature space), unnormalized variance
    let mut pairs: Vec<(f64, Vec<f64>)> = if n < dim {
        let gram = &centered * centered.transpose();
        let eig = SymmetricEigen::new(gram);
        (0..n)
            .map(|k| {
                let u = eig.eigenvectors.column(k);
                let dir = centered.transpose() * u;
                (eig.eigenvalues[k], dir.iter().copied().collect())
            })
            .collect()
    } else {
        let cov = centered.transpose() * &centered;
        let eig = SymmetricEigen::new(cov);
        (0..dim)
            .map(|k| {
                (
                    eig.eigenvalues[k],
                    eig.eigenvectors.column(k).iter().copied().collect(),
                )
            })
            .collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let largest = pairs.first().map_or(0.0, |p| p.0);
    let rank = if largest > 0.0 {
        pairs
            .iter()
            .filter(|p| p.0 > RELATIVE_RANK_TOL * largest)
            .count()
    } else {
        0
    };
    if rank < n_components {
        return Err(Error::RankDeficient {
            rank,
            requested: n_components,
        });
    }

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(n_components);
    let mut explained_variance = Vec::with_capacity(n_components);
    for (lambda, dir) in pairs.into_iter().take(n_components) {
        // Re-orthogonalize against earlier components to scrub solver noise.
        let mut dir = dir;
        for c in &components {
            let proj = vector::dot(c, &dir);
            vector::axpy(-proj, c, &mut dir);
        }
        let mut dir = vector::normalize(&dir)?;
        fix_sign(&mut dir);
        components.push(dir);
        explained_variance.push(lambda / denom);
    }

    Ok(PrincipalComponents {
        mean,
        components,
        explained_variance,
    })
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power iteration on the explicit covariance; independent of the
    /// eigen-solver path above.
    fn top_eigvec_by_power_iteration(points: &[Vec<f64>]) -> Vec<f64> {
        let n = points.len() as f64;
        let d = points[0].len();
        let mut mean = vec![0.0; d];
        for p in points {
            for j in 0..d {
                mean[j] += p[j] / n;
            }
        }
        let mut cov = vec![vec![0.0; d]; d];
        for p in points {
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]);
                }
            }
        }
        let mut v = vec![1.0; d];
        for _ in 0..500 {
            let w: Vec<f64> = (0..d)
                .map(|i| (0..d).map(|j| cov[i][j] * v[j]).sum())
                .collect();
            let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = w.iter().map(|x| x / nw).collect();
        }
        v
    }

    #[test]
    fn both_solver_paths_agree_with_power_iteration() {
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64 - 5.5;
                vec![
                    2.0 * t,
                    0.3 * (t * 1.7).sin(),
                    0.5 * t + 0.1 * (t * 3.1).cos(),
                ]
            })
            .collect();
        let oracle = top_eigvec_by_power_iteration(&pts);
        // n > D: covariance path
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let pc = principal_components(&refs, 1).unwrap();
        assert!(vector::dot(&pc.components[0], &oracle).abs() > 1.0 - 1e-9);
        // n < D: Gram path, by padding with zero coordinates
        let wide: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| {
                let mut q = p.clone();
                q.resize(20, 0.0);
                q
            })
            .collect();
        let refs: Vec<&[f64]> = wide.iter().map(|p| p.as_slice()).collect();
        let pcw = principal_components(&refs, 1).unwrap();
        assert!(vector::dot(&pcw.components[0][..3], &oracle).abs() > 1.0 - 1e-9);
        assert!((pc.explained_variance[0] - pcw.explained_variance[0]).abs() < 1e-9);
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
        let mut tie = vec![-0.5, 0.5];
        fix_sign(&mut tie);
        assert_eq!(tie, vec![0.5, -0.5]);
    }

    #[test]
    fn identical_points_are_rank_deficient() {
        let p = [1.0, 2.0, 3.0];
        let refs: Vec<&[f64]> = vec![&p, &p, &p];
        assert!(matches!(
            principal_components(&refs, 1),
            Err(Error::RankDeficient {
                rank: 0,
                requested: 1
            })
        ));
    }
}
