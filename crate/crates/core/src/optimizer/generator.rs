use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::check_dims;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Linear,
    Mlp1,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Linear => "linear",
            GeneratorKind::Mlp1 => "mlp1",
        })
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(GeneratorKind::Linear),
            "mlp1" => Ok(GeneratorKind::Mlp1),
            other => Err(Error::InvalidParameter {
                name: "generator",
                reason: format!("unknown generator '{other}' (expected linear|mlp1)"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Params {
    /// `out = W z + b`
    Linear { w: DMatrix<f64>, b: DVector<f64> },
    /// `out = W2 tanh(W1 z + b1) + b2`
    Mlp1 {
        w1: DMatrix<f64>,
        b1: DVector<f64>,
        w2: DMatrix<f64>,
        b2: DVector<f64>,
    },
}

/// A small differentiable map from latent codes to embedding space.
///
/// Parameters are drawn from ChaCha8 seeded with `seed`, uniform in
/// `[-1/√fan_in, 1/√fan_in]`, weights before biases, row-major. The linear
/// generator with `seed = 0` and `latent_dim == out_dim` is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    kind: GeneratorKind,
    latent_dim: usize,
    out_dim: usize,
    hidden: Option<usize>,
    seed: u64,
    params: Params,
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize) -> DMatrix<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

fn uniform_vector(rng: &mut ChaCha8Rng, len: usize, fan_in: usize) -> DVector<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    DVector::from_iterator(len, (0..len).map(|_| rng.random_range(-bound..bound)))
}

/// Build a generator. `hidden` is required for `mlp1` and ignored otherwise.
pub fn make_generator(
    kind: GeneratorKind,
    seed: u64,
    latent_dim: usize,
    out_dim: usize,
    hidden: Option<usize>,
) -> Result<Generator> {
    if latent_dim == 0 || out_dim == 0 {
        return Err(Error::BadDims(format!(
            "latent_dim={latent_dim}, out_dim={out_dim}; both must be ≥ 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (params, hidden) = match kind {
        GeneratorKind::Linear if seed == 0 && latent_dim == out_dim => (
            Params::Linear {
                w: DMatrix::identity(out_dim, latent_dim),
                b: DVector::zeros(out_dim),
            },
            None,
        ),
        GeneratorKind::Linear => (
            Params::Linear {
                w: uniform_matrix(&mut rng, out_dim, latent_dim, latent_dim),
                b: uniform_vector(&mut rng, out_dim, latent_dim),
            },
            None,
        ),
        GeneratorKind::Mlp1 => {
            let h = match hidden {
                Some(h) if h >= 1 => h,
                _ => return Err(Error::BadDims("mlp1 needs a hidden width ≥ 1".into())),
            };
            let w1 = uniform_matrix(&mut rng, h, latent_dim, latent_dim);
            let b1 = uniform_vector(&mut rng, h, latent_dim);
            let w2 = uniform_matrix(&mut rng, out_dim, h, h);
            let b2 = uniform_vector(&mut rng, out_dim, h);
            (Params::Mlp1 { w1, b1, w2, b2 }, Some(h))
        }
    };
    Ok(Generator {
        kind,
        latent_dim,
        out_dim,
        hidden,
        seed,
        params,
    })
}

/// Starting latent drawn uniformly from `[-1, 1]^dim`, on ChaCha8 stream 1
/// so it never reuses the parameter draws of a generator with the same seed.
pub fn seeded_latent(seed: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

impl Generator {
    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn hidden(&self) -> Option<usize> {
        self.hidden
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn forward(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.latent_dim, z.len())?;
        let z = DVector::from_column_slice(z);
        let out = match &self.params {
            Params::Linear { w, b } => w * z + b,
            Params::Mlp1 { w1, b1, w2, b2 } => {
                let h = (w1 * z + b1).map(f64::tanh);
                w2 * h + b2
            }
        };
        Ok(out.iter().copied().collect())
    }

    /// `∂ out / ∂ z`, shape `out_dim × latent_dim`.
    pub fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        check_dims(self.latent_dim, z.len())?;
        Ok(match &self.params {
            Params::Linear { w, .. } => w.clone(),
            Params::Mlp1 { w1, b1, w2, .. } => {
                let pre = w1 * DVector::from_column_slice(z) + b1;
                let slope = pre.map(|x| 1.0 - x.tanh().powi(2));
                let mut scaled = w1.clone();
                for (mut row, s) in scaled.row_iter_mut().zip(slope.iter()) {
                    row *= *s;
                }
                w2 * scaled
            }
        })
    }

    /// `Jᵀ v`: pulls an output-space gradient back to latent space.
    pub fn pullback(&self, z: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.out_dim, v.len())?;
        let jt_v = self.jacobian(z)?.transpose() * DVector::from_column_slice(v);
        Ok(jt_v.iter().copied().collect())
    }

    /// Least-squares latent whose output is closest to `target`.
    ///
    /// Only defined for linear generators; returns `None` for `mlp1` or when
    /// the weight matrix is too ill-conditioned to solve.
    pub fn invert(&self, target: &[f64]) -> Option<Vec<f64>> {
        let Params::Linear { w, b } = &self.params else {
            return None;
        };
        if target.len() != self.out_dim {
            return None;
        }
        let rhs = DVector::from_column_slice(target) - b;
        let z = w.clone().svd(true, true).solve(&rhs, 1e-12).ok()?;
        Some(z.iter().copied().collect())
    }
}
