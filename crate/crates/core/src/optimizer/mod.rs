//! Latent optimization against embedding-space targets.
//!
//! A [`Generator`] stands in for a frozen image generator followed by an
//! image encoder: it maps a latent code `z` straight to an embedding. Plain
//! gradient descent on `z` then minimizes a cosine loss against one of four
//! targets (see [`LossSpec`]).

mod generator;

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use generator::{make_generator, seeded_latent, Generator, GeneratorKind};

use crate::bundle::write_json;
use crate::error::{Error, Result};
use crate::subspace::CorpusSubspace;
use crate::vector::{self, check_dims, ZERO_NORM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    NaiveText,
    Pae,
    Dpe,
    Directional,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::NaiveText => "naive",
            TargetKind::Pae => "pae",
            TargetKind::Dpe => "dpe",
            TargetKind::Directional => "directional",
        })
    }
}

impl FromStr for TargetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" | "naive_text" => Ok(TargetKind::NaiveText),
            "pae" => Ok(TargetKind::Pae),
            "dpe" => Ok(TargetKind::Dpe),
            "directional" => Ok(TargetKind::Directional),
            other => Err(Error::InvalidParameter {
                name: "target",
                reason: format!("unknown target '{other}' (expected naive|pae|dpe|directional)"),
            }),
        }
    }
}

/// What the generated embedding is pulled toward.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    /// `1 − cos(g(z), e_T)`
    NaiveText { text: Vec<f64> },
    /// `1 − cos(g(z), PAE)`, with the PAE fixed before descent starts.
    Pae { target: Vec<f64> },
    /// `1 − cos(Proj(g(z)), Proj(e_T))`
    Dpe {
        subspace: CorpusSubspace,
        projected_text: Vec<f64>,
    },
    /// `1 − cos(g(z) − e_I₀, e_T − e_neutral)`
    Directional {
        origin: Vec<f64>,
        text: Vec<f64>,
        neutral: Vec<f64>,
    },
}

impl LossSpec {
    pub fn naive_text(text: Vec<f64>) -> Self {
        LossSpec::NaiveText { text }
    }

    pub fn pae(target: Vec<f64>) -> Self {
        LossSpec::Pae { target }
    }

    /// Projects `text` once; fails if the projection vanishes.
    pub fn dpe(subspace: CorpusSubspace, text: &[f64]) -> Result<Self> {
        let projected_text = subspace.project(text)?;
        if vector::norm(&projected_text) < ZERO_NORM {
            return Err(Error::DegenerateDirection {
                what: "projected text",
                step: None,
            });
        }
        Ok(LossSpec::Dpe {
            subspace,
            projected_text,
        })
    }

    pub fn directional(origin: Vec<f64>, text: Vec<f64>, neutral: Vec<f64>) -> Self {
        LossSpec::Directional {
            origin,
            text,
            neutral,
        }
    }

    pub fn kind(&self) -> TargetKind {
        match self {
            LossSpec::NaiveText { .. } => TargetKind::NaiveText,
            LossSpec::Pae { .. } => TargetKind::Pae,
            LossSpec::Dpe { .. } => TargetKind::Dpe,
            LossSpec::Directional { .. } => TargetKind::Directional,
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self {
            LossSpec::NaiveText { text: t } | LossSpec::Pae { target: t } => {
                check_dims(dim, t.len())
            }
            LossSpec::Dpe {
                subspace,
                projected_text,
            } => {
                check_dims(dim, subspace.dim())?;
                check_dims(dim, projected_text.len())
            }
            LossSpec::Directional {
                origin,
                text,
                neutral,
            } => {
                check_dims(dim, origin.len())?;
                check_dims(dim, text.len())?;
                check_dims(dim, neutral.len())
            }
        }
    }
}

/// `1 − cos(u, t)` and its gradient with respect to `u`.
fn cosine_loss(u: &[f64], t: &[f64], what: &'static str) -> Result<(f64, Vec<f64>)> {
    let (nu, nt) = (vector::norm(u), vector::norm(t));
    if nu < ZERO_NORM || nt < ZERO_NORM {
        return Err(Error::DegenerateDirection { what, step: None });
    }
    let c = vector::dot(u, t) / (nu * nt);
    // ∂cos/∂u = t/(|u||t|) − cos·u/|u|²
    let grad = u
        .iter()
        .zip(t)
        .map(|(ui, ti)| -(ti / (nu * nt) - c * ui / (nu * nu)))
        .collect();
    Ok((1.0 - c, grad))
}

/// Loss at `z` and its analytic gradient with respect to `z`.
pub fn loss_value_and_grad(spec: &LossSpec, g: &Generator, z: &[f64]) -> Result<(f64, Vec<f64>)> {
    spec.check(g.out_dim())?;
    let out = g.forward(z)?;
    let (loss, grad_out) = match spec {
        LossSpec::NaiveText { text: t } | LossSpec::Pae { target: t } => {
            cosine_loss(&out, t, "generated embedding")?
        }
        LossSpec::Dpe {
            subspace,
            projected_text,
        } => {
            let projected = subspace.project(&out)?;
            let (loss, grad_proj) = cosine_loss(&projected, projected_text, "projected output")?;
            // Σ b_k b_kᵀ is symmetric, so its transpose is the projection itself.
            (loss, subspace.project(&grad_proj)?)
        }
        LossSpec::Directional {
            origin,
            text,
            neutral,
        } => {
            let moved = vector::sub(&out, origin);
            let direction = vector::sub(text, neutral);
            cosine_loss(&moved, &direction, "edit direction")?
        }
    };
    Ok((loss, g.pullback(z, &grad_out)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentSettings {
    pub lr: f64,
    pub max_steps: usize,
    pub tol: f64,
    /// Keep a copy of `z` at every step.
    #[serde(default)]
    pub record_latents: bool,
}

impl Default for DescentSettings {
    fn default() -> Self {
        DescentSettings {
            lr: 0.1,
            max_steps: 500,
            tol: 1e-3,
            record_latents: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latent: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub target: TargetKind,
    pub steps: Vec<TraceStep>,
    pub final_latent: Vec<f64>,
    pub final_output: Vec<f64>,
    pub converged: bool,
    pub settings: DescentSettings,
}

impl OptimizationTrace {
    pub fn initial_loss(&self) -> f64 {
        self.steps[0].loss
    }

    pub fn final_loss(&self) -> f64 {
        self.steps[self.steps.len() - 1].loss
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for s in &self.steps {
            let _ = writeln!(out, "{},{}", s.step, s.loss);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(self, path.as_ref())
    }
}

/// Fixed-step gradient descent `z ← z − lr·∇loss`.
///
/// Step `k` records the loss at the current `z`; if it is below `tol` the
/// run stops there as converged, otherwise `z` is updated. At most
/// `max_steps` steps are recorded.
pub fn optimize(
    spec: &LossSpec,
    g: &Generator,
    z0: &[f64],
    settings: DescentSettings,
) -> Result<OptimizationTrace> {
    if !(settings.lr > 0.0 && settings.lr.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "lr",
            reason: format!("{} is not a positive finite step size", settings.lr),
        });
    }
    if settings.max_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "max_steps",
            reason: "must be at least 1".into(),
        });
    }
    check_dims(g.latent_dim(), z0.len())?;

    let mut z = z0.to_vec();
    let mut steps = Vec::with_capacity(settings.max_steps.min(4096));
    let mut converged = false;
    for step in 0..settings.max_steps {
        let (loss, grad) = loss_value_and_grad(spec, g, &z).map_err(|e| e.at_step(step))?;
        if !loss.is_finite() {
            return Err(Error::DegenerateDirection {
                what: "non-finite loss",
                step: Some(step),
            });
        }
        steps.push(TraceStep {
            step,
            loss,
            latent: settings.record_latents.then(|| z.clone()),
        });
        if loss < settings.tol {
            converged = true;
            break;
        }
        vector::axpy(-settings.lr, &grad, &mut z);
    }
    let final_output = g.forward(&z)?;
    Ok(OptimizationTrace {
        target: spec.kind(),
        steps,
        final_latent: z,
        final_output,
        converged,
        settings,
    })
}

/// Largest relative disagreement between the analytic gradient and central
/// differences, over latent coordinates.
pub fn finite_diff_check(spec: &LossSpec, g: &Generator, z: &[f64], eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("{eps} is not a positive finite step"),
        });
    }
    let (_, analytic) = loss_value_and_grad(spec, g, z)?;
    let mut worst = 0.0f64;
    let mut probe = z.to_vec();
    for i in 0..z.len() {
        probe[i] = z[i] + eps;
        let (plus, _) = loss_value_and_grad(spec, g, &probe)?;
        probe[i] = z[i] - eps;
        let (minus, _) = loss_value_and_grad(spec, g, &probe)?;
        probe[i] = z[i];
        let numeric = (plus - minus) / (2.0 * eps);
        let rel = (analytic[i] - numeric).abs() / numeric.abs().max(1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// `(I − P) v`: the part of `v` outside the subspace.
pub fn off_subspace(s: &CorpusSubspace, v: &[f64]) -> Result<Vec<f64>> {
    Ok(vector::sub(v, &s.project(v)?))
}

/// Cosine between the off-subspace part of `output` and `residual`.
///
/// Near 1 means the edit left the attribute-irrelevant content alone.
pub fn residual_alignment(s: &CorpusSubspace, output: &[f64], residual: &[f64]) -> Result<f64> {
    vector::cosine_similarity(&off_subspace(s, output)?, residual)
}

/// `1 − cos` between the off-subspace parts of two outputs: how far the
/// content outside the subspace turned during an edit.
pub fn off_subspace_drift(s: &CorpusSubspace, before: &[f64], after: &[f64]) -> Result<f64> {
    Ok(1.0 - vector::cosine_similarity(&off_subspace(s, before)?, &off_subspace(s, after)?)?)
}
