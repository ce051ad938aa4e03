//! Augmentation operators that push a projected image embedding `w` toward a
//! text embedding `e_T`, with strength set by the augmenting power `α`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subspace::{CorpusSubspace, ManifoldSet, SPAN_TOL};
use crate::vector::{self, check_dims};

/// `|Σ_k d_k|` below this means the text has no usable projection.
pub const NULL_TEXT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationKind {
    Simple,
    Plus,
    Exchange,
    ExchangeDistinct,
}

impl AugmentationKind {
    /// Short name used on the command line and in config ids.
    pub fn as_str(self) -> &'static str {
        match self {
            AugmentationKind::Simple => "simple",
            AugmentationKind::Plus => "plus",
            AugmentationKind::Exchange => "ex",
            AugmentationKind::ExchangeDistinct => "exd",
        }
    }
}

impl fmt::Display for AugmentationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AugmentationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(AugmentationKind::Simple),
            "plus" => Ok(AugmentationKind::Plus),
            "ex" | "exchange" => Ok(AugmentationKind::Exchange),
            "exd" | "exchange_distinct" => Ok(AugmentationKind::ExchangeDistinct),
            other => Err(Error::InvalidParameter {
                name: "aug",
                reason: format!("unknown augmentation '{other}' (expected simple|plus|ex|exd)"),
            }),
        }
    }
}

/// An augmentation operator together with its augmenting power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugKind {
    pub kind: AugmentationKind,
    pub alpha: f64,
}

impl AugKind {
    pub fn new(kind: AugmentationKind, alpha: f64) -> Result<Self> {
        let aug = AugKind { kind, alpha };
        aug.validate()?;
        Ok(aug)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            AugmentationKind::ExchangeDistinct => integer_alpha(self.alpha).map(|_| ()),
            _ => check_alpha(self.alpha),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidAlpha {
            alpha,
            reason: "must be a finite non-negative number",
        });
    }
    Ok(())
}

fn integer_alpha(alpha: f64) -> Result<usize> {
    if !alpha.is_finite() || alpha < 1.0 || alpha.fract() != 0.0 {
        return Err(Error::InvalidAlpha {
            alpha,
            reason: "distinct exchange needs a positive integer",
        });
    }
    Ok(alpha as usize)
}

/// `w + α·e_T`
pub fn aug_simple(w: &[f64], e_t: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_dims(w.len(), e_t.len())?;
    check_alpha(alpha)?;
    let mut out = w.to_vec();
    vector::axpy(alpha, e_t, &mut out);
    Ok(out)
}

/// Coefficient-preserving augmentation inside the subspace.
///
/// With `c_k = ⟨w, b_k⟩` and `d_k = ⟨Proj(e_T), b_k⟩`, returns
///
/// ```text
/// w − α Σ_k |c_k| b_k + (α Σ_k |c_k| / Σ_k d_k) · Proj(e_T)
/// ```
///
/// which equals `Σ_k (c_k − α|c_k|) b_k + …` whenever `w = Σ_k c_k b_k`
/// (every orthonormal basis). The sum of coefficients `Σ_k c_k` is preserved
/// on orthonormal bases, and `α = 0` returns `w` unchanged.
pub fn aug_plus(s: &CorpusSubspace, w: &[f64], e_t: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_dims(s.dim(), w.len())?;
    check_dims(s.dim(), e_t.len())?;
    check_alpha(alpha)?;
    let distance = s.distance_to_span(w)?;
    if distance > SPAN_TOL * vector::norm(w).max(1.0) {
        return Err(Error::SubspaceViolation { distance });
    }

    let projected_text = s.project(e_t)?;
    let d_sum: f64 = s.coefficients(&projected_text)?.iter().sum();
    if d_sum.abs() < NULL_TEXT_TOL {
        return Err(Error::NullTextProjection { sum: d_sum });
    }
    if alpha == 0.0 {
        return Ok(w.to_vec());
    }

    let c = s.coefficients(w)?;
    let abs_sum: f64 = c.iter().map(|x| x.abs()).sum();
    let mut out = w.to_vec();
    for (ck, b) in c.iter().zip(s.basis()) {
        vector::axpy(-alpha * ck.abs(), b, &mut out);
    }
    vector::axpy(alpha * abs_sum / d_sum, &projected_text, &mut out);
    Ok(out)
}

/// `w + α·(e_T − nearest)`, where `nearest` is the sample-set point closest
/// to the image embedding.
pub fn aug_exchange(w: &[f64], e_t: &[f64], nearest: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_dims(w.len(), e_t.len())?;
    check_dims(w.len(), nearest.len())?;
    check_alpha(alpha)?;
    let mut out = w.to_vec();
    vector::axpy(alpha, &vector::sub(e_t, nearest), &mut out);
    Ok(out)
}

/// One-for-α exchange: add `α·e_T`, subtract the `α` distinct members most
/// similar to `e_I`, each once.
pub fn aug_exchange_distinct(
    m: &ManifoldSet,
    w: &[f64],
    e_i: &[f64],
    e_t: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    check_dims(m.dim(), w.len())?;
    check_dims(m.dim(), e_t.len())?;
    let count = integer_alpha(alpha)?;
    if count > m.len() {
        return Err(Error::AlphaExceedsCorpus {
            alpha: count,
            members: m.len(),
        });
    }
    let mut out = w.to_vec();
    vector::axpy(alpha, e_t, &mut out);
    for idx in m.ranked(e_i, count)? {
        vector::axpy(-1.0, &m.members()[idx].vector, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::Embedding;
    use crate::subspace::{build_gs, build_raw, build_sample_set};
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    fn xy_plane() -> CorpusSubspace {
        build_gs(&[
            Embedding::text("x", vec![1.0, 0.0, 0.0]),
            Embedding::text("y", vec![0.0, 1.0, 0.0]),
        ])
        .unwrap()
    }

    fn axes3() -> ManifoldSet {
        build_sample_set(&[
            Embedding::text("x", vec![1.0, 0.0, 0.0]),
            Embedding::text("y", vec![0.0, 1.0, 0.0]),
            Embedding::text("z", vec![0.0, 0.0, 1.0]),
        ])
        .unwrap()
    }

    #[test]
    fn simple_examples() {
        assert_eq!(
            aug_simple(&[1.0, 0.0], &[0.0, 1.0], 2.0).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            aug_simple(&[1.0, 0.5], &[0.3, 1.0], 0.0).unwrap(),
            vec![1.0, 0.5]
        );
        assert_eq!(
            aug_simple(&[0.6, 0.0, 0.0], &[0.0, 1.0, 0.0], 1.0).unwrap(),
            vec![0.6, 1.0, 0.0]
        );
        assert!(matches!(
            aug_simple(&[1.0], &[1.0, 2.0], 1.0),
            Err(Error::DimMismatch { .. })
        ));
        assert!(matches!(
            aug_simple(&[1.0], &[1.0], -1.0),
            Err(Error::InvalidAlpha { .. })
        ));
    }

    #[test]
    fn plus_hand_evaluated() {
        let s = xy_plane();
        let w = [0.6, 0.0, 0.0];
        let t = [0.0, 1.0, 0.0];
        // c = (0.6, 0), d = (0, 1)
        assert!(close(
            &aug_plus(&s, &w, &t, 1.0).unwrap(),
            &[0.0, 0.6, 0.0],
            1e-12
        ));
        assert_eq!(aug_plus(&s, &w, &t, 0.0).unwrap(), w.to_vec());
        let a7 = aug_plus(&s, &w, &t, 7.0).unwrap();
        assert!(close(&a7, &[-3.6, 4.2, 0.0], 1e-12));
        assert!((a7[0] + a7[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn plus_errors() {
        let s = xy_plane();
        assert!(matches!(
            aug_plus(&s, &[0.6, 0.0, 0.0], &[0.0, 0.0, 1.0], 1.0),
            Err(Error::NullTextProjection { .. })
        ));
        // d = (1, -1) sums to zero
        assert!(matches!(
            aug_plus(&s, &[0.6, 0.0, 0.0], &[1.0, -1.0, 0.3], 1.0),
            Err(Error::NullTextProjection { .. })
        ));
        assert!(matches!(
            aug_plus(&s, &[0.6, 0.0, 0.8], &[0.0, 1.0, 0.0], 1.0),
            Err(Error::SubspaceViolation { .. })
        ));
    }

    #[test]
    fn plus_on_raw_basis_weakens_w_directly() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = build_raw(&[
            Embedding::text("a", vec![1.0, 0.0, 0.0]),
            Embedding::text("b", vec![h, h, 0.0]),
        ])
        .unwrap();
        // Raw bases are not orthonormal, so Σ c_k b_k != w; the weakening
        // term is applied to w itself.
        let w = s.project(&[0.2, 0.7, 0.4]).unwrap();
        let t = [0.1, 0.9, 0.3];
        let alpha = 1.5;
        let c = s.coefficients(&w).unwrap();
        let pt = s.project(&t).unwrap();
        let d: f64 = s.coefficients(&pt).unwrap().iter().sum();
        let abs: f64 = c.iter().map(|x| x.abs()).sum();
        let mut expected = w.clone();
        for (ck, b) in c.iter().zip(s.basis()) {
            vector::axpy(-alpha * ck.abs(), b, &mut expected);
        }
        vector::axpy(alpha * abs / d, &pt, &mut expected);
        let got = aug_plus(&s, &w, &t, alpha).unwrap();
        assert!(close(&got, &expected, 1e-12));
        assert!(s.distance_to_span(&got).unwrap() < 1e-9);
    }

    #[test]
    fn exchange_examples() {
        let got = aug_exchange(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(got, vec![0.0, 1.0, 0.0]);
        let w = [0.3, -0.2, 0.9];
        assert_eq!(
            aug_exchange(&w, &[1.0, 2.0, 3.0], &[0.0, 0.0, 1.0], 0.0).unwrap(),
            w.to_vec()
        );
        let t = [0.0, 0.6, 0.8];
        assert_eq!(aug_exchange(&w, &t, &t, 5.0).unwrap(), w.to_vec());
    }

    #[test]
    fn exchange_distinct_brute_force() {
        let m = axes3();
        let e_i = vector::normalize(&[0.9, 0.4, 0.2]).unwrap();
        let t = [0.0, 0.0, 1.0];
        let got = aug_exchange_distinct(&m, &e_i, &e_i, &t, 2.0).unwrap();
        // ranking by similarity: x (0.9), y (0.4), z (0.2)
        let expected: Vec<f64> = (0..3)
            .map(|k| e_i[k] + 2.0 * t[k] - [1.0, 0.0, 0.0][k] - [0.0, 1.0, 0.0][k])
            .collect();
        assert!(close(&got, &expected, 1e-15));
    }

    #[test]
    fn exchange_distinct_alpha_one_is_exchange() {
        let m = axes3();
        let e_i = vector::normalize(&[0.2, 0.7, -0.4]).unwrap();
        let t = vector::normalize(&[0.5, 0.1, 0.8]).unwrap();
        let nearest = &m.project_all(&e_i).unwrap().vector;
        let a = aug_exchange_distinct(&m, &e_i, &e_i, &t, 1.0).unwrap();
        let b = aug_exchange(&e_i, &t, nearest, 1.0).unwrap();
        assert!(close(&a, &b, 1e-15));
    }

    #[test]
    fn exchange_distinct_errors() {
        let m = axes3();
        let v = [1.0, 0.0, 0.0];
        assert!(matches!(
            aug_exchange_distinct(&m, &v, &v, &v, 4.0),
            Err(Error::AlphaExceedsCorpus {
                alpha: 4,
                members: 3
            })
        ));
        assert!(matches!(
            aug_exchange_distinct(&m, &v, &v, &v, 1.5),
            Err(Error::InvalidAlpha { .. })
        ));
        assert!(matches!(
            aug_exchange_distinct(&m, &v, &v, &v, 0.0),
            Err(Error::InvalidAlpha { .. })
        ));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "ex".parse::<AugmentationKind>().unwrap(),
            AugmentationKind::Exchange
        );
        assert_eq!(
            "exd".parse::<AugmentationKind>().unwrap(),
            AugmentationKind::ExchangeDistinct
        );
        assert!("foo".parse::<AugmentationKind>().is_err());
        assert!(AugKind::new(AugmentationKind::ExchangeDistinct, 2.5).is_err());
        assert!(AugKind::new(AugmentationKind::Plus, 2.5).is_ok());
    }

    fn unit(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, d)
            .prop_filter("nonzero", |v| vector::norm(v) > 0.1)
            .prop_map(|v| vector::normalize(&v).unwrap())
    }

    proptest! {
        #[test]
        fn plus_conserves_coefficient_sum(
            basis in prop::collection::vec(unit(6), 3),
            e_i in unit(6),
            e_t in unit(6),
            alpha in 0.0f64..20.0,
        ) {
            let prompts: Vec<Embedding> = basis.into_iter().enumerate()
                .map(|(i, v)| Embedding::text(format!("b{i}"), v)).collect();
            let Ok(s) = build_gs(&prompts) else { return Ok(()); };
            let w = s.project(&e_i).unwrap();
            match aug_plus(&s, &w, &e_t, alpha) {
                Ok(out) => {
                    let before: f64 = s.coefficients(&w).unwrap().iter().sum();
                    let after: f64 = s.coefficients(&out).unwrap().iter().sum();
                    prop_assert!((before - after).abs() < 1e-6);
                    prop_assert!(vector::norm(&vector::sub(&s.project(&out).unwrap(), &out)) < 1e-6);
                }
                Err(Error::NullTextProjection { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }

        #[test]
        fn simple_and_exchange_are_linear_in_alpha(
            w in unit(5), t in unit(5), n in unit(5), alpha in 0.0f64..10.0,
        ) {
            let one = vector::sub(&aug_simple(&w, &t, alpha).unwrap(), &w);
            let two = vector::sub(&aug_simple(&w, &t, 2.0 * alpha).unwrap(), &w);
            prop_assert!(close(&two, &vector::scale(&one, 2.0), 1e-9));
            let one = vector::sub(&aug_exchange(&w, &t, &n, alpha).unwrap(), &w);
            let two = vector::sub(&aug_exchange(&w, &t, &n, 2.0 * alpha).unwrap(), &w);
            prop_assert!(close(&two, &vector::scale(&one, 2.0), 1e-9));
        }
    }
}
