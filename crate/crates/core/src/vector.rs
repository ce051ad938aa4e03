//! Dense vector primitives shared by every other module.
//!
//! Vectors are plain `f64` slices. Functions that combine two vectors check
//! that their lengths agree and report [`Error::DimMismatch`] otherwise.

use crate::error::{Error, Result};

/// Norms below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

pub fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, got })
    }
}

/// Inner product. Panics in debug builds on a length mismatch; use
/// [`try_dot`] where the lengths come from user data.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn try_dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    Ok(dot(a, b))
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Scale `v` to unit Euclidean norm.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if n < ZERO_NORM || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Cosine of the angle between `a` and `b`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    let (na, nb) = (norm(a), norm(b));
    if na < ZERO_NORM || nb < ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn normalize_examples() {
        assert!(close(&normalize(&[3.0, 4.0]).unwrap(), &[0.6, 0.8], 1e-15));
        assert!(close(
            &normalize(&[0.0, 0.0, 1.0]).unwrap(),
            &[0.0, 0.0, 1.0],
            0.0 + 1e-15
        ));
        assert!(matches!(normalize(&[0.0; 3]), Err(Error::ZeroVector)));
        assert!(matches!(normalize(&[1e-13, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
        assert!((cosine_similarity(&[1.0, 1.0], &[2.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_errors() {
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            cosine_similarity(&[1.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(Error::DimMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    #[test]
    fn cosine_is_clamped() {
        // Without clamping this lands a hair above 1.
        let a = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
        let c = cosine_similarity(&a, &a).unwrap();
        assert!(c <= 1.0);
        assert!((c - 1.0).abs() < 1e-9);
    }

    fn nonzero_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, d).prop_filter("nonzero", |v| norm(v) > 1e-3)
    }

    proptest! {
        #[test]
        fn normalized_has_unit_norm(v in nonzero_vec(6)) {
            let u = normalize(&v).unwrap();
            prop_assert!((norm(&u) - 1.0).abs() < 1e-6);
            prop_assert!(dot(&u, &v) > 0.0);
        }

        #[test]
        fn cosine_symmetric_and_scale_invariant(
            a in nonzero_vec(5), b in nonzero_vec(5), s in 0.01f64..100.0
        ) {
            let ab = cosine_similarity(&a, &b).unwrap();
            prop_assert!((ab - cosine_similarity(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!((ab - cosine_similarity(&scale(&a, s), &b).unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
        }

        #[test]
        fn self_cosine_is_one(a in nonzero_vec(8)) {
            prop_assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn distance_matches_cosine_for_unit_vectors(a in nonzero_vec(7), b in nonzero_vec(7)) {
            let (a, b) = (normalize(&a).unwrap(), normalize(&b).unwrap());
            let d = euclidean_distance(&a, &b).unwrap();
            let c = cosine_similarity(&a, &b).unwrap();
            prop_assert!((d - (2.0 - 2.0 * c).max(0.0).sqrt()).abs() < 1e-6);
        }
    }
}
