use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::scalar::Scalar;

use super::Polytope;

const PRIMES: [u64; 4] = [2, 3, 5, 7];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * inv;
        index /= base;
        inv /= base as f64;
    }
    out
}

/// `min_i |<u_i, v>|` over the facet normals.
pub fn min_genericity<S: Scalar>(p: &Polytope<S>, v: &[S]) -> S {
    p.halfspaces()
        .iter()
        .map(|h| dot(&h.normal, v).abs())
        .fold(S::infinity(), S::min)
}

pub fn is_generic<S: Scalar>(p: &Polytope<S>, v: &[S], delta: S) -> bool {
    min_genericity(p, v) >= delta
}

/// First point of the Halton sequence (indices `seed + 1, seed + 2, ...`), mapped to
/// the cube `[-1, 1]^n` and normalized, that is generic for `p` with margin `delta`.
pub fn generic_direction<S: Scalar>(p: &Polytope<S>, seed: u64, delta: S, max_attempts: usize) -> Result<Vec<S>> {
    let n = p.dim();
    for attempt in 0..max_attempts as u64 {
        let index = seed + attempt + 1;
        let raw: Vec<S> = PRIMES[..n]
            .iter()
            .map(|&b| S::lit(2.0 * radical_inverse(index, b) - 1.0))
            .collect();
        let len = norm(&raw);
        if len < S::lit(1e-3) {
            continue;
        }
        let v: Vec<S> = raw.iter().map(|&x| x / len).collect();
        if is_generic(p, &v, delta) {
            return Ok(v);
        }
    }
    Err(Error::GenericityFailure {
        delta: delta.to_f64_lossy(),
        attempts: max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polytope {
        Polytope::from_vertices(&[vec![-1.0, -1.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![-1.0, 1.0]]).unwrap()
    }

    #[test]
    fn axis_direction_rejected_for_square() {
        assert!(!is_generic(&square(), &[1.0, 0.0], 1e-3));
        assert!(is_generic(&square(), &[0.6, 0.8], 1e-3));
    }

    #[test]
    fn cube_direction_has_margin() {
        let pts: Vec<Vec<f64>> = (0..8)
            .map(|k| (0..3).map(|i| if k >> i & 1 == 1 { 1.0 } else { -1.0 }).collect())
            .collect();
        let cube = Polytope::from_vertices(&pts).unwrap();
        let v = generic_direction(&cube, 0, 1e-3, 100).unwrap();
        assert!((norm(&v) - 1.0).abs() < 1e-14);
        assert!(v.iter().all(|x| x.abs() >= 1e-3));
        assert_eq!(v, generic_direction(&cube, 0, 1e-3, 100).unwrap());
    }

    #[test]
    fn simplex_direction_checks_all_facets() {
        let p: Polytope = Polytope::from_vertices(&[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])
            .unwrap();
        let v = generic_direction(&p, 3, 1e-3, 100).unwrap();
        assert_eq!(p.halfspaces().len(), 4);
        for h in p.halfspaces() {
            assert!(dot(&h.normal, &v).abs() >= 1e-3);
        }
    }

    #[test]
    fn impossible_margin_fails() {
        let err = generic_direction(&square(), 0, 0.99, 50).unwrap_err();
        assert!(matches!(err, Error::GenericityFailure { .. }));
    }
}
