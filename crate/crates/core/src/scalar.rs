//! Floating-point scalar abstraction shared by the geometric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar the geometry, quadrature and isotropy kernels are generic over.
///
/// Implemented for `f32` and `f64`. The solvers in `transport` and `stability`
/// are pinned to `f64` because their stopping tolerances are.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Default geometric tolerance for this precision.
    fn default_geo_eps() -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn default_geo_eps() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn default_geo_eps() -> Self {
        1e-4
    }
}

/// `n!` as a scalar. Exact in `f64` for every argument this crate uses (n ≤ 20).
pub fn factorial<S: Scalar>(n: u32) -> S {
    let mut acc = S::one();
    for k in 2..=n {
        acc *= S::lit(k as f64);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert_eq!(factorial::<f64>(0), 1.0);
        assert_eq!(factorial::<f64>(5), 120.0);
        assert_eq!(factorial::<f32>(4), 24.0);
    }
}
