//! Moments, isotropic position, the isotropic constant and first-order gradients of
//! moment functionals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::linalg::Matrix;
use crate::quadrature::{integrate_over, AffineMap, Polynomial};
use crate::scalar::Scalar;

/// Largest covariance condition number accepted by [`to_isotropic`].
pub const MAX_CONDITION: f64 = 1e8;

/// Tolerance on centroid and covariance for the isotropy precondition.
pub const ISOTROPY_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct BodyMoments<S = f64> {
    pub volume: S,
    pub centroid: Vec<S>,
    /// `(1 / vol) ∫_{K - c_K} x_i x_j dx`.
    pub covariance: Matrix<S>,
}

/// Integrals of `1`, `x_i` and `x_i x_j` (`i <= j`) in one pass over a triangulation.
fn raw_moments<S: Scalar>(p: &Polytope<S>) -> (S, Vec<S>, Matrix<S>) {
    let n = p.dim();
    let tri = p.triangulate();
    let int = |q: &Polynomial<S>| integrate_over(q, p, &tri).expect("moment integrands are valid");
    let vol = int(&Polynomial::one(n));
    let first: Vec<S> = (0..n).map(|i| int(&Polynomial::variable(n, i))).collect();
    let mut second = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = int(&Polynomial::variable(n, i).mul(&Polynomial::variable(n, j)));
            second[(i, j)] = v;
            second[(j, i)] = v;
        }
    }
    (vol, first, second)
}

pub fn moments<S: Scalar>(p: &Polytope<S>) -> BodyMoments<S> {
    let n = p.dim();
    let (vol, first, second) = raw_moments(p);
    let centroid: Vec<S> = first.iter().map(|&m| m / vol).collect();
    let mut covariance = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            covariance[(i, j)] = second[(i, j)] / vol - centroid[i] * centroid[j];
        }
    }
    BodyMoments {
        volume: vol,
        centroid,
        covariance,
    }
}

/// `max(‖c_P‖_∞, ‖cov(P) - I‖_max)`, zero exactly for isotropic bodies.
pub fn isotropy_defect<S: Scalar>(p: &Polytope<S>) -> S {
    let m = moments(p);
    let c = m.centroid.iter().fold(S::zero(), |a, &x| a.max(x.abs()));
    c.max(m.covariance.max_abs_diff(&Matrix::identity(p.dim())))
}

/// `Q = T(P - c_P)` with `T = cov(P)^{-1/2}`, together with the map `x ↦ T(x - c_P)`.
pub fn to_isotropic<S: Scalar>(p: &Polytope<S>) -> Result<(Polytope<S>, AffineMap<S>)> {
    let m = moments(p);
    let (vals, _) = m.covariance.symmetric_eigen();
    let max = vals.iter().copied().fold(S::zero(), S::max);
    let min = vals.iter().copied().fold(S::infinity(), S::min);
    if min <= S::zero() || (max / min).to_f64_lossy() > MAX_CONDITION {
        let cond = if min <= S::zero() { f64::INFINITY } else { (max / min).to_f64_lossy() };
        return Err(Error::IllConditioned(cond));
    }
    let t = m.covariance.symmetric_function(|x| S::one() / x.sqrt());
    let shift: Vec<S> = t.mul_vec(&m.centroid).iter().map(|&x| -x).collect();
    let map = AffineMap::new(t, shift);
    let q = p.map_affine(map.matrix(), map.offset())?;
    Ok((q, map))
}

/// `L_K = (det[∫_{K - c_K} x_i x_j] / vol^{n+2})^{1/(2n)}`.
pub fn isotropic_constant<S: Scalar>(p: &Polytope<S>) -> S {
    let n = p.dim();
    let m = moments(p);
    // ∫_{K-c} x x^T = vol · cov
    let det = m.covariance.scaled(m.volume).determinant();
    let l2n = det / m.volume.powi(n as i32 + 2);
    l2n.powf(S::one() / S::lit(2.0 * n as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    /// `det[∫ x_i x_j] / vol^{n+2}`, equal to `L_K^{2n}` on centered bodies.
    IsotropicConstant2n,
    Volume,
    /// `∫ ‖x‖²`.
    MomentOfInertia,
}

/// A functional `φ(K) = g(∫_K f_1, …, ∫_K f_m)` with a built-in combiner `g`.
#[derive(Clone, Debug)]
pub struct CompositeMomentFunctional<S = f64> {
    kind: MomentKind,
    dim: usize,
    integrands: Vec<Polynomial<S>>,
}

impl<S: Scalar> CompositeMomentFunctional<S> {
    /// Builds the functional for bodies in ℝⁿ and validates its gradient rule by
    /// central differences on a fixed probe body.
    pub fn new(kind: MomentKind, dim: usize) -> Result<Self> {
        if dim == 0 || dim > crate::geometry::MAX_DIM {
            return Err(Error::InvalidArgument(format!("unsupported dimension {dim}")));
        }
        let integrands = match kind {
            MomentKind::Volume => vec![Polynomial::one(dim)],
            MomentKind::MomentOfInertia => vec![Polynomial::norm_squared(dim)],
            MomentKind::IsotropicConstant2n => {
                let mut f = vec![Polynomial::one(dim)];
                for (i, j) in upper_pairs(dim) {
                    f.push(Polynomial::variable(dim, i).mul(&Polynomial::variable(dim, j)));
                }
                f
            }
        };
        let functional = Self { kind, dim, integrands };
        functional.validate_gradient()?;
        Ok(functional)
    }

    pub fn kind(&self) -> MomentKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn integrands(&self) -> &[Polynomial<S>] {
        &self.integrands
    }

    /// `(∫_P f_1, …, ∫_P f_m)`.
    pub fn integrals(&self, p: &Polytope<S>) -> Result<Vec<S>> {
        let tri = p.triangulate();
        self.integrands.iter().map(|f| integrate_over(f, p, &tri)).collect()
    }

    /// The combiner `g`.
    pub fn combine(&self, a: &[S]) -> S {
        match self.kind {
            MomentKind::Volume | MomentKind::MomentOfInertia => a[0],
            MomentKind::IsotropicConstant2n => {
                let n = self.dim;
                second_moment_matrix(n, &a[1..]).determinant() / a[0].powi(n as i32 + 2)
            }
        }
    }

    /// `∇g(a)`.
    pub fn gradient(&self, a: &[S]) -> Vec<S> {
        match self.kind {
            MomentKind::Volume | MomentKind::MomentOfInertia => vec![S::one()],
            MomentKind::IsotropicConstant2n => {
                let n = self.dim;
                let m = second_moment_matrix(n, &a[1..]);
                let g = self.combine(a);
                let inv = m.inverse(S::zero()).unwrap_or_else(|| Matrix::zeros(n, n));
                let mut out = vec![-S::lit(n as f64 + 2.0) * g / a[0]];
                for (i, j) in upper_pairs(n) {
                    let mult = if i == j { S::one() } else { S::lit(2.0) };
                    out.push(g * mult * inv[(i, j)]);
                }
                out
            }
        }
    }

    pub fn evaluate(&self, p: &Polytope<S>) -> Result<S> {
        self.check_dim(p)?;
        Ok(self.combine(&self.integrals(p)?))
    }

    /// `Σ_i ∂g/∂a_i(∫_P f) · f_i` without any precondition on `P`.
    pub fn gradient_polynomial(&self, p: &Polytope<S>) -> Result<Polynomial<S>> {
        self.check_dim(p)?;
        let grad = self.gradient(&self.integrals(p)?);
        Ok(self
            .integrands
            .iter()
            .zip(&grad)
            .fold(Polynomial::zero(self.dim), |acc, (f, &c)| acc.add(&f.scale(c))))
    }

    fn check_dim(&self, p: &Polytope<S>) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.dim(),
            });
        }
        Ok(())
    }

    fn validate_gradient(&self) -> Result<()> {
        let n = self.dim;
        let mut pts = vec![vec![S::zero(); n]];
        for i in 0..n {
            let mut v: Vec<S> = (0..n).map(|k| S::lit(0.1 * ((i + 2 * k) % 3) as f64)).collect();
            v[i] = S::lit(1.0 + 0.3 * i as f64);
            pts.push(v);
        }
        let probe = Polytope::from_vertices(&pts)?;
        let a = self.integrals(&probe)?;
        let grad = self.gradient(&a);
        let step = S::epsilon().cbrt();
        let tol = S::lit(1e3) * S::epsilon().powf(S::lit(2.0 / 3.0));
        let scale = self.combine(&a).abs().max(S::min_positive_value());
        for k in 0..a.len() {
            let h = step * a[k].abs().max(S::one());
            let mut plus = a.clone();
            let mut minus = a.clone();
            plus[k] += h;
            minus[k] -= h;
            let fd = (self.combine(&plus) - self.combine(&minus)) / (h + h);
            let err = (fd - grad[k]).abs() * a[k].abs().max(S::one()) / scale;
            if err > tol {
                return Err(Error::InvalidArgument(format!(
                    "gradient rule for {:?} disagrees with finite differences (component {k}, error {err})",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn second_moment_matrix<S: Scalar>(n: usize, upper: &[S]) -> Matrix<S> {
    let mut m = Matrix::zeros(n, n);
    for (&(i, j), &v) in upper_pairs(n).iter().zip(upper) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

/// `h_{φ,P} = Σ_i ∂g/∂a_i(∫_P f) · f_i`.
///
/// For [`MomentKind::IsotropicConstant2n`] the body must be isotropic; the result is then
/// `(‖x‖² - n - 2) / vol(P)³`.
pub fn h_function<S: Scalar>(phi: &CompositeMomentFunctional<S>, p: &Polytope<S>) -> Result<Polynomial<S>> {
    phi.check_dim(p)?;
    if phi.kind == MomentKind::IsotropicConstant2n {
        let tol = S::lit(ISOTROPY_TOL).max(S::lit(100.0) * S::epsilon());
        let defect = isotropy_defect(p);
        if defect > tol {
            return Err(Error::NotIsotropic(defect.to_f64_lossy()));
        }
        let n = p.dim();
        let vol = p.volume();
        return Ok(Polynomial::norm_squared(n)
            .sub(&Polynomial::constant(n, S::lit(n as f64 + 2.0)))
            .scale(S::one() / vol.powi(3)));
    }
    phi.gradient_polynomial(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Halfspace;

    fn cube(n: usize, a: f64) -> Polytope {
        let hs: Vec<Halfspace> = (0..n)
            .flat_map(|i| {
                [1.0, -1.0].map(|s| {
                    let mut u = vec![0.0; n];
                    u[i] = s;
                    Halfspace::new(u, a).unwrap()
                })
            })
            .collect();
        Polytope::from_halfspaces(&hs).unwrap()
    }

    fn triangle() -> Polytope {
        Polytope::from_vertices(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn square_moments() {
        let m = moments(&cube(2, 1.0));
        assert!((m.volume - 4.0).abs() < 1e-14);
        assert!(m.centroid.iter().all(|c| c.abs() < 1e-14));
        assert!(m.covariance.max_abs_diff(&Matrix::identity(2).scaled(1.0 / 3.0)) < 1e-14);
    }

    #[test]
    fn triangle_moments() {
        let m = moments(&triangle());
        assert!((m.volume - 0.5).abs() < 1e-15);
        assert!((m.centroid[0] - 1.0 / 3.0).abs() < 1e-15);
        let expected = Matrix::from_rows(&[vec![1.0 / 18.0, -1.0 / 36.0], vec![-1.0 / 36.0, 1.0 / 18.0]]);
        assert!(m.covariance.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn translation_equivariance() {
        let p = triangle();
        let q = p.translate(&[2.0, -3.0]).unwrap();
        let (a, b) = (moments(&p), moments(&q));
        assert!((a.volume - b.volume).abs() < 1e-14);
        assert!((b.centroid[0] - a.centroid[0] - 2.0).abs() < 1e-13);
        assert!(a.covariance.max_abs_diff(&b.covariance) < 1e-12);
    }

    #[test]
    fn cube_becomes_sqrt3_cube() {
        for n in 1..=3 {
            let (q, _) = to_isotropic(&cube(n, 1.0)).unwrap();
            assert!(q.same_vertices(&cube(n, 3f64.sqrt()), 1e-12), "n = {n}");
        }
    }

    #[test]
    fn isotropic_input_gives_identity() {
        let (_, map) = to_isotropic(&cube(3, 3f64.sqrt())).unwrap();
        assert!(map.matrix().max_abs_diff(&Matrix::identity(3)) < 1e-12);
        assert!(map.offset().iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn triangle_whitened() {
        let (q, _) = to_isotropic(&triangle()).unwrap();
        assert!(isotropy_defect(&q) < 1e-9);
        let (q2, _) = to_isotropic(&q).unwrap();
        assert!(isotropy_defect(&q2) < 1e-9);
    }

    #[test]
    fn ill_conditioned_rejected() {
        let p = Polytope::from_vertices(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1e-5], vec![0.0, 1e-5]]).unwrap();
        assert!(matches!(to_isotropic(&p), Err(Error::IllConditioned(c)) if c > 1e8));
    }

    #[test]
    fn isotropic_constants() {
        assert!((isotropic_constant(&cube(2, 1.0)) - 12f64.powf(-0.5)).abs() < 1e-13);
        assert!((isotropic_constant(&triangle()) - 108f64.powf(-0.25)).abs() < 1e-13);
    }

    #[test]
    fn simple_h_functions() {
        let p = triangle();
        let vol = CompositeMomentFunctional::new(MomentKind::Volume, 2).unwrap();
        assert!(h_function(&vol, &p).unwrap().max_coef_diff(&Polynomial::one(2)) < 1e-15);
        let mi = CompositeMomentFunctional::new(MomentKind::MomentOfInertia, 2).unwrap();
        assert!(h_function(&mi, &p).unwrap().max_coef_diff(&Polynomial::norm_squared(2)) < 1e-15);
        assert!((vol.evaluate(&p).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn isotropic_h_for_cube() {
        let c = cube(3, 3f64.sqrt());
        let phi = CompositeMomentFunctional::new(MomentKind::IsotropicConstant2n, 3).unwrap();
        let h = h_function(&phi, &c).unwrap();
        let v3 = (2.0 * 3f64.sqrt()).powi(3).powi(3);
        let expected = Polynomial::norm_squared(3).sub(&Polynomial::constant(3, 5.0)).scale(1.0 / v3);
        assert!(h.max_coef_diff(&expected) < 1e-18);
        // the general gradient rule agrees at isotropic bodies
        assert!(phi.gradient_polynomial(&c).unwrap().max_coef_diff(&expected) < 1e-15);
        assert!(matches!(h_function(&phi, &cube(3, 1.0)), Err(Error::NotIsotropic(_))));
    }

    #[test]
    fn functional_matches_lk_on_centered_bodies() {
        let c = cube(2, 1.0);
        let phi = CompositeMomentFunctional::new(MomentKind::IsotropicConstant2n, 2).unwrap();
        assert!((phi.evaluate(&c).unwrap() - isotropic_constant(&c).powi(4)).abs() < 1e-15);
    }

    #[test]
    fn single_precision_constant() {
        let t: Polytope<f32> = Polytope::from_vertices(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((isotropic_constant(&t) - 108f32.powf(-0.25)).abs() < 1e-5);
        assert!(CompositeMomentFunctional::<f32>::new(MomentKind::IsotropicConstant2n, 3).is_ok());
    }
}
