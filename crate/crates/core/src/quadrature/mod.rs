//! Exact integration of polynomials over simplices, polytopes and faces.
//!
//! Every integral is reduced to monomials in barycentric coordinates on a simplex,
//! where `∫_S λ^a = d! · Π a_k! / (|a| + d)! · vol_d(S)`.

mod polynomial;

pub use polynomial::{Polynomial, DEGREE_CAP};

use crate::error::{Error, Result};
use crate::geometry::{Face, GeometryOptions, Halfspace, Polytope, Simplex};
use crate::linalg::{add, Matrix};
use crate::scalar::{factorial, Scalar};

/// `y ↦ A y + c` from ℝᵈ to ℝⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap<S = f64> {
    matrix: Matrix<S>,
    offset: Vec<S>,
}

impl<S: Scalar> AffineMap<S> {
    pub fn new(matrix: Matrix<S>, offset: Vec<S>) -> Self {
        assert_eq!(matrix.rows(), offset.len(), "affine map shape mismatch");
        Self { matrix, offset }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Matrix::identity(n), vec![S::zero(); n])
    }

    /// Chart of a face: orthonormal basis columns, origin at the face's relint point.
    pub fn face_chart(face: &Face<S>) -> Self {
        let n = face.relint_point().len();
        let matrix = if face.dim() == 0 {
            Matrix::zeros(n, 0)
        } else {
            Matrix::from_columns(face.basis())
        };
        Self::new(matrix, face.relint_point().to_vec())
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.matrix
    }

    pub fn offset(&self) -> &[S] {
        &self.offset
    }

    pub fn domain_dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, y: &[S]) -> Vec<S> {
        add(&self.matrix.mul_vec(y), &self.offset)
    }

    /// `self ∘ inner`.
    pub fn then_after(&self, inner: &Self) -> Self {
        Self::new(self.matrix.mul(&inner.matrix), self.apply(&inner.offset))
    }

    pub fn inverse(&self) -> Option<Self> {
        let inv = self.matrix.inverse(S::epsilon())?;
        let c = inv.mul_vec(&self.offset).iter().map(|&x| -x).collect();
        Some(Self::new(inv, c))
    }

    pub fn determinant(&self) -> S {
        self.matrix.determinant()
    }
}

/// Barycentric moment `∫_S λ^a / vol(S) = d! Π a_k! / (|a| + d)!`.
fn barycentric_moment<S: Scalar>(a: &[u32]) -> S {
    let d = a.len() as u32 - 1;
    let total: u32 = a.iter().sum();
    let num = a.iter().fold(factorial::<S>(d), |acc, &k| acc * factorial::<S>(k));
    num / factorial::<S>(total + d)
}

/// Map from barycentric coordinates `(λ_0, …, λ_d)` to the simplex, `x = Σ λ_k v_k`.
fn barycentric_map<S: Scalar>(s: &Simplex<S>) -> AffineMap<S> {
    let n = s.points()[0].len();
    AffineMap::new(Matrix::from_columns(s.points()), vec![S::zero(); n])
}

/// Integral of a polynomial given in barycentric variables over a simplex of volume `vol`.
fn integrate_barycentric<S: Scalar>(q: &Polynomial<S>, vol: S) -> S {
    q.terms().map(|(e, c)| c * barycentric_moment::<S>(e)).sum::<S>() * vol
}

fn check_degree<S: Scalar>(p: &Polynomial<S>) -> Result<()> {
    // products with weights may add one degree
    let degree = p.degree();
    if degree > DEGREE_CAP + 2 {
        return Err(Error::DegreeTooHigh {
            degree,
            cap: DEGREE_CAP,
        });
    }
    Ok(())
}

/// `∫_S x^α dx` over a (possibly lower-dimensional) simplex, w.r.t. its own
/// `d`-dimensional volume.
pub fn integrate_monomial_simplex<S: Scalar>(exponents: &[u32], s: &Simplex<S>, eps: S) -> Result<S> {
    let p = Polynomial::from_terms(exponents.len(), [(exponents.to_vec(), S::one())])?;
    integrate_simplex(&p, s, eps)
}

/// `∫_S p` over a nondegenerate simplex.
pub fn integrate_simplex<S: Scalar>(p: &Polynomial<S>, s: &Simplex<S>, eps: S) -> Result<S> {
    let n = s.points()[0].len();
    if p.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.dim(),
        });
    }
    check_degree(p)?;
    let g = s.gram_determinant();
    if s.dim() > 0 && g <= eps * eps {
        return Err(Error::DegenerateSimplex(g.to_f64_lossy()));
    }
    Ok(integrate_simplex_unchecked(p, s))
}

fn integrate_simplex_unchecked<S: Scalar>(p: &Polynomial<S>, s: &Simplex<S>) -> S {
    let q = p.compose(&barycentric_map(s));
    integrate_barycentric(&q, s.volume())
}

/// `∫_S p · w` where `w` is the affine interpolant of `node_values` at the simplex vertices.
pub fn integrate_simplex_linear_weight<S: Scalar>(p: &Polynomial<S>, s: &Simplex<S>, node_values: &[S]) -> S {
    let q = p.compose(&barycentric_map(s));
    let w = Polynomial::affine(node_values, S::zero());
    integrate_barycentric(&q.mul(&w), s.volume())
}

/// `(∫_S p λ_0, …, ∫_S p λ_d)` for the barycentric coordinates `λ_k` of the simplex.
pub fn barycentric_moments<S: Scalar>(p: &Polynomial<S>, s: &Simplex<S>) -> Vec<S> {
    let q = p.compose(&barycentric_map(s));
    let vol = s.volume();
    let m = s.points().len();
    (0..m)
        .map(|k| integrate_barycentric(&q.mul(&Polynomial::variable(m, k)), vol))
        .collect()
}

/// `∫_P p dx` by summation over the fan triangulation.
pub fn integrate_polytope<S: Scalar>(p: &Polynomial<S>, poly: &Polytope<S>) -> Result<S> {
    integrate_over(p, poly, &poly.triangulate())
}

/// `∫_P p dx` over a caller-supplied triangulation of `P`.
pub fn integrate_over<S: Scalar>(p: &Polynomial<S>, poly: &Polytope<S>, simplices: &[Simplex<S>]) -> Result<S> {
    if p.dim() != poly.dim() {
        return Err(Error::DimensionMismatch {
            expected: poly.dim(),
            got: p.dim(),
        });
    }
    check_degree(p)?;
    Ok(simplices.iter().map(|s| integrate_simplex_unchecked(p, s)).sum())
}

/// Affine functional `y ↦ <a, y> + b` on a face chart.
#[derive(Clone, Debug, PartialEq)]
pub struct AffinePiece<S = f64> {
    pub a: Vec<S>,
    pub b: S,
}

impl<S: Scalar> AffinePiece<S> {
    pub fn eval(&self, y: &[S]) -> S {
        crate::linalg::dot(&self.a, y) + self.b
    }

    pub fn scaled(&self, s: S) -> Self {
        Self {
            a: self.a.iter().map(|&x| x * s).collect(),
            b: self.b * s,
        }
    }
}

/// Weight multiplying the integrand on a face.
#[derive(Clone, Debug, PartialEq)]
pub enum FaceWeight<S = f64> {
    One,
    /// `min_k piece_k(y)` in face-chart coordinates.
    MinOfAffine(Vec<AffinePiece<S>>),
}

/// `∫_F p · w dvol_{dim F}`. Face charts are orthonormal, so no metric factor appears.
pub fn integrate_face<S: Scalar>(p: &Polynomial<S>, poly: &Polytope<S>, face_dim: usize, face_index: usize, weight: &FaceWeight<S>) -> Result<S> {
    if p.dim() != poly.dim() {
        return Err(Error::DimensionMismatch {
            expected: poly.dim(),
            got: p.dim(),
        });
    }
    check_degree(p)?;
    let face = &poly.face_lattice().faces(face_dim)[face_index];
    match weight {
        FaceWeight::One => Ok(poly
            .triangulate_face(face_dim, face_index)
            .iter()
            .map(|s| integrate_simplex_unchecked(p, s))
            .sum()),
        FaceWeight::MinOfAffine(pieces) => {
            if pieces.is_empty() {
                return Err(Error::ChartMismatch("empty piece list".into()));
            }
            if let Some(bad) = pieces.iter().find(|q| q.a.len() != face_dim) {
                return Err(Error::ChartMismatch(format!(
                    "piece has {} chart coordinates, face has dimension {face_dim}",
                    bad.a.len()
                )));
            }
            if face_dim == 0 {
                let m = pieces.iter().map(|q| q.b).fold(S::infinity(), S::min);
                return Ok(p.eval(face.relint_point()) * m);
            }
            let chart = AffineMap::face_chart(face);
            let pulled = p.compose(&chart);
            let mut total = S::zero();
            for (k, cell) in min_cells(poly, face, pieces)? {
                let weight = Polynomial::affine(&pieces[k].a, pieces[k].b);
                let integrand = pulled.mul(&weight);
                total += cell
                    .triangulate()
                    .iter()
                    .map(|s| integrate_simplex_unchecked(&integrand, s))
                    .sum::<S>();
            }
            Ok(total)
        }
    }
}

/// The face as a full-dimensional polytope in its own chart.
pub fn face_in_chart<S: Scalar>(poly: &Polytope<S>, face: &Face<S>) -> Result<Polytope<S>> {
    let pts: Vec<Vec<S>> = face
        .vertex_ids()
        .iter()
        .map(|&k| face.to_chart(&poly.vertices()[k]))
        .collect();
    Polytope::from_vertices_with(
        &pts,
        &GeometryOptions {
            eps: poly.eps(),
            ..GeometryOptions::default()
        },
    )
}

/// Cells `{y ∈ F : piece_k(y) ≤ piece_j(y) ∀ j}` that are full-dimensional in the chart.
pub fn min_cells<S: Scalar>(poly: &Polytope<S>, face: &Face<S>, pieces: &[AffinePiece<S>]) -> Result<Vec<(usize, Polytope<S>)>> {
    let base = face_in_chart(poly, face)?;
    if pieces.len() == 1 {
        return Ok(vec![(0, base)]);
    }
    let opts = GeometryOptions {
        eps: poly.eps(),
        max_vertices: 1024,
        max_halfspaces: 1024,
    };
    let mut cells = Vec::new();
    for (k, pk) in pieces.iter().enumerate() {
        let mut hs: Vec<Halfspace<S>> = base.halfspaces().to_vec();
        let mut identical_earlier = false;
        for (j, pj) in pieces.iter().enumerate() {
            if j == k {
                continue;
            }
            // pk - pj <= 0
            let normal: Vec<S> = pk.a.iter().zip(&pj.a).map(|(&x, &y)| x - y).collect();
            match Halfspace::new(normal, pj.b - pk.b) {
                Some(h) => hs.push(h),
                None => {
                    // parallel pieces: either always above, always below or identical
                    if pk.b > pj.b + poly.eps() || (j < k && (pk.b - pj.b).abs() <= poly.eps()) {
                        identical_earlier = true;
                    }
                }
            }
        }
        if identical_earlier {
            continue;
        }
        match Polytope::from_halfspaces_with(&hs, &opts) {
            Ok(cell) => cells.push((k, cell)),
            Err(Error::Empty) | Err(Error::DegenerateInput(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(cells)
}
