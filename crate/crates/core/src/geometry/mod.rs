//! Convex polytopes in dual V/H representation with their face lattice.
//!
//! Enumeration is combinatorial brute force over `n`-subsets, which is fine for
//! the desk-scale inputs this crate targets (≤ 64 vertices or halfspaces, n ≤ 4).

mod direction;
mod lattice;
mod simplex;

pub use direction::{generic_direction, is_generic, min_genericity};
pub use lattice::{Face, FaceLattice};
pub use simplex::Simplex;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::linalg::{affine_rank, dot, norm, orthogonal_complement_vector, sub, Matrix};
use crate::scalar::Scalar;

/// Largest ambient dimension accepted from users.
pub const MAX_DIM: usize = 4;

/// Tolerances and caps for polytope construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryOptions<S> {
    pub eps: S,
    pub max_vertices: usize,
    pub max_halfspaces: usize,
}

impl<S: Scalar> Default for GeometryOptions<S> {
    fn default() -> Self {
        Self {
            eps: S::default_geo_eps(),
            max_vertices: 64,
            max_halfspaces: 64,
        }
    }
}

/// `<normal, x> <= offset` with a unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace<S = f64> {
    pub normal: Vec<S>,
    pub offset: S,
}

impl<S: Scalar> Halfspace<S> {
    /// Normalizes `normal` to unit length; `None` for a zero normal.
    pub fn new(normal: Vec<S>, offset: S) -> Option<Self> {
        let len = norm(&normal);
        if len <= S::epsilon() {
            return None;
        }
        Some(Self {
            normal: normal.iter().map(|&x| x / len).collect(),
            offset: offset / len,
        })
    }

    /// Signed slack `<u, x> - b` (positive outside).
    pub fn excess(&self, x: &[S]) -> S {
        dot(&self.normal, x) - self.offset
    }

    fn same_as(&self, other: &Self, eps: S) -> bool {
        (self.offset - other.offset).abs() <= eps
            && self
                .normal
                .iter()
                .zip(&other.normal)
                .all(|(&a, &b)| (a - b).abs() <= eps)
    }
}

/// Full-dimensional bounded convex polytope.
#[derive(Clone, Debug)]
pub struct Polytope<S = f64> {
    dim: usize,
    vertices: Vec<Vec<S>>,
    halfspaces: Vec<Halfspace<S>>,
    lattice: FaceLattice<S>,
    eps: S,
}

impl<S: Scalar> Polytope<S> {
    pub fn from_vertices(points: &[Vec<S>]) -> Result<Self> {
        Self::from_vertices_with(points, &GeometryOptions::default())
    }

    pub fn from_vertices_with(points: &[Vec<S>], opts: &GeometryOptions<S>) -> Result<Self> {
        let dim = check_points(points)?;
        let eps = opts.eps;
        let points = dedup_points(points, eps);
        if points.len() > opts.max_vertices {
            return Err(Error::TooManyVertices {
                count: points.len(),
                cap: opts.max_vertices,
            });
        }
        if affine_rank(&points, eps) < dim {
            return Err(Error::DegenerateInput(format!(
                "points do not span R^{dim} affinely"
            )));
        }

        let mut halfspaces: Vec<Halfspace<S>> = Vec::new();
        for subset in (0..points.len()).combinations(dim) {
            let base = &points[subset[0]];
            let diffs: Vec<Vec<S>> = subset[1..].iter().map(|&k| sub(&points[k], base)).collect();
            let Some(normal) = orthogonal_complement_vector(&diffs, dim, eps) else {
                continue;
            };
            let offset = dot(&normal, base);
            let (lo, hi) = points.iter().fold((S::zero(), S::zero()), |(lo, hi), p| {
                let s = dot(&normal, p) - offset;
                (lo.min(s), hi.max(s))
            });
            let hs = if hi <= eps {
                Halfspace { normal, offset }
            } else if lo >= -eps {
                Halfspace {
                    normal: normal.iter().map(|&x| -x).collect(),
                    offset: -offset,
                }
            } else {
                continue;
            };
            if !halfspaces.iter().any(|h| h.same_as(&hs, merge_tol(eps))) {
                halfspaces.push(hs);
            }
        }

        let vertices: Vec<Vec<S>> = points
            .iter()
            .filter(|p| {
                let tight: Vec<Vec<S>> = halfspaces
                    .iter()
                    .filter(|h| h.excess(p).abs() <= eps)
                    .map(|h| h.normal.clone())
                    .collect();
                crate::linalg::orthonormalize(&tight, eps).len() == dim
            })
            .cloned()
            .collect();
        let halfspaces = supporting(halfspaces, &vertices, dim, eps);
        Self::from_parts(dim, vertices, halfspaces, eps)
    }

    pub fn from_halfspaces(halfspaces: &[Halfspace<S>]) -> Result<Self> {
        Self::from_halfspaces_with(halfspaces, &GeometryOptions::default())
    }

    pub fn from_halfspaces_with(input: &[Halfspace<S>], opts: &GeometryOptions<S>) -> Result<Self> {
        let eps = opts.eps;
        let dim = input
            .first()
            .map(|h| h.normal.len())
            .ok_or_else(|| Error::DegenerateInput("no halfspaces".into()))?;
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::DegenerateInput(format!("unsupported dimension {dim}")));
        }
        let mut halfspaces: Vec<Halfspace<S>> = Vec::new();
        for h in input {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.normal.len(),
                });
            }
            let h = Halfspace::new(h.normal.clone(), h.offset)
                .ok_or_else(|| Error::DegenerateInput("zero normal vector".into()))?;
            if !halfspaces.iter().any(|g| g.same_as(&h, eps)) {
                halfspaces.push(h);
            }
        }
        if halfspaces.len() > opts.max_halfspaces {
            return Err(Error::TooManyVertices {
                count: halfspaces.len(),
                cap: opts.max_halfspaces,
            });
        }
        if !normals_positively_span(&halfspaces, dim, eps) {
            return Err(Error::Unbounded);
        }

        let mut vertices: Vec<Vec<S>> = Vec::new();
        let merge = merge_tol(eps);
        for subset in (0..halfspaces.len()).combinations(dim) {
            let a = Matrix::from_rows(
                &subset
                    .iter()
                    .map(|&k| halfspaces[k].normal.clone())
                    .collect::<Vec<_>>(),
            );
            let b: Vec<S> = subset.iter().map(|&k| halfspaces[k].offset).collect();
            let Some(x) = a.solve(&b, eps) else {
                continue;
            };
            if halfspaces.iter().all(|h| h.excess(&x) <= eps)
                && !vertices.iter().any(|v| crate::linalg::dist(v, &x) <= merge)
            {
                vertices.push(x);
            }
        }
        if vertices.is_empty() {
            return Err(Error::Empty);
        }
        if affine_rank(&vertices, eps) < dim {
            return Err(Error::DegenerateInput(
                "halfspace intersection is not full-dimensional".into(),
            ));
        }
        let halfspaces = supporting(halfspaces, &vertices, dim, eps);
        Self::from_parts(dim, vertices, halfspaces, eps)
    }

    fn from_parts(
        dim: usize,
        vertices: Vec<Vec<S>>,
        halfspaces: Vec<Halfspace<S>>,
        eps: S,
    ) -> Result<Self> {
        let lattice = FaceLattice::build(dim, &vertices, &halfspaces, eps);
        Ok(Self {
            dim,
            vertices,
            halfspaces,
            lattice,
            eps,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<S>] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[Halfspace<S>] {
        &self.halfspaces
    }

    pub fn eps(&self) -> S {
        self.eps
    }

    pub fn face_lattice(&self) -> &FaceLattice<S> {
        &self.lattice
    }

    /// Facet `i`, whose affine hull is the boundary of halfspace `i`.
    pub fn facet(&self, i: usize) -> &Face<S> {
        &self.lattice.faces(self.dim - 1)[i]
    }

    pub fn num_facets(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn contains(&self, x: &[S]) -> bool {
        self.halfspaces.iter().all(|h| h.excess(x) <= self.eps)
    }

    pub fn vertex_centroid(&self) -> Vec<S> {
        crate::linalg::centroid(&self.vertices)
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<S>, Vec<S>) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices {
            for k in 0..self.dim {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Image under `x ↦ A x + c` for invertible `A`.
    pub fn map_affine(&self, a: &Matrix<S>, c: &[S]) -> Result<Self> {
        let pts: Vec<Vec<S>> = self
            .vertices
            .iter()
            .map(|v| crate::linalg::add(&a.mul_vec(v), c))
            .collect();
        Self::from_vertices_with(
            &pts,
            &GeometryOptions {
                eps: self.eps,
                ..GeometryOptions::default()
            },
        )
    }

    pub fn translate(&self, t: &[S]) -> Result<Self> {
        self.map_affine(&Matrix::identity(self.dim), t)
    }

    /// Same vertex set up to permutation, within `tol`.
    pub fn same_vertices(&self, other: &Self, tol: S) -> bool {
        self.vertices.len() == other.vertices.len()
            && self.vertices.iter().all(|v| {
                other
                    .vertices
                    .iter()
                    .any(|w| crate::linalg::dist(v, w) <= tol)
            })
    }

    /// Triangulation of `P` by coning the boundary triangulation from the vertex centroid.
    pub fn triangulate(&self) -> Vec<Simplex<S>> {
        self.triangulate_from(&self.vertex_centroid())
    }

    /// Triangulation coned from an arbitrary apex in `P`; simplices of zero volume
    /// (facets through the apex) are skipped.
    pub fn triangulate_from(&self, apex: &[S]) -> Vec<Simplex<S>> {
        let facets = self.lattice.faces(self.dim - 1);
        let mut out = Vec::new();
        for (i, _) in facets.iter().enumerate() {
            if self.halfspaces[i].excess(apex).abs() <= self.eps {
                continue;
            }
            for s in self.triangulate_face(self.dim - 1, i) {
                let mut pts = Vec::with_capacity(self.dim + 1);
                pts.push(apex.to_vec());
                pts.extend(s.points().iter().cloned());
                out.push(Simplex::new_unchecked(pts));
            }
        }
        out
    }

    /// Triangulation of the face `(dim, index)` by recursive coning from face centroids.
    pub fn triangulate_face(&self, dim: usize, index: usize) -> Vec<Simplex<S>> {
        let face = &self.lattice.faces(dim)[index];
        let pts = |ids: &[usize]| ids.iter().map(|&k| self.vertices[k].clone()).collect::<Vec<_>>();
        match dim {
            0 | 1 => vec![Simplex::new_unchecked(pts(face.vertex_ids()))],
            _ => {
                let apex = face.relint_point().to_vec();
                let mut out = Vec::new();
                for (j, sub) in self.lattice.faces(dim - 1).iter().enumerate() {
                    if !sub.vertex_ids().iter().all(|v| face.vertex_ids().contains(v)) {
                        continue;
                    }
                    for s in self.triangulate_face(dim - 1, j) {
                        let mut p = Vec::with_capacity(dim + 1);
                        p.push(apex.clone());
                        p.extend(s.points().iter().cloned());
                        out.push(Simplex::new_unchecked(p));
                    }
                }
                out
            }
        }
    }

    /// Volume as the sum over the triangulation.
    pub fn volume(&self) -> S {
        self.triangulate().iter().map(Simplex::volume).sum()
    }
}

fn check_points<S: Scalar>(points: &[Vec<S>]) -> Result<usize> {
    let dim = points
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::DegenerateInput("no points".into()))?;
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::DegenerateInput(format!("unsupported dimension {dim}")));
    }
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateInput("non-finite coordinate".into()));
    }
    Ok(dim)
}

/// Tolerance for merging numerically duplicated vertices and hyperplanes.
/// Halfspaces whose tight vertices span a facet.
fn supporting<S: Scalar>(halfspaces: Vec<Halfspace<S>>, vertices: &[Vec<S>], dim: usize, eps: S) -> Vec<Halfspace<S>> {
    halfspaces
        .into_iter()
        .filter(|h| {
            let tight: Vec<Vec<S>> = vertices.iter().filter(|v| h.excess(v).abs() <= eps).cloned().collect();
            tight.len() >= dim && affine_rank(&tight, eps) == dim - 1
        })
        .collect()
}

fn merge_tol<S: Scalar>(eps: S) -> S {
    (eps.sqrt() * S::lit(1e-2)).max(eps)
}

fn dedup_points<S: Scalar>(points: &[Vec<S>], eps: S) -> Vec<Vec<S>> {
    let mut out: Vec<Vec<S>> = Vec::new();
    for p in points {
        if !out.iter().any(|q| crate::linalg::dist(p, q) <= eps) {
            out.push(p.clone());
        }
    }
    out
}

fn rank<S: Scalar>(vectors: &[Vec<S>], eps: S) -> usize {
    crate::linalg::orthonormalize(vectors, eps.sqrt().max(eps)).len()
}

/// Whether the origin lies in the interior of the convex hull of the normals,
/// which is equivalent to boundedness of every nonempty intersection.
fn normals_positively_span<S: Scalar>(halfspaces: &[Halfspace<S>], dim: usize, eps: S) -> bool {
    let normals: Vec<Vec<S>> = halfspaces.iter().map(|h| h.normal.clone()).collect();
    if normals.len() <= dim || rank(&normals, eps) < dim {
        return false;
    }
    let opts = GeometryOptions {
        eps,
        max_vertices: usize::MAX,
        max_halfspaces: usize::MAX,
    };
    match Polytope::from_vertices_with(&normals, &opts) {
        Ok(hull) => hull.halfspaces().iter().all(|h| h.offset > eps),
        Err(_) => false,
    }
}
