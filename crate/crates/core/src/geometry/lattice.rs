use std::collections::BTreeSet;

use crate::linalg::{centroid, orthonormalize, sub};
use crate::scalar::Scalar;

use super::Halfspace;

/// A proper face of a polytope.
#[derive(Clone, Debug)]
pub struct Face<S = f64> {
    dim: usize,
    vertex_ids: Vec<usize>,
    halfspace_ids: Vec<usize>,
    basis: Vec<Vec<S>>,
    relint_point: Vec<S>,
}

impl<S: Scalar> Face<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Indices into the polytope's vertex list, sorted.
    pub fn vertex_ids(&self) -> &[usize] {
        &self.vertex_ids
    }

    /// Indices of the halfspaces tight on the whole face, sorted.
    pub fn halfspace_ids(&self) -> &[usize] {
        &self.halfspace_ids
    }

    /// Orthonormal basis of the linear space parallel to the affine hull.
    pub fn basis(&self) -> &[Vec<S>] {
        &self.basis
    }

    /// Vertex centroid, a relative-interior point and the origin of the face chart.
    pub fn relint_point(&self) -> &[S] {
        &self.relint_point
    }

    /// Chart coordinates `y` of an ambient point `x` in the affine hull.
    pub fn to_chart(&self, x: &[S]) -> Vec<S> {
        let d = sub(x, &self.relint_point);
        self.basis.iter().map(|b| crate::linalg::dot(b, &d)).collect()
    }

    /// Ambient point for chart coordinates `y`.
    pub fn from_chart(&self, y: &[S]) -> Vec<S> {
        let mut x = self.relint_point.clone();
        for (b, &yk) in self.basis.iter().zip(y) {
            for (xi, &bi) in x.iter_mut().zip(b) {
                *xi += yk * bi;
            }
        }
        x
    }
}

/// All proper faces of a polytope, grouped by dimension.
///
/// `faces(n - 1)[i]` is the facet supported by halfspace `i`.
#[derive(Clone, Debug)]
pub struct FaceLattice<S = f64> {
    by_dim: Vec<Vec<Face<S>>>,
}

impl<S: Scalar> FaceLattice<S> {
    pub(super) fn build(dim: usize, vertices: &[Vec<S>], halfspaces: &[Halfspace<S>], eps: S) -> Self {
        let incidence: Vec<BTreeSet<usize>> = halfspaces
            .iter()
            .map(|h| {
                vertices
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| h.excess(v).abs() <= eps)
                    .map(|(k, _)| k)
                    .collect()
            })
            .collect();

        // closure of the facet vertex sets under intersection
        let mut seen: BTreeSet<BTreeSet<usize>> = incidence.iter().cloned().collect();
        let mut frontier: Vec<BTreeSet<usize>> = incidence.clone();
        while let Some(set) = frontier.pop() {
            for facet in &incidence {
                let meet: BTreeSet<usize> = set.intersection(facet).copied().collect();
                if !meet.is_empty() && meet != set && seen.insert(meet.clone()) {
                    frontier.push(meet);
                }
            }
        }

        let tol = eps.sqrt().max(eps);
        let make_face = |set: &BTreeSet<usize>| -> Face<S> {
            let pts: Vec<Vec<S>> = set.iter().map(|&k| vertices[k].clone()).collect();
            let diffs: Vec<Vec<S>> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
            let basis = orthonormalize(&diffs, tol);
            let halfspace_ids = incidence
                .iter()
                .enumerate()
                .filter(|(_, inc)| set.is_subset(inc))
                .map(|(i, _)| i)
                .collect();
            Face {
                dim: basis.len(),
                vertex_ids: set.iter().copied().collect(),
                halfspace_ids,
                basis,
                relint_point: centroid(&pts),
            }
        };

        let mut by_dim: Vec<Vec<Face<S>>> = vec![Vec::new(); dim];
        // facets keep the halfspace order
        by_dim[dim - 1] = incidence.iter().map(make_face).collect();
        for set in &seen {
            if incidence.contains(set) {
                continue;
            }
            let face = make_face(set);
            if face.dim < dim - 1 {
                by_dim[face.dim].push(face);
            }
        }
        for faces in by_dim.iter_mut().take(dim - 1) {
            faces.sort_by(|a, b| a.vertex_ids.cmp(&b.vertex_ids));
        }
        Self { by_dim }
    }

    /// Faces of dimension `d`, `0 <= d < n`.
    pub fn faces(&self, d: usize) -> &[Face<S>] {
        &self.by_dim[d]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.by_dim.iter().map(Vec::len).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Face<S>> {
        self.by_dim.iter().flatten()
    }

    /// Index of the face in `faces(d)` with exactly this vertex set.
    pub fn find(&self, d: usize, vertex_ids: &[usize]) -> Option<usize> {
        self.by_dim[d].iter().position(|f| f.vertex_ids == vertex_ids)
    }
}
