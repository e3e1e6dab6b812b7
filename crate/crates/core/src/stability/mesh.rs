use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{Polytope, Simplex};
use crate::linalg::{dot, Matrix, PointIndex};
use crate::quadrature::{barycentric_moments, face_in_chart, AffinePiece, Polynomial};

/// Conforming refinement of the fan triangulation of one face, carrying
/// piecewise-linear functions by their node values.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceMesh {
    dim: usize,
    index: usize,
    refinement: usize,
    nodes: Vec<Vec<f64>>,
    chart: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    volumes: Vec<f64>,
}

impl FaceMesh {
    /// Every simplex of the fan triangulation is split `refinement` times along each edge.
    /// Vertices are put in lexicographic order first so that shared faces are split alike.
    pub fn new(p: &Polytope, dim: usize, index: usize, refinement: usize) -> Result<Self> {
        if refinement == 0 {
            return Err(Error::InvalidArgument("refinement must be at least 1".into()));
        }
        if dim >= p.dim() || index >= p.face_lattice().faces(dim).len() {
            return Err(Error::TriangulationMismatch(format!("no face of dimension {dim} with index {index}")));
        }
        let face = &p.face_lattice().faces(dim)[index];
        let mut ids = PointIndex::new(1e-9 * (1.0 + diameter(p)));
        let mut simplices = Vec::new();
        let mut volumes = Vec::new();
        for s in p.triangulate_face(dim, index) {
            let mut pts = s.points().to_vec();
            pts.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
            for sub in Simplex::new_unchecked(pts).subdivide(refinement) {
                let vol = sub.volume();
                if dim > 0 && vol <= 0.0 {
                    continue;
                }
                simplices.push(sub.points().iter().map(|x| ids.insert(x).0).collect());
                volumes.push(vol);
            }
        }
        let nodes = ids.into_points();
        let chart = nodes.iter().map(|x| face.to_chart(x)).collect();
        Ok(Self {
            dim,
            index,
            refinement,
            nodes,
            chart,
            simplices,
            volumes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Node positions in ambient coordinates.
    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    /// Node positions in face-chart coordinates.
    pub fn chart_nodes(&self) -> &[Vec<f64>] {
        &self.chart
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn simplex(&self, k: usize) -> Simplex {
        Simplex::new_unchecked(self.simplices[k].iter().map(|&i| self.nodes[i].clone()).collect())
    }

    pub fn interpolate(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|x| f(x)).collect()
    }

    /// `M_ij = ∫ φ_i φ_j` for the hat functions `φ_i`.
    pub fn mass_matrix(&self) -> Matrix<f64> {
        let n = self.num_nodes();
        let mut m = Matrix::zeros(n, n);
        let d = self.dim as f64;
        for (s, &vol) in self.simplices.iter().zip(&self.volumes) {
            let c = vol / ((d + 1.0) * (d + 2.0));
            for &i in s {
                for &j in s {
                    m[(i, j)] += if i == j { 2.0 * c } else { c };
                }
            }
        }
        m
    }

    /// `b_i = ∫ h φ_i`, exact.
    pub fn load_vector(&self, h: &Polynomial) -> Vec<f64> {
        let mut b = vec![0.0; self.num_nodes()];
        for k in 0..self.simplices.len() {
            let local = barycentric_moments(h, &self.simplex(k));
            for (&i, v) in self.simplices[k].iter().zip(local) {
                b[i] += v;
            }
        }
        b
    }

    /// `∫ f g` for two piecewise-linear functions.
    pub fn product_integral(&self, f: &[f64], g: &[f64]) -> f64 {
        let d = self.dim as f64;
        self.simplices
            .iter()
            .zip(&self.volumes)
            .map(|(s, &vol)| {
                let fg: f64 = s.iter().map(|&i| f[i] * g[i]).sum();
                let sf: f64 = s.iter().map(|&i| f[i]).sum();
                let sg: f64 = s.iter().map(|&i| g[i]).sum();
                vol * (fg + sf * sg) / ((d + 1.0) * (d + 2.0))
            })
            .sum()
    }

    /// One unit row `a` per interior ridge; the interpolant is concave iff `<a, g> <= 0`
    /// for every row.
    ///
    /// Each row reads `g(q) - ℓ(q)`, where `q` is the node opposite the ridge in one
    /// simplex and `ℓ` is the affine extension of `g` from the other.
    pub fn hinge_constraints(&self) -> Result<Vec<Vec<(usize, f64)>>> {
        if self.dim == 0 {
            return Ok(Vec::new());
        }
        let mut ridges: HashMap<Vec<usize>, Vec<(usize, usize)>> = HashMap::new();
        for (k, s) in self.simplices.iter().enumerate() {
            for (pos, &opp) in s.iter().enumerate() {
                let mut key: Vec<usize> = s.iter().enumerate().filter(|&(q, _)| q != pos).map(|(_, &i)| i).collect();
                key.sort_unstable();
                ridges.entry(key).or_default().push((k, opp));
            }
        }
        let mut keys: Vec<&Vec<usize>> = ridges.keys().collect();
        keys.sort();
        let mut rows = Vec::new();
        for key in keys {
            match ridges[key].as_slice() {
                [(s1, _), (_, q)] => {
                    let verts = &self.simplices[*s1];
                    let d = self.dim;
                    let mut m = Matrix::zeros(d + 1, d + 1);
                    for (col, &i) in verts.iter().enumerate() {
                        for r in 0..d {
                            m[(r, col)] = self.chart[i][r];
                        }
                        m[(d, col)] = 1.0;
                    }
                    let mut rhs = self.chart[*q].clone();
                    rhs.push(1.0);
                    let beta = m
                        .solve(&rhs, 1e-14)
                        .ok_or_else(|| Error::TriangulationMismatch("degenerate mesh simplex".into()))?;
                    let mut row: Vec<(usize, f64)> = vec![(*q, 1.0)];
                    row.extend(verts.iter().zip(&beta).map(|(&i, &b)| (i, -b)));
                    let len = row.iter().map(|r| r.1 * r.1).sum::<f64>().sqrt();
                    rows.push(row.into_iter().map(|(i, a)| (i, a / len)).collect());
                }
                [_] => {}
                _ => return Err(Error::TriangulationMismatch("ridge shared by more than two simplices".into())),
            }
        }
        Ok(rows)
    }

    /// Largest hinge excess `max_k <a_k, g>`, zero for concave interpolants.
    pub fn hinge_violation(&self, values: &[f64]) -> Result<f64> {
        Ok(self
            .hinge_constraints()?
            .iter()
            .map(|row| row_dot(row, values))
            .fold(0.0, f64::max))
    }

    /// Affine pieces of the interpolant, one per simplex, in chart coordinates. For a concave
    /// interpolant their minimum is the interpolant itself.
    pub fn pieces(&self, values: &[f64]) -> Result<Vec<AffinePiece>> {
        let d = self.dim;
        self.simplices
            .iter()
            .map(|s| {
                let mut m = Matrix::zeros(d + 1, d + 1);
                for (r, &i) in s.iter().enumerate() {
                    for c in 0..d {
                        m[(r, c)] = self.chart[i][c];
                    }
                    m[(r, d)] = 1.0;
                }
                let rhs: Vec<f64> = s.iter().map(|&i| values[i]).collect();
                let sol = m
                    .solve(&rhs, 1e-14)
                    .ok_or_else(|| Error::TriangulationMismatch("degenerate mesh simplex".into()))?;
                Ok(AffinePiece {
                    a: sol[..d].to_vec(),
                    b: sol[d],
                })
            })
            .collect()
    }

    /// Checks the mesh covers the face: the simplex volumes add up to the face volume.
    pub fn covers(&self, p: &Polytope) -> bool {
        if self.dim == 0 {
            return self.nodes.len() == 1;
        }
        let face = &p.face_lattice().faces(self.dim)[self.index];
        face_in_chart(p, face).map_or(false, |c| {
            let total: f64 = self.volumes.iter().sum();
            (total - c.volume()).abs() <= 1e-9 * c.volume().max(1.0)
        })
    }
}

pub(crate) fn row_dot(row: &[(usize, f64)], g: &[f64]) -> f64 {
    row.iter().map(|&(i, a)| a * g[i]).sum()
}

fn diameter(p: &Polytope) -> f64 {
    let (lo, hi) = p.bounding_box();
    let d: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
    dot(&d, &d).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::tests::cube;
    use crate::quadrature::{integrate_face, FaceWeight};

    #[test]
    fn segment_mesh() {
        let sq = cube(2, 1.0);
        let m = FaceMesh::new(&sq, 1, 0, 4).unwrap();
        assert_eq!(m.num_nodes(), 5);
        assert_eq!(m.simplices().len(), 4);
        let ones = vec![1.0; 5];
        assert!((m.product_integral(&ones, &ones) - 2.0).abs() < 1e-14);
        let mass = m.mass_matrix();
        let total: f64 = (0..5).flat_map(|i| (0..5).map(move |j| (i, j))).map(|ij| mass[ij]).sum();
        assert!((total - 2.0).abs() < 1e-14);
        assert_eq!(m.hinge_constraints().unwrap().len(), 3);
        let f = sq.facet(0);
        let tent = m.interpolate(|x| 1.0 - (f.to_chart(x)[0] - 0.2).abs());
        assert!(m.hinge_violation(&tent).unwrap() <= 1e-12);
        let valley = m.interpolate(|x| f.to_chart(x)[0].abs());
        assert!(m.hinge_violation(&valley).unwrap() > 0.1);
    }

    #[test]
    fn square_facet_mesh_is_conforming() {
        let c = cube(3, 1.0);
        for r in [1, 2, 3] {
            let m = FaceMesh::new(&c, 2, 0, r).unwrap();
            assert!(m.covers(&c));
            assert!(m.hinge_constraints().is_ok());
        }
    }

    #[test]
    fn load_vector_matches_face_integral() {
        let c = cube(3, 1.0);
        let h = Polynomial::norm_squared(3);
        let m = FaceMesh::new(&c, 2, 1, 3).unwrap();
        let total: f64 = m.load_vector(&h).iter().sum();
        let exact = integrate_face(&h, &c, 2, 1, &FaceWeight::One).unwrap();
        assert!((total - exact).abs() < 1e-12);
    }

    #[test]
    fn concavity_rows() {
        let c = cube(3, 1.0);
        let m = FaceMesh::new(&c, 2, 0, 3).unwrap();
        let affine = m.interpolate(|x| 2.0 * x[0] - x[1] + 0.5 * x[2]);
        let convex = m.interpolate(|x| x.iter().map(|v| v * v).sum());
        assert!(m.hinge_violation(&affine).unwrap() <= 1e-12);
        assert!(m.hinge_violation(&convex).unwrap() > 1e-3);
    }

    #[test]
    fn pieces_reproduce_concave_interpolant() {
        let sq = cube(2, 1.0);
        let m = FaceMesh::new(&sq, 1, 2, 4).unwrap();
        let g = m.interpolate(|x| -(x[0] * x[0] + x[1] * x[1]));
        let pieces = m.pieces(&g).unwrap();
        for (y, &v) in m.chart_nodes().iter().zip(&g) {
            let min = pieces.iter().map(|q| q.eval(y)).fold(f64::INFINITY, f64::min);
            assert!((min - v).abs() < 1e-12);
        }
    }
}
